//! Carry-save array multiplier generators.
//!
//! Both topologies share the AND-plane partial products and track pending bits
//! by column weight. After each adder row a [`StageSnapshot`] records every
//! pending bit with its weight, so the weighted sum can be checked against
//! `x * y` row by row.
//!
//! Conventional (`n - 1` carry-save rows of `n` adders, then an `n`-cell ripple
//! merge):
//!
//! * row `r` adds partial-product row `r` at weights `r ..= r + n - 1`; each
//!   adder takes the previous sum and the diagonally forwarded carry of its
//!   column, with `const_zero` in unused slots;
//! * the merge stage is one HA at weight `n` followed by FAs up to weight
//!   `2n - 1`.
//!
//! Proposed (`n - 2` carry-save rows, then a final row whose carries move to
//! the next column of the same row):
//!
//! * the first row also absorbs partial-product row 2 through the carry-in
//!   slots that are tied to zero in the conventional array, so one row fewer is
//!   needed to reach sum/carry form;
//! * in the final row the carry of column `k` replaces the zero input of column
//!   `k + 1`, and the carry of the top column is the product MSB. No separate
//!   merge stage exists.

use std::collections::VecDeque;

use crate::netlist::{CellKind, Circuit, CircuitBuilder, NetId, NetlistError};

pub const MIN_WIDTH: usize = 2;
/// Widths beyond this overflow the 64-bit product representation.
pub const MAX_WIDTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FirstRowStyle {
    /// Full adders with `const_zero` on the unused carry input.
    #[default]
    FaWithZeroCin,
    /// Half adders in the first carry-save row.
    HalfAdders,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Design {
    Conventional,
    Proposed,
}

impl Design {
    pub fn as_str(self) -> &'static str {
        match self {
            Design::Conventional => "conventional",
            Design::Proposed => "proposed",
        }
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("operand width {0} outside supported range {MIN_WIDTH}..={MAX_WIDTH}")]
    Width(usize),
    #[error("netlist error: {0}")]
    Netlist(#[from] NetlistError),
    #[error("no spare input available at weight {weight}")]
    NoSpareInput { weight: usize },
    #[error("assembly left {count} pending bits at weight {weight}")]
    Leftover { weight: usize, count: usize },
}

/// `n x n` grid of partial-product nets; entry `(i, j)` is `x[i] & y[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialProductMatrix {
    width: usize,
    entries: Vec<NetId>,
}

impl PartialProductMatrix {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize, j: usize) -> NetId {
        self.entries[j * self.width + i]
    }

    /// Row `j` (multiplier bit `j`), ordered by multiplicand bit.
    pub fn row(&self, j: usize) -> impl Iterator<Item = (usize, NetId)> + '_ {
        (0..self.width).map(move |i| (i + j, self.get(i, j)))
    }
}

/// Every bit still owed to the product after one adder row: resolved product
/// bits, pending column bits and partial-product rows not yet absorbed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageSnapshot {
    pub label: String,
    pub bits: Vec<(NetId, usize)>,
}

pub fn build_partial_products(
    b: &mut CircuitBuilder,
    x_inputs: &[NetId],
    y_inputs: &[NetId],
) -> Result<PartialProductMatrix, BuildError> {
    let n = x_inputs.len();
    if n < MIN_WIDTH || y_inputs.len() != n {
        return Err(BuildError::Width(n.min(y_inputs.len())));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (j, &y) in y_inputs.iter().enumerate() {
        for (i, &x) in x_inputs.iter().enumerate() {
            let pp = b.add_net(format!("pp_{i}_{j}"))?;
            b.add_cell(CellKind::And2, &[x, y], &[pp])?;
            entries.push(pp);
        }
    }
    Ok(PartialProductMatrix { width: n, entries })
}

/// Pending bits grouped by weight, plus the product bits already resolved.
struct Assembly {
    b: CircuitBuilder,
    zero: NetId,
    columns: Vec<VecDeque<NetId>>,
    product: Vec<Option<NetId>>,
    pp: PartialProductMatrix,
    absorbed: Vec<bool>,
    trace: Vec<StageSnapshot>,
}

impl Assembly {
    fn new(name: String, n: usize) -> Result<(Self, PartialProductMatrix), BuildError> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&n) {
            return Err(BuildError::Width(n));
        }
        let mut b = CircuitBuilder::new(name, n);
        let zero = b.add_net("zero")?;
        b.declare_const_zero(zero)?;
        let xs = (0..n).map(|i| b.add_net(format!("x{i}"))).collect::<Result<Vec<_>, _>>()?;
        let ys = (0..n).map(|i| b.add_net(format!("y{i}"))).collect::<Result<Vec<_>, _>>()?;
        b.declare_x_inputs(&xs)?;
        b.declare_y_inputs(&ys)?;
        let pp = build_partial_products(&mut b, &xs, &ys)?;
        let asm = Assembly {
            b,
            zero,
            columns: vec![VecDeque::new(); 2 * n + 1],
            product: vec![None; 2 * n],
            pp: pp.clone(),
            absorbed: vec![false; n],
            trace: Vec::new(),
        };
        Ok((asm, pp))
    }

    fn push_row(&mut self, pp: &PartialProductMatrix, j: usize) {
        self.absorbed[j] = true;
        for (w, net) in pp.row(j) {
            self.columns[w].push_back(net);
        }
    }

    /// Takes exactly `slots` inputs from column `w`, padding with `const_zero`.
    fn take(&mut self, w: usize, slots: usize) -> Vec<NetId> {
        let mut ins = Vec::with_capacity(slots);
        while ins.len() < slots {
            match self.columns[w].pop_front() {
                Some(net) => ins.push(net),
                None => ins.push(self.zero),
            }
        }
        ins
    }

    fn adder(&mut self, kind: CellKind, ins: &[NetId], tag: &str) -> Result<(NetId, NetId), BuildError> {
        let s = self.b.add_net(format!("{tag}_s"))?;
        let c = self.b.add_net(format!("{tag}_c"))?;
        self.b.add_cell(kind, ins, &[s, c])?;
        Ok((s, c))
    }

    /// One carry-save row: every column in `weights` is reduced by one adder;
    /// sums stay in place, carries move one weight up for the next row.
    fn carry_save_row(
        &mut self,
        row: usize,
        weights: std::ops::RangeInclusive<usize>,
        kind: CellKind,
    ) -> Result<(), BuildError> {
        let mut carries = Vec::new();
        let mut sums = Vec::new();
        for w in weights.clone() {
            if self.columns[w].len() > kind.input_count() {
                return Err(BuildError::Leftover {
                    weight: w,
                    count: self.columns[w].len(),
                });
            }
            let ins = self.take(w, kind.input_count());
            let (s, c) = self.adder(kind, &ins, &format!("r{row}_w{w}"))?;
            sums.push((w, s));
            carries.push((w + 1, c));
        }
        for (w, s) in sums {
            self.columns[w].push_back(s);
        }
        for (w, c) in carries {
            self.columns[w].push_back(c);
        }
        Ok(())
    }

    /// Moves a column holding exactly one bit into the product.
    fn resolve(&mut self, w: usize) -> Result<(), BuildError> {
        match self.columns[w].len() {
            1 => {
                self.product[w] = self.columns[w].pop_front();
                Ok(())
            }
            count => Err(BuildError::Leftover { weight: w, count }),
        }
    }

    fn snapshot(&mut self, label: String) {
        let mut bits: Vec<(NetId, usize)> = self
            .product
            .iter()
            .enumerate()
            .filter_map(|(w, p)| p.map(|net| (net, w)))
            .collect();
        for (w, col) in self.columns.iter().enumerate() {
            bits.extend(col.iter().map(|&net| (net, w)));
        }
        for (j, _) in self.absorbed.iter().enumerate().filter(|(_, done)| !**done) {
            bits.extend(self.pp.row(j).map(|(w, net)| (net, w)));
        }
        self.trace.push(StageSnapshot { label, bits });
    }

    fn finish(mut self) -> Result<(Circuit, Vec<StageSnapshot>), BuildError> {
        if let Some((w, col)) = self.columns.iter().enumerate().find(|(_, c)| !c.is_empty()) {
            return Err(BuildError::Leftover {
                weight: w,
                count: col.len(),
            });
        }
        let outputs = self
            .product
            .iter()
            .enumerate()
            .map(|(w, p)| p.ok_or(BuildError::Leftover { weight: w, count: 0 }))
            .collect::<Result<Vec<_>, _>>()?;
        self.b.declare_product_outputs(&outputs)?;
        let circuit = self.b.seal()?;
        debug_assert!(circuit.validate().is_ok());
        Ok((circuit, self.trace))
    }
}

pub fn build_conventional(n: usize, style: FirstRowStyle) -> Result<Circuit, BuildError> {
    build_conventional_traced(n, style).map(|(c, _)| c)
}

pub fn build_proposed(n: usize) -> Result<Circuit, BuildError> {
    build_proposed_traced(n).map(|(c, _)| c)
}

pub fn build(design: Design, n: usize) -> Result<Circuit, BuildError> {
    match design {
        Design::Conventional => build_conventional(n, FirstRowStyle::default()),
        Design::Proposed => build_proposed(n),
    }
}

pub fn build_conventional_traced(
    n: usize,
    style: FirstRowStyle,
) -> Result<(Circuit, Vec<StageSnapshot>), BuildError> {
    let (mut asm, pp) = Assembly::new(format!("conventional_{n}x{n}"), n)?;
    asm.push_row(&pp, 0);
    asm.resolve(0)?;
    asm.snapshot("partial products".into());

    for r in 1..n {
        asm.push_row(&pp, r);
        let kind = match (r, style) {
            (1, FirstRowStyle::HalfAdders) => CellKind::Ha,
            _ => CellKind::Fa,
        };
        asm.carry_save_row(r, r..=r + n - 1, kind)?;
        asm.resolve(r)?;
        asm.snapshot(format!("carry-save row {r}"));
    }

    // Ripple merge over weights n..=2n-1.
    let mut ripple: Option<NetId> = None;
    for w in n..2 * n {
        let (kind, ins) = match ripple {
            None => (CellKind::Ha, asm.take(w, 2)),
            Some(c) => {
                let mut ins = asm.take(w, 2);
                ins.push(c);
                (CellKind::Fa, ins)
            }
        };
        let (s, c) = asm.adder(kind, &ins, &format!("m_w{w}"))?;
        asm.columns[w].push_back(s);
        asm.resolve(w)?;
        ripple = Some(c);
    }
    asm.snapshot("merge".into());
    asm.finish()
}

pub fn build_proposed_traced(n: usize) -> Result<(Circuit, Vec<StageSnapshot>), BuildError> {
    let (mut asm, pp) = Assembly::new(format!("proposed_{n}x{n}"), n)?;
    asm.push_row(&pp, 0);
    asm.push_row(&pp, 1);
    asm.resolve(0)?;
    asm.snapshot("partial products".into());

    // Row r folds in partial-product row r + 1.
    for r in 1..n - 1 {
        asm.push_row(&pp, r + 1);
        asm.carry_save_row(r, r..=r + n - 1, CellKind::Fa)?;
        asm.resolve(r)?;
        asm.snapshot(format!("carry-save row {r}"));
    }

    // Final row over weights n-1..=2n-2: column carries feed the zero slot of
    // the next column; the top carry is product bit 2n-1.
    let mut ripple: Option<NetId> = None;
    for w in n - 1..=2 * n - 2 {
        let pending = asm.columns[w].len();
        let free = 3 - usize::from(ripple.is_some());
        if pending > free {
            return Err(BuildError::NoSpareInput { weight: w });
        }
        let mut ins = asm.take(w, pending);
        if let Some(c) = ripple {
            ins.push(c);
        }
        while ins.len() < 3 {
            ins.push(asm.zero);
        }
        let (s, c) = asm.adder(CellKind::Fa, &ins, &format!("f_w{w}"))?;
        asm.columns[w].push_back(s);
        asm.resolve(w)?;
        ripple = Some(c);
    }
    let msb = ripple.expect("final row has at least one column");
    asm.columns[2 * n - 1].push_back(msb);
    asm.resolve(2 * n - 1)?;
    asm.snapshot("final row".into());
    asm.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::CellStats;

    #[test]
    fn census_n4() {
        let conv = build_conventional(4, FirstRowStyle::FaWithZeroCin).unwrap();
        assert_eq!(conv.cell_stats(), CellStats { and2: 16, ha: 1, fa: 15 });
        let prop = build_proposed(4).unwrap();
        assert_eq!(prop.cell_stats(), CellStats { and2: 16, ha: 0, fa: 12 });
    }

    #[test]
    fn census_half_adder_style() {
        let conv = build_conventional(4, FirstRowStyle::HalfAdders).unwrap();
        assert_eq!(conv.cell_stats(), CellStats { and2: 16, ha: 5, fa: 11 });
    }

    #[test]
    fn adder_delta_is_width() {
        for n in 2..=10 {
            let conv = build_conventional(n, FirstRowStyle::FaWithZeroCin).unwrap().cell_stats();
            let prop = build_proposed(n).unwrap().cell_stats();
            assert_eq!(conv.adders() - prop.adders(), n, "n={n}");
            assert_eq!(conv.adders(), n * n);
            assert_eq!(prop.fa, n * (n - 1));
            assert_eq!(prop.ha, 0);
        }
    }

    #[test]
    fn width_guard() {
        assert_eq!(build_proposed(1), Err(BuildError::Width(1)));
        assert_eq!(
            build_conventional(0, FirstRowStyle::FaWithZeroCin),
            Err(BuildError::Width(0))
        );
        let mut b = CircuitBuilder::new("t", 1);
        let x = b.add_net("x").unwrap();
        let y = b.add_net("y").unwrap();
        assert_eq!(build_partial_products(&mut b, &[x], &[y]), Err(BuildError::Width(1)));
    }

    #[test]
    fn partial_products_n4() {
        let mut b = CircuitBuilder::new("pp", 4);
        let xs: Vec<_> = (0..4).map(|i| b.add_net(format!("x{i}")).unwrap()).collect();
        let ys: Vec<_> = (0..4).map(|i| b.add_net(format!("y{i}")).unwrap()).collect();
        let pp = build_partial_products(&mut b, &xs, &ys).unwrap();
        let c = b.seal().unwrap();
        assert_eq!(c.cell_stats().and2, 16);
        let cell = c.cells().iter().find(|c| c.outputs[0] == pp.get(2, 3)).unwrap();
        assert_eq!(cell.inputs, vec![xs[2], ys[3]]);
    }

    #[test]
    fn deterministic() {
        assert_eq!(build_proposed(6).unwrap(), build_proposed(6).unwrap());
        assert_eq!(
            build_conventional(5, FirstRowStyle::HalfAdders).unwrap(),
            build_conventional(5, FirstRowStyle::HalfAdders).unwrap()
        );
    }

    #[test]
    fn built_circuits_validate() {
        for n in 2..=8 {
            build_conventional(n, FirstRowStyle::FaWithZeroCin).unwrap().validate().unwrap();
            build_conventional(n, FirstRowStyle::HalfAdders).unwrap().validate().unwrap();
            build_proposed(n).unwrap().validate().unwrap();
        }
    }
}
