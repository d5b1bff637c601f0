//! Gate-level netlist: nets, cells and the sealed [`Circuit`].
//!
//! A circuit is assembled through [`CircuitBuilder`] and becomes immutable once
//! sealed. Every net has exactly one driver: a primary input, the constant-zero
//! net, or one cell output. Ids are dense and follow creation order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetId(pub usize);

impl NetId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub usize);

impl CellId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Primitive cell kinds. Adders order their outputs `[sum, carry]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellKind {
    #[serde(rename = "AND2")]
    And2,
    #[serde(rename = "HA")]
    Ha,
    #[serde(rename = "FA")]
    Fa,
}

impl CellKind {
    pub const ALL: [CellKind; 3] = [CellKind::And2, CellKind::Ha, CellKind::Fa];

    pub fn input_count(self) -> usize {
        match self {
            CellKind::And2 | CellKind::Ha => 2,
            CellKind::Fa => 3,
        }
    }

    pub fn output_count(self) -> usize {
        match self {
            CellKind::And2 => 1,
            CellKind::Ha | CellKind::Fa => 2,
        }
    }

    pub fn is_adder(self) -> bool {
        matches!(self, CellKind::Ha | CellKind::Fa)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::And2 => "AND2",
            CellKind::Ha => "HA",
            CellKind::Fa => "FA",
        }
    }

    pub fn parse(s: &str) -> Option<CellKind> {
        match s {
            "AND2" => Some(CellKind::And2),
            "HA" => Some(CellKind::Ha),
            "FA" => Some(CellKind::Fa),
            _ => None,
        }
    }

    /// Bit-parallel evaluation over 64 lanes. Writes `output_count()` words.
    #[inline]
    pub fn eval_lanes(self, inputs: &[u64], outputs: &mut [u64]) {
        match self {
            CellKind::And2 => outputs[0] = inputs[0] & inputs[1],
            CellKind::Ha => {
                outputs[0] = inputs[0] ^ inputs[1];
                outputs[1] = inputs[0] & inputs[1];
            }
            CellKind::Fa => {
                let (a, b, c) = (inputs[0], inputs[1], inputs[2]);
                outputs[0] = a ^ b ^ c;
                outputs[1] = (a & b) | (a & c) | (b & c);
            }
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Net {
    pub id: NetId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub id: CellId,
    pub kind: CellKind,
    pub inputs: Vec<NetId>,
    pub outputs: Vec<NetId>,
}

/// What drives a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    Undriven,
    PrimaryInput,
    ConstZero,
    Cell(CellId),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("circuit is sealed")]
    Sealed,
    #[error("invalid net name `{0}`")]
    InvalidName(String),
    #[error("duplicate net name `{0}`")]
    DuplicateName(String),
    #[error("{kind} expects {expected_in} inputs and {expected_out} outputs, got {got_in} and {got_out}")]
    Arity {
        kind: CellKind,
        expected_in: usize,
        expected_out: usize,
        got_in: usize,
        got_out: usize,
    },
    #[error("net {0} is already driven")]
    DoubleDrive(NetId),
    #[error("unknown net {0}")]
    UnknownNet(NetId),
    #[error("unknown cell {0}")]
    UnknownCell(CellId),
    #[error("cell {cell} has no input pin {pin}")]
    UnknownPin { cell: CellId, pin: usize },
    #[error("expected {expected} {what}, got {got}")]
    PortCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("circuit contains a combinational cycle")]
    Cyclic,
}

/// One violated circuit invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    UndrivenNet(NetId),
    UndrivenOutput(NetId),
    MultipleDrivers(NetId),
    UnknownNet { cell: CellId, net: NetId },
    Arity(CellId),
    /// Cells that lie on, or downstream of, a directed cycle.
    Cycle(Vec<CellId>),
    PortCount { what: &'static str, expected: usize, got: usize },
    DrivenInput(NetId),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UndrivenNet(n) => write!(f, "undriven net {n}"),
            Diagnostic::UndrivenOutput(n) => write!(f, "undriven output {n}"),
            Diagnostic::MultipleDrivers(n) => write!(f, "multiple drivers on net {n}"),
            Diagnostic::UnknownNet { cell, net } => write!(f, "cell {cell} references unknown net {net}"),
            Diagnostic::Arity(c) => write!(f, "arity mismatch on cell {c}"),
            Diagnostic::Cycle(cells) => {
                write!(f, "cycle through cells")?;
                for c in cells {
                    write!(f, " {c}")?;
                }
                Ok(())
            }
            Diagnostic::PortCount { what, expected, got } => {
                write!(f, "expected {expected} {what}, got {got}")
            }
            Diagnostic::DrivenInput(n) => write!(f, "primary input {n} is driven internally"),
        }
    }
}

/// Exact cell multiset of a circuit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellStats {
    pub and2: usize,
    pub ha: usize,
    pub fa: usize,
}

impl CellStats {
    pub fn get(&self, kind: CellKind) -> usize {
        match kind {
            CellKind::And2 => self.and2,
            CellKind::Ha => self.ha,
            CellKind::Fa => self.fa,
        }
    }

    pub fn adders(&self) -> usize {
        self.ha + self.fa
    }

    pub fn total(&self) -> usize {
        self.and2 + self.ha + self.fa
    }
}

/// Topological rank of every cell plus a deterministic evaluation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelMap {
    levels: Vec<u32>,
    order: Vec<CellId>,
}

impl LevelMap {
    pub fn level(&self, cell: CellId) -> u32 {
        self.levels[cell.index()]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Cells sorted by (level, id).
    pub fn order(&self) -> &[CellId] {
        &self.order
    }

    pub fn max_level(&self) -> Option<u32> {
        self.levels.iter().copied().max()
    }
}

fn check_name(name: &str) -> Result<(), NetlistError> {
    if name.is_empty() || name == "->" || name.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(NetlistError::InvalidName(name.to_string()));
    }
    Ok(())
}

/// Single-owner construction of a [`Circuit`].
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    name: String,
    width: usize,
    nets: Vec<Net>,
    names: HashMap<String, NetId>,
    drivers: Vec<Driver>,
    cells: Vec<Cell>,
    const_zero: Option<NetId>,
    x_inputs: Vec<NetId>,
    y_inputs: Vec<NetId>,
    product_outputs: Vec<NetId>,
    sealed: bool,
}

impl CircuitBuilder {
    pub fn new(name: impl Into<String>, width: usize) -> Self {
        Self {
            name: name.into(),
            width,
            ..Default::default()
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn ensure_open(&self) -> Result<(), NetlistError> {
        if self.sealed {
            Err(NetlistError::Sealed)
        } else {
            Ok(())
        }
    }

    fn ensure_net(&self, net: NetId) -> Result<(), NetlistError> {
        if net.index() < self.nets.len() {
            Ok(())
        } else {
            Err(NetlistError::UnknownNet(net))
        }
    }

    pub fn add_net(&mut self, name: impl Into<String>) -> Result<NetId, NetlistError> {
        self.ensure_open()?;
        let name = name.into();
        check_name(&name)?;
        if self.names.contains_key(&name) {
            return Err(NetlistError::DuplicateName(name));
        }
        let id = NetId(self.nets.len());
        self.names.insert(name.clone(), id);
        self.nets.push(Net { id, name });
        self.drivers.push(Driver::Undriven);
        Ok(id)
    }

    pub fn net_by_name(&self, name: &str) -> Option<NetId> {
        self.names.get(name).copied()
    }

    fn claim(&mut self, net: NetId, driver: Driver) -> Result<(), NetlistError> {
        self.ensure_net(net)?;
        if self.drivers[net.index()] != Driver::Undriven {
            return Err(NetlistError::DoubleDrive(net));
        }
        self.drivers[net.index()] = driver;
        Ok(())
    }

    /// Marks `net` as the constant-zero source.
    pub fn declare_const_zero(&mut self, net: NetId) -> Result<(), NetlistError> {
        self.ensure_open()?;
        if self.const_zero.is_some() {
            return Err(NetlistError::DoubleDrive(net));
        }
        self.claim(net, Driver::ConstZero)?;
        self.const_zero = Some(net);
        Ok(())
    }

    /// Declares multiplicand input bits, LSB first.
    pub fn declare_x_inputs(&mut self, nets: &[NetId]) -> Result<(), NetlistError> {
        self.ensure_open()?;
        for &n in nets {
            self.claim(n, Driver::PrimaryInput)?;
        }
        self.x_inputs.extend_from_slice(nets);
        Ok(())
    }

    /// Declares multiplier input bits, LSB first.
    pub fn declare_y_inputs(&mut self, nets: &[NetId]) -> Result<(), NetlistError> {
        self.ensure_open()?;
        for &n in nets {
            self.claim(n, Driver::PrimaryInput)?;
        }
        self.y_inputs.extend_from_slice(nets);
        Ok(())
    }

    /// Declares product bits, LSB first. The nets need not be driven yet.
    pub fn declare_product_outputs(&mut self, nets: &[NetId]) -> Result<(), NetlistError> {
        self.ensure_open()?;
        for &n in nets {
            self.ensure_net(n)?;
        }
        self.product_outputs = nets.to_vec();
        Ok(())
    }

    pub fn add_cell(
        &mut self,
        kind: CellKind,
        inputs: &[NetId],
        outputs: &[NetId],
    ) -> Result<CellId, NetlistError> {
        self.ensure_open()?;
        if inputs.len() != kind.input_count() || outputs.len() != kind.output_count() {
            return Err(NetlistError::Arity {
                kind,
                expected_in: kind.input_count(),
                expected_out: kind.output_count(),
                got_in: inputs.len(),
                got_out: outputs.len(),
            });
        }
        for &n in inputs.iter().chain(outputs) {
            self.ensure_net(n)?;
        }
        for (i, &o) in outputs.iter().enumerate() {
            if self.drivers[o.index()] != Driver::Undriven || outputs[..i].contains(&o) {
                return Err(NetlistError::DoubleDrive(o));
            }
        }
        let id = CellId(self.cells.len());
        for &o in outputs {
            self.drivers[o.index()] = Driver::Cell(id);
        }
        self.cells.push(Cell {
            id,
            kind,
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
        });
        Ok(id)
    }

    /// Finishes construction. Further mutation through this builder fails with
    /// [`NetlistError::Sealed`]. The result is not validated here.
    pub fn seal(&mut self) -> Result<Circuit, NetlistError> {
        self.ensure_open()?;
        self.sealed = true;
        Ok(Circuit {
            name: std::mem::take(&mut self.name),
            width: self.width,
            nets: std::mem::take(&mut self.nets),
            cells: std::mem::take(&mut self.cells),
            drivers: std::mem::take(&mut self.drivers),
            const_zero: self.const_zero.take(),
            x_inputs: std::mem::take(&mut self.x_inputs),
            y_inputs: std::mem::take(&mut self.y_inputs),
            product_outputs: std::mem::take(&mut self.product_outputs),
        })
    }
}

/// Sealed, immutable gate-level multiplier netlist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    name: String,
    width: usize,
    nets: Vec<Net>,
    cells: Vec<Cell>,
    drivers: Vec<Driver>,
    const_zero: Option<NetId>,
    x_inputs: Vec<NetId>,
    y_inputs: Vec<NetId>,
    product_outputs: Vec<NetId>,
}

impl Circuit {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.nets[net.index()].name
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id.index()]
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net.index()]
    }

    pub fn const_zero(&self) -> Option<NetId> {
        self.const_zero
    }

    pub fn x_inputs(&self) -> &[NetId] {
        &self.x_inputs
    }

    pub fn y_inputs(&self) -> &[NetId] {
        &self.y_inputs
    }

    pub fn product_outputs(&self) -> &[NetId] {
        &self.product_outputs
    }

    /// Number of cell input pins reading each net.
    pub fn fanout(&self) -> Vec<usize> {
        let mut fanout = vec![0; self.nets.len()];
        for cell in &self.cells {
            for &i in &cell.inputs {
                if let Some(f) = fanout.get_mut(i.index()) {
                    *f += 1;
                }
            }
        }
        fanout
    }

    /// Cells reading each net, deduplicated, ascending.
    pub fn readers(&self) -> Vec<Vec<CellId>> {
        let mut readers: Vec<Vec<CellId>> = vec![Vec::new(); self.nets.len()];
        for cell in &self.cells {
            for &i in &cell.inputs {
                if let Some(r) = readers.get_mut(i.index()) {
                    if r.last() != Some(&cell.id) {
                        r.push(cell.id);
                    }
                }
            }
        }
        readers
    }

    pub fn cell_stats(&self) -> CellStats {
        let mut stats = CellStats::default();
        for cell in &self.cells {
            match cell.kind {
                CellKind::And2 => stats.and2 += 1,
                CellKind::Ha => stats.ha += 1,
                CellKind::Fa => stats.fa += 1,
            }
        }
        stats
    }

    /// Checks every circuit invariant and returns all violations found.
    pub fn validate(&self) -> Result<(), Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let n = self.width;
        for (what, got, expected) in [
            ("x inputs", self.x_inputs.len(), n),
            ("y inputs", self.y_inputs.len(), n),
            ("product outputs", self.product_outputs.len(), 2 * n),
        ] {
            if got != expected {
                diags.push(Diagnostic::PortCount { what, expected, got });
            }
        }

        // Recount drivers from scratch rather than trusting `drivers`.
        let mut count = vec![0usize; self.nets.len()];
        let mut by_cell = vec![false; self.nets.len()];
        let bump = |net: NetId, count: &mut Vec<usize>| {
            if let Some(c) = count.get_mut(net.index()) {
                *c += 1;
            }
        };
        for &i in self.x_inputs.iter().chain(&self.y_inputs) {
            bump(i, &mut count);
        }
        if let Some(z) = self.const_zero {
            bump(z, &mut count);
        }
        for cell in &self.cells {
            if cell.inputs.len() != cell.kind.input_count()
                || cell.outputs.len() != cell.kind.output_count()
            {
                diags.push(Diagnostic::Arity(cell.id));
            }
            for &net in cell.inputs.iter().chain(&cell.outputs) {
                if net.index() >= self.nets.len() {
                    diags.push(Diagnostic::UnknownNet { cell: cell.id, net });
                }
            }
            for &o in &cell.outputs {
                bump(o, &mut count);
                if let Some(b) = by_cell.get_mut(o.index()) {
                    *b = true;
                }
            }
        }
        for &i in self.x_inputs.iter().chain(&self.y_inputs) {
            if by_cell.get(i.index()).copied().unwrap_or(false) {
                diags.push(Diagnostic::DrivenInput(i));
            }
        }
        let outputs: BTreeSet<NetId> = self.product_outputs.iter().copied().collect();
        for (idx, &c) in count.iter().enumerate() {
            let net = NetId(idx);
            match c {
                0 if outputs.contains(&net) => diags.push(Diagnostic::UndrivenOutput(net)),
                0 => diags.push(Diagnostic::UndrivenNet(net)),
                1 => {}
                _ => diags.push(Diagnostic::MultipleDrivers(net)),
            }
        }
        for &o in &self.product_outputs {
            if o.index() >= self.nets.len() {
                diags.push(Diagnostic::UndrivenOutput(o));
            }
        }
        if let Err(stuck) = self.rank() {
            diags.push(Diagnostic::Cycle(stuck));
        }

        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }

    /// Kahn ranking; on failure returns the cells that could not be ranked.
    fn rank(&self) -> Result<Vec<u32>, Vec<CellId>> {
        let nets = self.nets.len();
        let mut driver_cell: Vec<Option<CellId>> = vec![None; nets];
        for cell in &self.cells {
            for &o in &cell.outputs {
                if let Some(d) = driver_cell.get_mut(o.index()) {
                    d.get_or_insert(cell.id);
                }
            }
        }
        let mut pending = vec![0usize; self.cells.len()];
        let mut dependents: Vec<Vec<CellId>> = vec![Vec::new(); self.cells.len()];
        for cell in &self.cells {
            for &i in &cell.inputs {
                if let Some(Some(d)) = driver_cell.get(i.index()) {
                    pending[cell.id.index()] += 1;
                    dependents[d.index()].push(cell.id);
                }
            }
        }
        let mut levels = vec![0u32; self.cells.len()];
        let mut ready: Vec<CellId> = self
            .cells
            .iter()
            .filter(|c| pending[c.id.index()] == 0)
            .map(|c| c.id)
            .collect();
        let mut done = 0;
        while let Some(c) = ready.pop() {
            done += 1;
            for &d in &dependents[c.index()] {
                levels[d.index()] = levels[d.index()].max(levels[c.index()] + 1);
                pending[d.index()] -= 1;
                if pending[d.index()] == 0 {
                    ready.push(d);
                }
            }
        }
        if done == self.cells.len() {
            Ok(levels)
        } else {
            Err(self
                .cells
                .iter()
                .filter(|c| pending[c.id.index()] > 0)
                .map(|c| c.id)
                .collect())
        }
    }

    pub fn levelize(&self) -> Result<LevelMap, NetlistError> {
        let levels = self.rank().map_err(|_| NetlistError::Cyclic)?;
        let mut order: Vec<CellId> = self.cells.iter().map(|c| c.id).collect();
        order.sort_by_key(|c| (levels[c.index()], *c));
        Ok(LevelMap { levels, order })
    }

    /// Copy of this circuit with one cell input pin reconnected to `net`.
    /// The copy is not validated; rewiring can introduce cycles.
    pub fn with_input_rewired(
        &self,
        cell: CellId,
        pin: usize,
        net: NetId,
    ) -> Result<Circuit, NetlistError> {
        if net.index() >= self.nets.len() {
            return Err(NetlistError::UnknownNet(net));
        }
        let mut copy = self.clone();
        let target = copy
            .cells
            .get_mut(cell.index())
            .ok_or(NetlistError::UnknownCell(cell))?;
        let slot = target
            .inputs
            .get_mut(pin)
            .ok_or(NetlistError::UnknownPin { cell, pin })?;
        *slot = net;
        Ok(copy)
    }
}
