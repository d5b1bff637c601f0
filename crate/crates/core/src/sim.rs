//! Zero-delay levelized evaluation, exhaustive verification and switching
//! activity.
//!
//! Evaluation is bit-parallel: one `u64` word per net carries 64 independent
//! input vectors. Sweeps are split into contiguous index ranges across worker
//! threads; toggle counts are merged by summation, so results do not depend on
//! the worker count.

use std::fmt::Write as _;
use std::thread;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::netlist::{CellId, Circuit, NetId, NetlistError};
use crate::report::sci5;

/// Largest width accepted by [`exhaustive_verify`] and exhaustive activity sweeps.
pub const EXHAUSTIVE_MAX_WIDTH: usize = 10;

const LANES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SimVector {
    pub x: u64,
    pub y: u64,
}

impl SimVector {
    pub fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SimError {
    #[error("circuit is not valid: {0}")]
    InvalidCircuit(String),
    #[error("vector ({x}, {y}) out of range for width {width}")]
    OutOfRange { x: u64, y: u64, width: usize },
    #[error("width {width} exceeds exhaustive limit {limit}")]
    WidthGuard { width: usize, limit: usize },
    #[error("sequence length {0} is below 2")]
    SequenceTooShort(u64),
    #[error("activity profile covers {profile} nets, circuit has {circuit}")]
    ProfileMismatch { profile: usize, circuit: usize },
    #[error("cell delays must be {0}")]
    BadDelay(&'static str),
    #[error("{0}")]
    Netlist(#[from] NetlistError),
}

/// Validated circuit with a precomputed evaluation order.
#[derive(Debug)]
pub struct Compiled<'a> {
    circuit: &'a Circuit,
    order: Vec<CellId>,
}

impl<'a> Compiled<'a> {
    pub fn new(circuit: &'a Circuit) -> Result<Self, SimError> {
        if let Err(diags) = circuit.validate() {
            let text = diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
            return Err(SimError::InvalidCircuit(text));
        }
        let order = circuit.levelize()?.order().to_vec();
        Ok(Self { circuit, order })
    }

    pub fn circuit(&self) -> &'a Circuit {
        self.circuit
    }

    pub fn width(&self) -> usize {
        self.circuit.width()
    }

    pub fn check(&self, v: SimVector) -> Result<(), SimError> {
        let w = self.width();
        let limit = 1u64 << w;
        if v.x >= limit || v.y >= limit {
            return Err(SimError::OutOfRange { x: v.x, y: v.y, width: w });
        }
        Ok(())
    }

    /// Evaluates up to 64 vectors; lane `k` of each net word belongs to `vectors[k]`.
    pub fn eval_lanes(&self, vectors: &[SimVector], words: &mut Vec<u64>) {
        debug_assert!(vectors.len() <= LANES);
        words.clear();
        words.resize(self.circuit.net_count(), 0);
        for (bit, net) in self.circuit.x_inputs().iter().enumerate() {
            words[net.index()] = pack(vectors, |v| v.x >> bit & 1 == 1);
        }
        for (bit, net) in self.circuit.y_inputs().iter().enumerate() {
            words[net.index()] = pack(vectors, |v| v.y >> bit & 1 == 1);
        }
        let mut ins = [0u64; 3];
        let mut outs = [0u64; 2];
        for &id in &self.order {
            let cell = self.circuit.cell(id);
            for (slot, net) in ins.iter_mut().zip(&cell.inputs) {
                *slot = words[net.index()];
            }
            cell.kind.eval_lanes(&ins[..cell.inputs.len()], &mut outs);
            for (net, value) in cell.outputs.iter().zip(outs) {
                words[net.index()] = value;
            }
        }
    }

    pub fn decode(&self, words: &[u64], lane: usize) -> u64 {
        self.circuit
            .product_outputs()
            .iter()
            .enumerate()
            .fold(0, |acc, (bit, net)| acc | ((words[net.index()] >> lane & 1) << bit))
    }

    /// Settled value of every net for one vector.
    pub fn settle(&self, v: SimVector) -> Result<Vec<bool>, SimError> {
        self.check(v)?;
        let mut words = Vec::new();
        self.eval_lanes(&[v], &mut words);
        Ok(words.iter().map(|w| w & 1 == 1).collect())
    }

    pub fn evaluate(&self, v: SimVector) -> Result<u64, SimError> {
        self.check(v)?;
        let mut words = Vec::new();
        self.eval_lanes(&[v], &mut words);
        Ok(self.decode(&words, 0))
    }
}

fn pack(vectors: &[SimVector], bit: impl Fn(&SimVector) -> bool) -> u64 {
    vectors
        .iter()
        .enumerate()
        .fold(0, |acc, (k, v)| acc | (u64::from(bit(v)) << k))
}

pub fn evaluate(circuit: &Circuit, v: SimVector) -> Result<u64, SimError> {
    Compiled::new(circuit)?.evaluate(v)
}

/// Worker count from `AMLAB_THREADS`, else available parallelism.
pub fn default_workers() -> usize {
    std::env::var("AMLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Splits `0..total` into at most `workers` contiguous, 64-aligned ranges.
fn partition(total: u64, workers: usize) -> Vec<(u64, u64)> {
    let workers = workers.max(1) as u64;
    let batches = total.div_ceil(LANES as u64);
    let per = batches.div_ceil(workers).max(1) * LANES as u64;
    let mut ranges = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + per).min(total);
        ranges.push((start, end));
        start = end;
    }
    ranges
}

fn run_partitioned<T: Send>(
    total: u64,
    workers: usize,
    job: impl Fn(u64, u64) -> T + Sync,
) -> Vec<T> {
    let ranges = partition(total, workers);
    if ranges.len() <= 1 {
        return ranges.into_iter().map(|(s, e)| job(s, e)).collect();
    }
    thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .iter()
            .map(|&(s, e)| {
                let job = &job;
                scope.spawn(move || job(s, e))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

/// Lexicographic `(x, y)` order: `x` is the slow index.
#[inline]
fn exhaustive_vector(width: usize, index: u64) -> SimVector {
    SimVector::new(index >> width, index & ((1u64 << width) - 1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub x: u64,
    pub y: u64,
    pub got: u64,
    pub expected: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub total: u64,
    pub passed: u64,
    pub failures: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.passed == self.total
    }
}

pub fn exhaustive_verify(circuit: &Circuit) -> Result<VerifyReport, SimError> {
    exhaustive_verify_with(circuit, default_workers())
}

/// Applies every `(x, y)` pair and compares against integer multiplication.
pub fn exhaustive_verify_with(circuit: &Circuit, workers: usize) -> Result<VerifyReport, SimError> {
    let width = circuit.width();
    if width > EXHAUSTIVE_MAX_WIDTH {
        return Err(SimError::WidthGuard {
            width,
            limit: EXHAUSTIVE_MAX_WIDTH,
        });
    }
    let sim = Compiled::new(circuit)?;
    let total = 1u64 << (2 * width);
    let parts = run_partitioned(total, workers, |start, end| {
        let mut failures = Vec::new();
        let mut words = Vec::new();
        let mut batch = Vec::with_capacity(LANES);
        let mut idx = start;
        while idx < end {
            let hi = (idx + LANES as u64).min(end);
            batch.clear();
            batch.extend((idx..hi).map(|k| exhaustive_vector(width, k)));
            sim.eval_lanes(&batch, &mut words);
            for (lane, v) in batch.iter().enumerate() {
                let got = sim.decode(&words, lane);
                let expected = v.x * v.y;
                if got != expected {
                    failures.push(Mismatch { x: v.x, y: v.y, got, expected });
                }
            }
            idx = hi;
        }
        failures
    });
    let failures: Vec<Mismatch> = parts.into_iter().flatten().collect();
    Ok(VerifyReport {
        total,
        passed: total - failures.len() as u64,
        failures,
    })
}

/// Stimulus for an activity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivitySource {
    /// All `4^n` pairs in lexicographic `(x, y)` order.
    ExhaustivePairs,
    /// `length` vectors from ChaCha8 seeded with `seed`; each vector takes one
    /// `next_u64` for `x` then one for `y`, masked to the operand width.
    RandomSequence { seed: u64, length: u64 },
}

impl ActivitySource {
    pub fn describe(&self) -> String {
        match self {
            ActivitySource::ExhaustivePairs => "exhaustive".into(),
            ActivitySource::RandomSequence { seed, length } => {
                format!("random(seed={seed},length={length})")
            }
        }
    }
}

/// Generates the seeded random vector stream used across the crate.
pub fn random_vectors(width: usize, seed: u64, count: usize) -> Vec<SimVector> {
    let mask = (1u64 << width) - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = rng.next_u64() & mask;
            let y = rng.next_u64() & mask;
            SimVector::new(x, y)
        })
        .collect()
}

/// Per-net toggle counts between consecutive settled states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivityProfile {
    pub toggles: Vec<u64>,
    pub vectors_applied: u64,
}

impl ActivityProfile {
    /// Toggles per applied transition; `None` with fewer than two vectors.
    pub fn activity(&self, net: NetId) -> Option<f64> {
        if self.vectors_applied < 2 {
            return None;
        }
        Some(self.toggles[net.index()] as f64 / (self.vectors_applied - 1) as f64)
    }

    pub fn total_toggles(&self) -> u64 {
        self.toggles.iter().sum()
    }

    /// CSV with columns `net_id,name,toggles,activity`.
    pub fn to_csv(&self, circuit: &Circuit) -> String {
        let mut s = String::from("net_id,name,toggles,activity\n");
        for net in circuit.nets() {
            let a = self.activity(net.id).unwrap_or(0.0);
            let _ = writeln!(
                s,
                "{},{},{},{}",
                net.id.index(),
                net.name,
                self.toggles[net.id.index()],
                sci5(a)
            );
        }
        s
    }
}

pub fn activity_profile(circuit: &Circuit, source: ActivitySource) -> Result<ActivityProfile, SimError> {
    activity_profile_with(circuit, source, default_workers())
}

pub fn activity_profile_with(
    circuit: &Circuit,
    source: ActivitySource,
    workers: usize,
) -> Result<ActivityProfile, SimError> {
    let sim = Compiled::new(circuit)?;
    let width = circuit.width();
    match source {
        ActivitySource::ExhaustivePairs => {
            if width > EXHAUSTIVE_MAX_WIDTH {
                return Err(SimError::WidthGuard {
                    width,
                    limit: EXHAUSTIVE_MAX_WIDTH,
                });
            }
            Ok(sweep_toggles(&sim, 1u64 << (2 * width), workers, |k| {
                exhaustive_vector(width, k)
            }))
        }
        ActivitySource::RandomSequence { seed, length } => {
            if length < 2 {
                return Err(SimError::SequenceTooShort(length));
            }
            let vectors = random_vectors(width, seed, length as usize);
            Ok(sweep_toggles(&sim, length, workers, |k| vectors[k as usize]))
        }
    }
}

/// Activity over an explicit vector sequence, applied in order.
pub fn activity_profile_of_sequence(
    circuit: &Circuit,
    vectors: &[SimVector],
    workers: usize,
) -> Result<ActivityProfile, SimError> {
    let sim = Compiled::new(circuit)?;
    if vectors.len() < 2 {
        return Err(SimError::SequenceTooShort(vectors.len() as u64));
    }
    for v in vectors {
        sim.check(*v)?;
    }
    Ok(sweep_toggles(&sim, vectors.len() as u64, workers, |k| vectors[k as usize]))
}

fn sweep_toggles(
    sim: &Compiled<'_>,
    total: u64,
    workers: usize,
    vector_at: impl Fn(u64) -> SimVector + Sync,
) -> ActivityProfile {
    let nets = sim.circuit().net_count();
    let parts = run_partitioned(total, workers, |start, end| {
        let mut toggles = vec![0u64; nets];
        let mut words = Vec::new();
        let mut batch = Vec::with_capacity(LANES);
        // Settled state of the vector preceding this range, one bit per net.
        let mut prev: Option<Vec<u64>> = (start > 0).then(|| {
            let mut w = Vec::new();
            sim.eval_lanes(&[vector_at(start - 1)], &mut w);
            w
        });
        let mut idx = start;
        while idx < end {
            let hi = (idx + LANES as u64).min(end);
            let lanes = (hi - idx) as usize;
            batch.clear();
            batch.extend((idx..hi).map(&vector_at));
            sim.eval_lanes(&batch, &mut words);
            let in_word = if lanes == LANES { !1u64 } else { ((1u64 << lanes) - 1) & !1 };
            for (n, &w) in words.iter().enumerate() {
                let mut count = u64::from(((w ^ (w << 1)) & in_word).count_ones());
                if let Some(p) = &prev {
                    count += (w ^ p[n]) & 1;
                }
                toggles[n] += count;
            }
            let last = lanes - 1;
            prev = Some(words.iter().map(|w| w >> last & 1).collect());
            idx = hi;
        }
        toggles
    });
    let mut toggles = vec![0u64; nets];
    for part in parts {
        for (t, p) in toggles.iter_mut().zip(part) {
            *t += p;
        }
    }
    ActivityProfile {
        toggles,
        vectors_applied: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_conventional, build_proposed, FirstRowStyle};
    use crate::netlist::{CellKind, CircuitBuilder};

    /// Scalar reference used to cross-check the bit-parallel path.
    fn scalar_eval(c: &Circuit, v: SimVector) -> Vec<bool> {
        let mut val = vec![false; c.net_count()];
        for (b, n) in c.x_inputs().iter().enumerate() {
            val[n.index()] = v.x >> b & 1 == 1;
        }
        for (b, n) in c.y_inputs().iter().enumerate() {
            val[n.index()] = v.y >> b & 1 == 1;
        }
        let lv = c.levelize().unwrap();
        for &id in lv.order() {
            let cell = c.cell(id);
            let i: Vec<bool> = cell.inputs.iter().map(|n| val[n.index()]).collect();
            let o = match cell.kind {
                CellKind::And2 => vec![i[0] & i[1]],
                CellKind::Ha => vec![i[0] ^ i[1], i[0] & i[1]],
                CellKind::Fa => vec![
                    i[0] ^ i[1] ^ i[2],
                    (u8::from(i[0]) + u8::from(i[1]) + u8::from(i[2])) >= 2,
                ],
            };
            for (n, b) in cell.outputs.iter().zip(o) {
                val[n.index()] = b;
            }
        }
        val
    }

    fn single(kind: CellKind) -> Circuit {
        let mut b = CircuitBuilder::new(kind.as_str(), 2);
        let z = b.add_net("zero").unwrap();
        b.declare_const_zero(z).unwrap();
        let xs = [b.add_net("x0").unwrap(), b.add_net("x1").unwrap()];
        let ys = [b.add_net("y0").unwrap(), b.add_net("y1").unwrap()];
        b.declare_x_inputs(&xs).unwrap();
        b.declare_y_inputs(&ys).unwrap();
        let o: Vec<NetId> = (0..kind.output_count())
            .map(|i| b.add_net(format!("o{i}")).unwrap())
            .collect();
        let ins: Vec<NetId> = [xs[0], ys[0], xs[1]][..kind.input_count()].to_vec();
        b.add_cell(kind, &ins, &o).unwrap();
        let mut outs = o.clone();
        outs.resize(4, z);
        b.declare_product_outputs(&outs).unwrap();
        b.seal().unwrap()
    }

    #[test]
    fn fa_truth_table() {
        let c = single(CellKind::Fa);
        let sim = Compiled::new(&c).unwrap();
        for bits in 0u64..8 {
            let (a, b, ci) = (bits & 1, bits >> 1 & 1, bits >> 2 & 1);
            let v = SimVector::new(a | ci << 1, b);
            let out = sim.evaluate(v).unwrap();
            let ones = a + b + ci;
            assert_eq!(out & 1, ones & 1, "sum {bits:03b}");
            assert_eq!(out >> 1 & 1, u64::from(ones >= 2), "carry {bits:03b}");
        }
    }

    #[test]
    fn ha_truth_table() {
        let c = single(CellKind::Ha);
        let sim = Compiled::new(&c).unwrap();
        for bits in 0u64..4 {
            let (a, b) = (bits & 1, bits >> 1);
            let out = sim.evaluate(SimVector::new(a, b)).unwrap();
            assert_eq!(out, (a ^ b) | (a & b) << 1);
        }
    }

    #[test]
    fn evaluate_examples() {
        let conv = build_conventional(4, FirstRowStyle::FaWithZeroCin).unwrap();
        let prop = build_proposed(4).unwrap();
        assert_eq!(evaluate(&conv, SimVector::new(3, 5)).unwrap(), 15);
        assert_eq!(evaluate(&prop, SimVector::new(15, 15)).unwrap(), 225);
        for y in 0..16 {
            assert_eq!(evaluate(&conv, SimVector::new(0, y)).unwrap(), 0);
            assert_eq!(evaluate(&prop, SimVector::new(0, y)).unwrap(), 0);
        }
        assert!(matches!(
            evaluate(&prop, SimVector::new(16, 0)),
            Err(SimError::OutOfRange { .. })
        ));
    }

    #[test]
    fn lanes_match_scalar() {
        let c = build_proposed(5).unwrap();
        let sim = Compiled::new(&c).unwrap();
        let vs = random_vectors(5, 7, 64);
        let mut words = Vec::new();
        sim.eval_lanes(&vs, &mut words);
        for (lane, v) in vs.iter().enumerate() {
            let want = scalar_eval(&c, *v);
            for (n, w) in words.iter().enumerate() {
                assert_eq!(w >> lane & 1 == 1, want[n]);
            }
        }
    }

    #[test]
    fn verify_width_guard() {
        let c = build_proposed(11).unwrap();
        assert_eq!(
            exhaustive_verify(&c).unwrap_err(),
            SimError::WidthGuard { width: 11, limit: 10 }
        );
    }

    #[test]
    fn partition_covers_range() {
        for total in [1u64, 63, 64, 65, 256, 1000] {
            for w in 1..6 {
                let r = partition(total, w);
                assert_eq!(r.first().unwrap().0, 0);
                assert_eq!(r.last().unwrap().1, total);
                assert!(r.windows(2).all(|p| p[0].1 == p[1].0));
                assert!(r.len() <= w);
            }
        }
    }

    /// Toggle counts by brute force over the scalar evaluator.
    fn brute_toggles(c: &Circuit, vs: &[SimVector]) -> Vec<u64> {
        let mut t = vec![0u64; c.net_count()];
        let states: Vec<Vec<bool>> = vs.iter().map(|v| scalar_eval(c, *v)).collect();
        for pair in states.windows(2) {
            for (n, (a, b)) in pair[0].iter().zip(&pair[1]).enumerate() {
                t[n] += u64::from(a != b);
            }
        }
        t
    }

    #[test]
    fn toggles_match_brute_force() {
        let c = build_conventional(3, FirstRowStyle::FaWithZeroCin).unwrap();
        let all: Vec<SimVector> = (0..64).map(|k| exhaustive_vector(3, k)).collect();
        let p = activity_profile_with(&c, ActivitySource::ExhaustivePairs, 3).unwrap();
        assert_eq!(p.toggles, brute_toggles(&c, &all));
        assert_eq!(p.vectors_applied, 64);

        let src = ActivitySource::RandomSequence { seed: 11, length: 300 };
        let vs = random_vectors(3, 11, 300);
        for w in [1, 2, 5] {
            let p = activity_profile_with(&c, src, w).unwrap();
            assert_eq!(p.toggles, brute_toggles(&c, &vs));
        }
    }

    #[test]
    fn constant_sequence_no_toggles() {
        let c = build_proposed(3).unwrap();
        let v = SimVector::new(5, 6);
        let p = activity_profile_of_sequence(&c, &[v, v, v], 1).unwrap();
        assert_eq!(p.total_toggles(), 0);
        assert_eq!(
            activity_profile(&c, ActivitySource::RandomSequence { seed: 0, length: 1 }),
            Err(SimError::SequenceTooShort(1))
        );
    }

    #[test]
    fn and_gate_single_toggle() {
        let c = single(CellKind::And2);
        let out = c.cells()[0].outputs[0];
        let seq = [SimVector::new(0, 0), SimVector::new(1, 1)];
        let p = activity_profile_of_sequence(&c, &seq, 1).unwrap();
        assert_eq!(p.toggles[out.index()], 1);
        assert_eq!(p.activity(out), Some(1.0));
    }

    #[test]
    fn activity_bounds() {
        let c = build_proposed(4).unwrap();
        let p = activity_profile(&c, ActivitySource::ExhaustivePairs).unwrap();
        for net in c.nets() {
            let a = p.activity(net.id).unwrap();
            assert!((0.0..=1.0).contains(&a));
            assert!(p.toggles[net.id.index()] < p.vectors_applied);
        }
        let csv = p.to_csv(&c);
        assert!(csv.starts_with("net_id,name,toggles,activity\n0,zero,0,0.0000E+00\n"));
    }
}
