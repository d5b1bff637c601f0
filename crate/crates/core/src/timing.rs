//! Propagation delay: static longest path and event-driven settling.
//!
//! Each cell kind has a single delay for all its arcs. The dynamic model uses
//! inertial delays on an integer attosecond time base so that simultaneous
//! events group exactly.

use std::collections::BTreeMap;
use std::thread;

use crate::netlist::{CellId, Circuit, Driver, NetId};
use crate::power::TechProfile;
use crate::sim::{random_vectors, Compiled, SimError, SimVector};

const TICKS_PER_SECOND: f64 = 1e18;

#[derive(Clone, Debug, PartialEq)]
pub struct TimingResult {
    /// Seconds.
    pub delay: f64,
    /// Critical cell chain from an input side to a product output (static mode).
    pub path: Vec<CellId>,
    /// Net value changes applied while settling (dynamic mode).
    pub events: u64,
    /// Transition that produced the reported delay (dynamic mode).
    pub witness: Option<(SimVector, SimVector)>,
}

pub fn static_critical_path(circuit: &Circuit, tech: &TechProfile) -> Result<TimingResult, SimError> {
    if tech.delays.values().iter().any(|d| d.is_nan() || *d < 0.0) {
        return Err(SimError::BadDelay("non-negative"));
    }
    Compiled::new(circuit)?;
    let order = circuit.levelize()?;
    let mut arrival = vec![0.0f64; circuit.net_count()];
    for &id in order.order() {
        let cell = circuit.cell(id);
        let latest = cell
            .inputs
            .iter()
            .map(|n| arrival[n.index()])
            .fold(0.0, f64::max);
        let t = latest + tech.delays.get(cell.kind);
        for o in &cell.outputs {
            arrival[o.index()] = t;
        }
    }

    // Latest product output; ties go to the lowest bit.
    let mut end: Option<NetId> = None;
    for &o in circuit.product_outputs() {
        if end.is_none_or(|e| arrival[o.index()] > arrival[e.index()]) {
            end = Some(o);
        }
    }
    let mut path = Vec::new();
    let mut cursor = end;
    while let Some(net) = cursor {
        let Driver::Cell(id) = circuit.driver(net) else {
            break;
        };
        path.push(id);
        let cell = circuit.cell(id);
        // First input pin carrying the latest arrival.
        let mut best: Option<NetId> = None;
        for &i in &cell.inputs {
            if best.is_none_or(|b| arrival[i.index()] > arrival[b.index()]) {
                best = Some(i);
            }
        }
        cursor = best;
    }
    path.reverse();
    Ok(TimingResult {
        delay: end.map_or(0.0, |e| arrival[e.index()]),
        path,
        events: 0,
        witness: None,
    })
}

/// Event-driven simulator for one circuit under one technology.
pub struct EventSim<'a> {
    sim: Compiled<'a>,
    readers: Vec<Vec<CellId>>,
    delay_ticks: [u64; 3],
    is_output: Vec<bool>,
}

fn kind_slot(kind: crate::netlist::CellKind) -> usize {
    match kind {
        crate::netlist::CellKind::And2 => 0,
        crate::netlist::CellKind::Ha => 1,
        crate::netlist::CellKind::Fa => 2,
    }
}

impl<'a> EventSim<'a> {
    pub fn new(circuit: &'a Circuit, tech: &TechProfile) -> Result<Self, SimError> {
        let d = tech.delays;
        if [d.and2, d.ha, d.fa].iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(SimError::BadDelay("positive and finite"));
        }
        let ticks = |s: f64| ((s * TICKS_PER_SECOND).round() as u64).max(1);
        let mut is_output = vec![false; circuit.net_count()];
        for o in circuit.product_outputs() {
            is_output[o.index()] = true;
        }
        Ok(Self {
            sim: Compiled::new(circuit)?,
            readers: circuit.readers(),
            delay_ticks: [ticks(d.and2), ticks(d.ha), ticks(d.fa)],
            is_output,
        })
    }

    /// Settles `from`, applies `to` at time zero and reports the time of the
    /// last product-output change.
    pub fn settle_delay(&self, from: SimVector, to: SimVector) -> Result<TimingResult, SimError> {
        self.sim.check(to)?;
        let circuit = self.sim.circuit();
        let mut value = self.sim.settle(from)?;
        // Pending transaction per net: (time, value).
        let mut pending: Vec<Option<(u64, bool)>> = vec![None; circuit.net_count()];
        let mut queue: BTreeMap<u64, Vec<NetId>> = BTreeMap::new();

        let mut changed: Vec<NetId> = Vec::new();
        for (bit, &net) in circuit.x_inputs().iter().enumerate() {
            let v = to.x >> bit & 1 == 1;
            if value[net.index()] != v {
                value[net.index()] = v;
                changed.push(net);
            }
        }
        for (bit, &net) in circuit.y_inputs().iter().enumerate() {
            let v = to.y >> bit & 1 == 1;
            if value[net.index()] != v {
                value[net.index()] = v;
                changed.push(net);
            }
        }

        let mut now = 0u64;
        let mut last_output_change = 0u64;
        let mut events = 0u64;
        let mut touched: Vec<CellId> = Vec::new();
        let mut ins = [0u64; 3];
        let mut outs = [0u64; 2];
        loop {
            touched.clear();
            for net in &changed {
                touched.extend_from_slice(&self.readers[net.index()]);
            }
            touched.sort_unstable();
            touched.dedup();
            for &id in &touched {
                let cell = circuit.cell(id);
                for (slot, n) in ins.iter_mut().zip(&cell.inputs) {
                    *slot = u64::from(value[n.index()]);
                }
                cell.kind.eval_lanes(&ins[..cell.inputs.len()], &mut outs);
                let at = now + self.delay_ticks[kind_slot(cell.kind)];
                for (&net, &word) in cell.outputs.iter().zip(&outs) {
                    let next = word & 1 == 1;
                    let slot = &mut pending[net.index()];
                    match *slot {
                        // An earlier transaction to the same value stands.
                        Some((_, v)) if v == next => {}
                        // Pulse shorter than the cell delay is swallowed.
                        Some(_) if next == value[net.index()] => *slot = None,
                        _ if next != value[net.index()] => {
                            *slot = Some((at, next));
                            queue.entry(at).or_default().push(net);
                        }
                        _ => {}
                    }
                }
            }

            changed.clear();
            let Some((t, nets)) = queue.pop_first() else {
                break;
            };
            now = t;
            for net in nets {
                match pending[net.index()] {
                    Some((when, v)) if when == t => {
                        pending[net.index()] = None;
                        if value[net.index()] != v {
                            value[net.index()] = v;
                            events += 1;
                            changed.push(net);
                            if self.is_output[net.index()] {
                                last_output_change = t;
                            }
                        }
                    }
                    // Cancelled or superseded.
                    _ => {}
                }
            }
            changed.sort_unstable();
            changed.dedup();
        }
        Ok(TimingResult {
            delay: last_output_change as f64 / TICKS_PER_SECOND,
            path: Vec::new(),
            events,
            witness: Some((from, to)),
        })
    }
}

pub fn dynamic_settle_delay(
    circuit: &Circuit,
    tech: &TechProfile,
    from: SimVector,
    to: SimVector,
) -> Result<TimingResult, SimError> {
    EventSim::new(circuit, tech)?.settle_delay(from, to)
}

/// Transition pairs searched by [`worst_dynamic_delay`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSource {
    /// Every ordered pair of input vectors.
    Exhaustive,
    /// `count` pairs drawn from the seeded vector stream (consecutive vectors).
    Random { seed: u64, count: usize },
    /// Exhaustive for widths up to 4, otherwise `Random`.
    Auto { seed: u64, count: usize },
}

impl PairSource {
    fn resolve(self, width: usize) -> PairSource {
        match self {
            PairSource::Auto { .. } if width <= 4 => PairSource::Exhaustive,
            PairSource::Auto { seed, count } => PairSource::Random { seed, count },
            other => other,
        }
    }

    pub fn describe(self, width: usize) -> String {
        match self.resolve(width) {
            PairSource::Exhaustive => "exhaustive".into(),
            PairSource::Random { seed, count } | PairSource::Auto { seed, count } => {
                format!("random(seed={seed},pairs={count})")
            }
        }
    }
}

pub fn worst_dynamic_delay(
    circuit: &Circuit,
    tech: &TechProfile,
    source: PairSource,
    workers: usize,
) -> Result<TimingResult, SimError> {
    let es = EventSim::new(circuit, tech)?;
    let width = circuit.width();
    let pairs: Vec<(SimVector, SimVector)> = match source.resolve(width) {
        PairSource::Exhaustive => {
            if width > crate::sim::EXHAUSTIVE_MAX_WIDTH / 2 {
                return Err(SimError::WidthGuard {
                    width,
                    limit: crate::sim::EXHAUSTIVE_MAX_WIDTH / 2,
                });
            }
            let side = 1u64 << width;
            let all: Vec<SimVector> = (0..side * side)
                .map(|k| SimVector::new(k >> width, k & (side - 1)))
                .collect();
            all.iter()
                .flat_map(|&a| all.iter().map(move |&b| (a, b)))
                .collect()
        }
        PairSource::Random { seed, count } | PairSource::Auto { seed, count } => {
            let vs = random_vectors(width, seed, count + 1);
            vs.windows(2).map(|w| (w[0], w[1])).collect()
        }
    };

    let workers = workers.max(1).min(pairs.len().max(1));
    let chunk = pairs.len().div_ceil(workers).max(1);
    let results: Vec<Result<Option<(usize, TimingResult)>, SimError>> = thread::scope(|scope| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .enumerate()
            .map(|(ci, part)| {
                let es = &es;
                scope.spawn(move || {
                    let mut best: Option<(usize, TimingResult)> = None;
                    for (k, &(a, b)) in part.iter().enumerate() {
                        let r = es.settle_delay(a, b)?;
                        if best.as_ref().is_none_or(|(_, cur)| r.delay > cur.delay) {
                            best = Some((ci * chunk + k, r));
                        }
                    }
                    Ok(best)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("timing worker panicked"))
            .collect()
    });
    // Largest delay; ties resolved by pair index so the result is worker-independent.
    let mut best: Option<(usize, TimingResult)> = None;
    for r in results {
        if let Some((idx, t)) = r? {
            let better = match &best {
                None => true,
                Some((bi, bt)) => t.delay > bt.delay || (t.delay == bt.delay && idx < *bi),
            };
            if better {
                best = Some((idx, t));
            }
        }
    }
    Ok(best.map(|(_, t)| t).unwrap_or(TimingResult {
        delay: 0.0,
        path: Vec::new(),
        events: 0,
        witness: None,
    }))
}
