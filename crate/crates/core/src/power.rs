//! CMOS power model, energy-delay product, transistor accounting and design
//! comparison.
//!
//! Total power is the sum of three terms:
//!
//! * dynamic: `sum_i vdd * vswing * C_load(i) * f * P_i`, where `P_i` is the
//!   switching activity of net `i` and `C_load(i) = cload_per_input * fanout(i)`;
//! * short-circuit: `vdd * sum_cells isc(kind)`;
//! * static: `vdd * sum_cells ileak(kind)`.

use serde::{Deserialize, Serialize};

use crate::netlist::{CellKind, Circuit};
use crate::sim::{ActivityProfile, ActivitySource, SimError};
use crate::timing::{static_critical_path, worst_dynamic_delay, PairSource};

/// One value per cell kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerKind<T> {
    #[serde(rename = "AND2")]
    pub and2: T,
    #[serde(rename = "HA")]
    pub ha: T,
    #[serde(rename = "FA")]
    pub fa: T,
}

impl<T: Copy> PerKind<T> {
    pub fn uniform(v: T) -> Self {
        Self { and2: v, ha: v, fa: v }
    }

    pub fn get(&self, kind: CellKind) -> T {
        match kind {
            CellKind::And2 => self.and2,
            CellKind::Ha => self.ha,
            CellKind::Fa => self.fa,
        }
    }

    pub fn values(&self) -> [T; 3] {
        [self.and2, self.ha, self.fa]
    }
}

/// Default transistor costs: 16-T full adder, 8-T half adder, 8-T AND2.
pub const DEFAULT_TRANSISTORS: PerKind<u32> = PerKind { and2: 8, ha: 8, fa: 16 };

/// Relative AND2/HA delays against the FA delay when only the FA is measured.
pub const AND2_DELAY_FRACTION: f64 = 0.25;
pub const HA_DELAY_FRACTION: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum PowerError {
    #[error("invalid technology profile: {0}")]
    InvalidTech(String),
    #[error("unknown technology `{0}`")]
    UnknownTech(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("designs analysed under different technologies: `{0}` vs `{1}`")]
    TechMismatch(String, String),
    #[error("conventional {0} must be positive")]
    NonPositive(&'static str),
    #[error("table row `{0}` has non-positive values")]
    BadRow(String),
    #[error("no table rows supplied")]
    EmptyTable,
    #[error("malformed profile: {0}")]
    Parse(String),
}

/// Electrical and cost parameters of one technology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechProfile {
    pub name: String,
    /// Supply voltage, volts.
    pub vdd: f64,
    /// Output swing, volts. Defaults to `vdd`.
    #[serde(default)]
    pub vswing: Option<f64>,
    /// Clock frequency, hertz.
    pub freq: f64,
    /// Load per driven input pin, farads.
    pub cload_per_input: f64,
    /// Per-kind propagation delay, seconds.
    pub delays: PerKind<f64>,
    /// Per-cell short-circuit current, amperes.
    pub isc: PerKind<f64>,
    /// Per-cell leakage current, amperes.
    pub ileak: PerKind<f64>,
    pub transistors: PerKind<u32>,
}

impl TechProfile {
    fn shipped(name: &str, fa_delay: f64) -> Self {
        TechProfile {
            name: name.to_string(),
            vdd: 2.0,
            vswing: None,
            freq: 100e6,
            cload_per_input: 1e-15,
            delays: PerKind {
                and2: AND2_DELAY_FRACTION * fa_delay,
                ha: HA_DELAY_FRACTION * fa_delay,
                fa: fa_delay,
            },
            isc: PerKind::uniform(0.0),
            ileak: PerKind::uniform(0.0),
            transistors: DEFAULT_TRANSISTORS,
        }
    }

    /// 0.18 um at 2.0 V with the measured 16-T full-adder delay.
    pub fn tsmc180() -> Self {
        Self::shipped("tsmc180", 5.08e-10)
    }

    pub fn nm90() -> Self {
        Self::shipped("90nm", 5.07e-10)
    }

    pub fn nm65() -> Self {
        Self::shipped("65nm", 5.06e-10)
    }

    pub fn shipped_profiles() -> Vec<TechProfile> {
        vec![Self::tsmc180(), Self::nm90(), Self::nm65()]
    }

    pub fn by_name(name: &str) -> Result<Self, PowerError> {
        Self::shipped_profiles()
            .into_iter()
            .find(|t| t.name == name)
            .ok_or_else(|| PowerError::UnknownTech(name.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, PowerError> {
        let t: TechProfile = serde_json::from_str(text).map_err(|e| PowerError::Parse(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn vswing(&self) -> f64 {
        self.vswing.unwrap_or(self.vdd)
    }

    pub fn check(&self) -> Result<(), PowerError> {
        let bad = |what: &str| Err(PowerError::InvalidTech(format!("{what} in `{}`", self.name)));
        let physical = [self.vdd, self.vswing(), self.freq, self.cload_per_input]
            .into_iter()
            .chain(self.delays.values())
            .chain(self.isc.values())
            .chain(self.ileak.values());
        for v in physical {
            if !v.is_finite() || v < 0.0 {
                return bad("negative or non-finite physical value");
            }
        }
        if self.transistors.values().iter().any(|&c| c < 1) {
            return bad("transistor cost below 1");
        }
        if self.vswing() > self.vdd {
            return bad("vswing above vdd");
        }
        Ok(())
    }
}

fn check_profile(circuit: &Circuit, activity: &ActivityProfile) -> Result<(), PowerError> {
    if activity.toggles.len() != circuit.net_count() {
        return Err(SimError::ProfileMismatch {
            profile: activity.toggles.len(),
            circuit: circuit.net_count(),
        }
        .into());
    }
    Ok(())
}

/// Switching term only, watts.
pub fn dynamic_power(
    circuit: &Circuit,
    activity: &ActivityProfile,
    tech: &TechProfile,
) -> Result<f64, PowerError> {
    check_profile(circuit, activity)?;
    tech.check()?;
    let fanout = circuit.fanout();
    let scale = tech.vdd * tech.vswing() * tech.freq;
    let mut sum = 0.0;
    for net in circuit.nets() {
        let p = activity.activity(net.id).unwrap_or(0.0);
        let cload = tech.cload_per_input * fanout[net.id.index()] as f64;
        sum += scale * cload * p;
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerBreakdown {
    pub dynamic: f64,
    pub short_circuit: f64,
    pub static_power: f64,
    pub total: f64,
}

pub fn total_power(
    circuit: &Circuit,
    activity: &ActivityProfile,
    tech: &TechProfile,
) -> Result<PowerBreakdown, PowerError> {
    let dynamic = dynamic_power(circuit, activity, tech)?;
    let isc: f64 = circuit.cells().iter().map(|c| tech.isc.get(c.kind)).sum();
    let ileak: f64 = circuit.cells().iter().map(|c| tech.ileak.get(c.kind)).sum();
    let short_circuit = tech.vdd * isc;
    let static_power = tech.vdd * ileak;
    Ok(PowerBreakdown {
        dynamic,
        short_circuit,
        static_power,
        total: dynamic + short_circuit + static_power,
    })
}

/// Energy-delay product `power * delay^2` (energy `power * delay` times delay).
pub fn edp(power: f64, delay: f64) -> f64 {
    power * delay * delay
}

pub fn transistor_count(circuit: &Circuit, tech: &TechProfile) -> u64 {
    circuit
        .cells()
        .iter()
        .map(|c| u64::from(tech.transistors.get(c.kind)))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DelaySource {
    Dynamic,
    Static,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub design: String,
    pub technology: String,
    pub width: usize,
    pub dynamic_power: f64,
    pub short_circuit_power: f64,
    pub static_power: f64,
    pub total_power: f64,
    pub static_delay: f64,
    pub dynamic_delay: Option<f64>,
    /// Which delay entered the EDP.
    pub edp_delay_source: DelaySource,
    pub edp: f64,
    pub transistor_count: u64,
    pub activity_source: String,
    pub pair_source: String,
}

impl AnalysisReport {
    pub fn prop_delay(&self) -> f64 {
        match self.edp_delay_source {
            DelaySource::Dynamic => self.dynamic_delay.unwrap_or(self.static_delay),
            DelaySource::Static => self.static_delay,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub activity: ActivitySource,
    /// `None` skips event-driven timing; EDP then uses the static delay.
    pub pairs: Option<PairSource>,
    pub workers: usize,
}

pub fn analyze(
    circuit: &Circuit,
    design: &str,
    tech: &TechProfile,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, PowerError> {
    tech.check()?;
    let activity = crate::sim::activity_profile_with(circuit, opts.activity, opts.workers)?;
    let power = total_power(circuit, &activity, tech)?;
    let static_delay = static_critical_path(circuit, tech)?.delay;
    let dynamic_delay = match opts.pairs {
        Some(p) => Some(worst_dynamic_delay(circuit, tech, p, opts.workers)?.delay),
        None => None,
    };
    let (edp_delay_source, delay) = match dynamic_delay {
        Some(d) => (DelaySource::Dynamic, d),
        None => (DelaySource::Static, static_delay),
    };
    Ok(AnalysisReport {
        design: design.to_string(),
        technology: tech.name.clone(),
        width: circuit.width(),
        dynamic_power: power.dynamic,
        short_circuit_power: power.short_circuit,
        static_power: power.static_power,
        total_power: power.total,
        static_delay,
        dynamic_delay,
        edp_delay_source,
        edp: edp(power.total, delay),
        transistor_count: transistor_count(circuit, tech),
        activity_source: opts.activity.describe(),
        pair_source: opts
            .pairs
            .map_or_else(|| "none".to_string(), |p| p.describe(circuit.width())),
    })
}

/// `(conv - prop) / conv * 100`, unrounded.
pub fn percent_improvement(conventional: f64, proposed: f64) -> f64 {
    (conventional - proposed) / conventional * 100.0
}

/// Rounds half away from zero to two decimals.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Power,
    Delay,
    Edp,
    Transistors,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Power, Metric::Delay, Metric::Edp, Metric::Transistors];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Power => "power",
            Metric::Delay => "delay",
            Metric::Edp => "edp",
            Metric::Transistors => "transistors",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricComparison {
    pub metric: Metric,
    pub conventional: f64,
    pub proposed: f64,
    /// Two decimals.
    pub percent_improvement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub technology: String,
    pub conventional: AnalysisReport,
    pub proposed: AnalysisReport,
    pub metrics: Vec<MetricComparison>,
}

impl ComparisonReport {
    pub fn metric(&self, m: Metric) -> &MetricComparison {
        self.metrics.iter().find(|c| c.metric == m).expect("all metrics present")
    }
}

pub fn compare_metric(metric: Metric, conventional: f64, proposed: f64) -> Result<MetricComparison, PowerError> {
    if conventional.is_nan() || conventional <= 0.0 {
        return Err(PowerError::NonPositive(metric.as_str()));
    }
    Ok(MetricComparison {
        metric,
        conventional,
        proposed,
        percent_improvement: round2(percent_improvement(conventional, proposed)),
    })
}

pub fn compare_designs(
    conv: &AnalysisReport,
    prop: &AnalysisReport,
) -> Result<ComparisonReport, PowerError> {
    if conv.technology != prop.technology {
        return Err(PowerError::TechMismatch(conv.technology.clone(), prop.technology.clone()));
    }
    let metrics = Metric::ALL
        .iter()
        .map(|&m| {
            let (a, b) = match m {
                Metric::Power => (conv.total_power, prop.total_power),
                Metric::Delay => (conv.prop_delay(), prop.prop_delay()),
                Metric::Edp => (conv.edp, prop.edp),
                Metric::Transistors => (conv.transistor_count as f64, prop.transistor_count as f64),
            };
            compare_metric(m, a, b)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonReport {
        technology: conv.technology.clone(),
        conventional: conv.clone(),
        proposed: prop.clone(),
        metrics,
    })
}

/// Integer cost assignments `(and2, ha, fa)` in `range` that reproduce the
/// target transistor totals for the two cell censuses, in lexicographic order.
pub fn calibrate_transistor_costs(
    conventional: crate::netlist::CellStats,
    proposed: crate::netlist::CellStats,
    conventional_total: u64,
    proposed_total: u64,
    range: std::ops::RangeInclusive<u32>,
) -> Vec<PerKind<u32>> {
    let total = |s: crate::netlist::CellStats, c: &PerKind<u32>| {
        s.and2 as u64 * u64::from(c.and2) + s.ha as u64 * u64::from(c.ha) + s.fa as u64 * u64::from(c.fa)
    };
    let mut found = Vec::new();
    for and2 in range.clone() {
        for ha in range.clone() {
            for fa in range.clone() {
                let c = PerKind { and2, ha, fa };
                if total(conventional, &c) == conventional_total && total(proposed, &c) == proposed_total {
                    found.push(c);
                }
            }
        }
    }
    found
}
