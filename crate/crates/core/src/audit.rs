//! Consistency audit of published power/delay/EDP tables.
//!
//! Every row's EDP is recomputed as `power * delay^2` from its own listed power
//! and delay. Rows outside the relative tolerance are flagged, together with the
//! closest recomputed value of any other row, which exposes shifted cells.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::power::{edp, percent_improvement, PowerError};
use crate::report::sci5;

pub const DEFAULT_TOLERANCE: f64 = 0.005;

/// The embedded published tables (16-T adder cell and both multipliers).
pub const PUBLISHED_TABLES: &str = include_str!("../data/published_tables.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperTableRow {
    pub label: String,
    #[serde(default)]
    pub table: Option<u32>,
    #[serde(default)]
    pub technology: Option<String>,
    #[serde(default)]
    pub design: Option<String>,
    pub power: f64,
    pub delay: f64,
    pub edp_listed: f64,
    /// Printed improvement percentages carried on the conventional row of a pair.
    #[serde(default)]
    pub percent_listed: Option<ListedPercents>,
    #[serde(default)]
    pub cells: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ListedPercents {
    pub power: f64,
    pub delay: f64,
    pub edp: f64,
}

#[derive(Deserialize)]
struct TableDoc {
    rows: Vec<PaperTableRow>,
}

pub fn load_rows(json: &str) -> Result<Vec<PaperTableRow>, PowerError> {
    let doc: TableDoc = serde_json::from_str(json).map_err(|e| PowerError::Parse(e.to_string()))?;
    Ok(doc.rows)
}

pub fn published_rows() -> Vec<PaperTableRow> {
    load_rows(PUBLISHED_TABLES).expect("embedded table data parses")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RowStatus {
    Consistent,
    Anomalous,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Consistent => "CONSISTENT",
            RowStatus::Anomalous => "ANOMALOUS",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowCheck {
    pub label: String,
    pub listed: f64,
    pub recomputed: f64,
    pub relative_error: f64,
    pub status: RowStatus,
    /// For anomalous rows: the other row whose recomputed EDP is closest to
    /// this row's listed value.
    pub nearest: Option<(String, f64)>,
}

/// Percent improvements of one conventional/proposed pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCheck {
    pub technology: String,
    pub power: f64,
    pub delay: f64,
    /// From the listed EDP cells.
    pub edp_listed: f64,
    /// From EDPs recomputed out of listed power and delay.
    pub edp_recomputed: f64,
    pub printed: Option<ListedPercents>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub tolerance: f64,
    pub rows: Vec<RowCheck>,
    pub pairs: Vec<PairCheck>,
}

impl ConsistencyReport {
    pub fn row(&self, label: &str) -> Option<&RowCheck> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn anomalous(&self) -> impl Iterator<Item = &RowCheck> {
        self.rows.iter().filter(|r| r.status == RowStatus::Anomalous)
    }

    /// Human-readable summary, stable for identical input.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tolerance {}", self.tolerance);
        for r in &self.rows {
            let _ = write!(
                s,
                "{:<22} listed {} recomputed {} rel.err {:.4}% {}",
                r.label,
                sci5(r.listed),
                sci5(r.recomputed),
                r.relative_error * 100.0,
                r.status.as_str()
            );
            if let Some((label, v)) = &r.nearest {
                let _ = write!(s, " (nearest recomputed: {label} {})", sci5(*v));
            }
            s.push('\n');
        }
        for p in &self.pairs {
            let _ = write!(
                s,
                "{:<8} power {:.2}% delay {:.2}% edp(listed) {:.2}% edp(recomputed) {:.2}%",
                p.technology, p.power, p.delay, p.edp_listed, p.edp_recomputed
            );
            if let Some(pr) = p.printed {
                let _ = write!(s, " printed {:.2}/{:.2}/{:.2}", pr.power, pr.delay, pr.edp);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,listed_edp_js,recomputed_edp_js,relative_error,status,nearest_label,nearest_edp_js\n");
        for r in &self.rows {
            let (nl, nv) = match &r.nearest {
                Some((l, v)) => (l.as_str(), sci5(*v)),
                None => ("", String::new()),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.label,
                sci5(r.listed),
                sci5(r.recomputed),
                sci5(r.relative_error),
                r.status.as_str(),
                nl,
                nv
            );
        }
        s
    }
}

pub fn paper_check(rows: &[PaperTableRow], tolerance: f64) -> Result<ConsistencyReport, PowerError> {
    if rows.is_empty() {
        return Err(PowerError::EmptyTable);
    }
    for r in rows {
        if !(r.power > 0.0 && r.delay > 0.0 && r.edp_listed > 0.0) {
            return Err(PowerError::BadRow(r.label.clone()));
        }
    }
    let recomputed: Vec<f64> = rows.iter().map(|r| edp(r.power, r.delay)).collect();
    let checks = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let rel = (r.edp_listed - recomputed[i]).abs() / r.edp_listed;
            let status = if rel <= tolerance {
                RowStatus::Consistent
            } else {
                RowStatus::Anomalous
            };
            let nearest = (status == RowStatus::Anomalous)
                .then(|| {
                    rows.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .min_by(|(a, _), (b, _)| {
                            let da = (recomputed[*a] - r.edp_listed).abs();
                            let db = (recomputed[*b] - r.edp_listed).abs();
                            da.total_cmp(&db)
                        })
                        .map(|(j, other)| (other.label.clone(), recomputed[j]))
                })
                .flatten();
            RowCheck {
                label: r.label.clone(),
                listed: r.edp_listed,
                recomputed: recomputed[i],
                relative_error: rel,
                status,
                nearest,
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for (i, conv) in rows.iter().enumerate() {
        if conv.design.as_deref() != Some("conventional") {
            continue;
        }
        let partner = rows.iter().enumerate().find(|(_, p)| {
            p.design.as_deref() == Some("proposed") && p.technology == conv.technology && p.table == conv.table
        });
        if let Some((j, prop)) = partner {
            pairs.push(PairCheck {
                technology: conv.technology.clone().unwrap_or_default(),
                power: percent_improvement(conv.power, prop.power),
                delay: percent_improvement(conv.delay, prop.delay),
                edp_listed: percent_improvement(conv.edp_listed, prop.edp_listed),
                edp_recomputed: percent_improvement(recomputed[i], recomputed[j]),
                printed: conv.percent_listed,
            });
        }
    }
    Ok(ConsistencyReport {
        tolerance,
        rows: checks,
        pairs,
    })
}
