//! Bit-stable report serialization.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::power::{AnalysisReport, ComparisonReport, Metric};

pub const DESIGN_CSV_HEADER: &str = "technology,design,total_power_w,prop_delay_s,edp_js,transistors";
pub const IMPROVEMENT_CSV_HEADER: &str = "technology,metric,conventional,proposed,percent_improvement";

/// Scientific notation with five significant digits, e.g. `2.4628E-04`.
pub fn sci5(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Structured,
}

impl ReportFormat {
    /// `.json` selects structured output, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ReportFormat::Structured,
            _ => ReportFormat::Csv,
        }
    }
}

pub trait Report: Serialize {
    fn to_csv(&self) -> String;

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Structured => self.to_json(),
        }
    }
}

fn design_row(s: &mut String, r: &AnalysisReport) {
    let _ = writeln!(
        s,
        "{},{},{},{},{},{}",
        r.technology,
        r.design,
        sci5(r.total_power),
        sci5(r.prop_delay()),
        sci5(r.edp),
        r.transistor_count
    );
}

impl Report for AnalysisReport {
    fn to_csv(&self) -> String {
        let mut s = format!("{DESIGN_CSV_HEADER}\n");
        design_row(&mut s, self);
        s
    }
}

impl ComparisonReport {
    /// Both designs in the per-design table layout.
    pub fn designs_csv(&self) -> String {
        let mut s = format!("{DESIGN_CSV_HEADER}\n");
        design_row(&mut s, &self.conventional);
        design_row(&mut s, &self.proposed);
        s
    }

    pub fn improvements_csv(&self) -> String {
        let mut s = format!("{IMPROVEMENT_CSV_HEADER}\n");
        for m in &self.metrics {
            let (c, p) = match m.metric {
                Metric::Transistors => (format!("{}", m.conventional), format!("{}", m.proposed)),
                _ => (sci5(m.conventional), sci5(m.proposed)),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{:.2}",
                self.technology,
                m.metric.as_str(),
                c,
                p,
                m.percent_improvement
            );
        }
        s
    }
}

impl Report for ComparisonReport {
    fn to_csv(&self) -> String {
        self.improvements_csv()
    }
}

impl Report for crate::audit::ConsistencyReport {
    fn to_csv(&self) -> String {
        crate::audit::ConsistencyReport::to_csv(self)
    }
}

pub fn write_report<R: Report + ?Sized>(report: &R, format: ReportFormat, path: &Path) -> io::Result<()> {
    std::fs::write(path, report.render(format))
}
