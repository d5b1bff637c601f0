//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid arguments or
//! malformed input, 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::audit::{self, DEFAULT_TOLERANCE};
use crate::builder::{self, Design, FirstRowStyle};
use crate::format::{self, NetlistFormat};
use crate::netlist::Circuit;
use crate::power::{self, AnalysisOptions, TechProfile};
use crate::report::{write_report, ReportFormat};
use crate::sim::{self, ActivitySource};
use crate::timing::PairSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    VerifyFailure = 1,
    Usage = 2,
    Io = 3,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    Conventional,
    Proposed,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Conventional => Design::Conventional,
            DesignArg::Proposed => Design::Proposed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// JSON document with schema version.
    Structured,
    Text,
}

impl From<FormatArg> for NetlistFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Structured => NetlistFormat::Structured,
            FormatArg::Text => NetlistFormat::Text,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FirstRowArg {
    /// Full adders with the carry input tied to zero.
    Fa,
    /// Half adders.
    Ha,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ActivityArg {
    Exhaustive,
    Random,
}

fn parse_width(s: &str) -> Result<usize, String> {
    let w: usize = s.parse().map_err(|_| format!("`{s}` is not a width"))?;
    if (2..=10).contains(&w) {
        Ok(w)
    } else {
        Err(format!("width {w} outside 2..=10"))
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if t > 0.0 && t <= 0.1 {
        Ok(t)
    } else {
        Err(format!("tolerance {t} outside (0, 0.1]"))
    }
}

fn parse_path(s: &str) -> Result<PathBuf, String> {
    if s.is_empty() {
        Err("path must not be empty".into())
    } else {
        Ok(PathBuf::from(s))
    }
}

/// Either a netlist file or a generated design.
#[derive(Args, Clone, Debug, PartialEq)]
#[group(required = true, multiple = true)]
pub struct NetlistSource {
    /// Netlist file (structured or text).
    #[arg(long, value_parser = parse_path, conflicts_with_all = ["design", "width"])]
    pub netlist: Option<PathBuf>,
    #[arg(long, value_enum, requires = "width")]
    pub design: Option<DesignArg>,
    #[arg(long, value_parser = parse_width, requires = "design")]
    pub width: Option<usize>,
}

#[derive(Subcommand, Clone, Debug, PartialEq)]
pub enum Command {
    /// Generate a multiplier netlist.
    Build {
        #[arg(long, value_enum)]
        design: DesignArg,
        #[arg(long, value_parser = parse_width)]
        width: usize,
        #[arg(long = "out", value_parser = parse_path)]
        out_path: PathBuf,
        #[arg(long, value_enum, default_value = "structured")]
        format: FormatArg,
        /// First carry-save row cells (conventional design only).
        #[arg(long, value_enum, default_value = "fa")]
        first_row: FirstRowArg,
    },
    /// Exhaustively check a netlist against integer multiplication.
    Verify {
        #[command(flatten)]
        source: NetlistSource,
    },
    /// Power, delay, EDP and transistor count of one design.
    Analyze {
        #[command(flatten)]
        source: NetlistSource,
        /// Shipped profile name (tsmc180, 90nm, 65nm) or a profile file.
        #[arg(long)]
        tech: String,
        #[arg(long, value_enum, default_value = "exhaustive")]
        activity: ActivityArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random activity sequence length.
        #[arg(long, default_value_t = 10_000)]
        length: u64,
        /// Random transition pairs for event-driven timing above width 4.
        #[arg(long, default_value_t = 2_000)]
        pairs: usize,
        #[arg(long = "out", value_parser = parse_path)]
        out_path: PathBuf,
    },
    /// Analyze both designs under one technology and write the comparison.
    Compare {
        #[arg(long)]
        tech: String,
        #[arg(long, value_parser = parse_width)]
        width: usize,
        #[arg(long = "out", value_parser = parse_path)]
        out_path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2_000)]
        pairs: usize,
    },
    /// Recompute EDP and percentage columns of the published tables.
    PaperCheck {
        /// Table data file; defaults to the embedded tables.
        #[arg(long = "table", value_parser = parse_path)]
        table_path: Option<PathBuf>,
        #[arg(long, value_parser = parse_tolerance, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long = "out", value_parser = parse_path)]
        out_path: Option<PathBuf>,
    },
    /// Re-encode a netlist.
    Export {
        #[command(flatten)]
        source: NetlistSource,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long = "out", value_parser = parse_path)]
        out_path: PathBuf,
    },
}

#[derive(Parser, Debug)]
#[command(name = "amlab", version, about = "Carry-save array multiplier lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Usage diagnostic or help text, with the exit code it maps to.
#[derive(Debug)]
pub struct ParseFailure {
    pub code: ExitCode,
    pub message: String,
}

pub fn parse_args<I, T>(argv: I) -> Result<Command, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv).map(|c| c.command).map_err(|e| {
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::Success,
            _ => ExitCode::Usage,
        };
        ParseFailure {
            code,
            message: e.render().to_string(),
        }
    })
}

#[derive(Debug)]
struct Failure {
    code: ExitCode,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: ExitCode::Usage,
        message: message.into(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: ExitCode::Io,
        message: format!("{}: {e}", path.display()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn load_circuit(source: &NetlistSource) -> Result<(Circuit, String), Failure> {
    match (&source.netlist, source.design, source.width) {
        (Some(path), _, _) => {
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            let c = format::import_circuit(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let name = c.name().to_string();
            Ok((c, name))
        }
        (None, Some(d), Some(w)) => {
            let design: Design = d.into();
            let c = builder::build(design, w).map_err(|e| usage(e.to_string()))?;
            Ok((c, design.as_str().to_string()))
        }
        _ => Err(usage("either --netlist or --design with --width is required")),
    }
}

fn load_tech(spec: &str) -> Result<TechProfile, Failure> {
    if let Ok(t) = TechProfile::by_name(spec) {
        return Ok(t);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(usage(format!(
            "unknown technology `{spec}` (shipped: tsmc180, 90nm, 65nm; or a profile file)"
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    TechProfile::from_json(&text).map_err(|e| usage(format!("{spec}: {e}")))
}

/// `report.csv` -> `report_designs.csv`.
pub fn designs_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("compare");
    out.with_file_name(format!("{stem}_designs.csv"))
}

fn run_command(command: &Command, workers: usize, out: &mut dyn Write) -> Result<ExitCode, Failure> {
    let say = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "{line}");
    };
    match command {
        Command::Build {
            design,
            width,
            out_path,
            format,
            first_row,
        } => {
            let circuit = match (design, first_row) {
                (DesignArg::Conventional, FirstRowArg::Ha) => {
                    builder::build_conventional(*width, FirstRowStyle::HalfAdders)
                }
                (d, _) => builder::build((*d).into(), *width),
            }
            .map_err(|e| usage(e.to_string()))?;
            let bytes = format::export_circuit(&circuit, (*format).into()).map_err(|e| usage(e.to_string()))?;
            write_file(out_path, &bytes)?;
            let stats = circuit.cell_stats();
            say(
                out,
                format!(
                    "{}: {} AND2, {} HA, {} FA -> {}",
                    circuit.name(),
                    stats.and2,
                    stats.ha,
                    stats.fa,
                    out_path.display()
                ),
            );
            Ok(ExitCode::Success)
        }
        Command::Verify { source } => {
            let (circuit, _) = load_circuit(source)?;
            let report = sim::exhaustive_verify_with(&circuit, workers).map_err(|e| usage(e.to_string()))?;
            say(out, format!("{}: {}/{} passed", circuit.name(), report.passed, report.total));
            if let Some(m) = report.failures.first() {
                say(
                    out,
                    format!(
                        "counterexample: x={} y={} got={} expected={} ({} failures)",
                        m.x,
                        m.y,
                        m.got,
                        m.expected,
                        report.failures.len()
                    ),
                );
                return Ok(ExitCode::VerifyFailure);
            }
            Ok(ExitCode::Success)
        }
        Command::Analyze {
            source,
            tech,
            activity,
            seed,
            length,
            pairs,
            out_path,
        } => {
            let (circuit, name) = load_circuit(source)?;
            let tech = load_tech(tech)?;
            let activity = match activity {
                ActivityArg::Exhaustive => ActivitySource::ExhaustivePairs,
                ActivityArg::Random => ActivitySource::RandomSequence {
                    seed: *seed,
                    length: *length,
                },
            };
            let opts = AnalysisOptions {
                activity,
                pairs: Some(PairSource::Auto {
                    seed: *seed,
                    count: *pairs,
                }),
                workers,
            };
            let report = power::analyze(&circuit, &name, &tech, &opts).map_err(|e| usage(e.to_string()))?;
            write_report(&report, ReportFormat::from_path(out_path), out_path).map_err(|e| io_err(out_path, e))?;
            say(
                out,
                format!(
                    "{name} [{}] seed {seed}: power {:.4e} W, delay {:.4e} s, EDP {:.4e} Js, {} transistors",
                    tech.name,
                    report.total_power,
                    report.prop_delay(),
                    report.edp,
                    report.transistor_count
                ),
            );
            Ok(ExitCode::Success)
        }
        Command::Compare {
            tech,
            width,
            out_path,
            seed,
            pairs,
        } => {
            let tech = load_tech(tech)?;
            let opts = AnalysisOptions {
                activity: ActivitySource::ExhaustivePairs,
                pairs: Some(PairSource::Auto {
                    seed: *seed,
                    count: *pairs,
                }),
                workers,
            };
            let mut reports = Vec::new();
            for design in [Design::Conventional, Design::Proposed] {
                let c = builder::build(design, *width).map_err(|e| usage(e.to_string()))?;
                reports.push(power::analyze(&c, design.as_str(), &tech, &opts).map_err(|e| usage(e.to_string()))?);
            }
            let cmp = power::compare_designs(&reports[0], &reports[1]).map_err(|e| usage(e.to_string()))?;
            write_report(&cmp, ReportFormat::from_path(out_path), out_path).map_err(|e| io_err(out_path, e))?;
            let designs = designs_path(out_path);
            write_file(&designs, cmp.designs_csv().as_bytes())?;
            say(out, format!("compare {}x{} [{}] seed {seed}", width, width, tech.name));
            for m in &cmp.metrics {
                say(
                    out,
                    format!(
                        "  {:<12} conventional {:.4e} proposed {:.4e} improvement {:.2}%",
                        m.metric.as_str(),
                        m.conventional,
                        m.proposed,
                        m.percent_improvement
                    ),
                );
            }
            say(out, format!("wrote {} and {}", out_path.display(), designs.display()));
            Ok(ExitCode::Success)
        }
        Command::PaperCheck {
            table_path,
            tolerance,
            out_path,
        } => {
            let rows = match table_path {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
                    audit::load_rows(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                None => audit::published_rows(),
            };
            let report = audit::paper_check(&rows, *tolerance).map_err(|e| usage(e.to_string()))?;
            let _ = out.write_all(report.render().as_bytes());
            if let Some(p) = out_path {
                write_report(&report, ReportFormat::from_path(p), p).map_err(|e| io_err(p, e))?;
            }
            Ok(ExitCode::Success)
        }
        Command::Export {
            source,
            format,
            out_path,
        } => {
            let (circuit, _) = load_circuit(source)?;
            let bytes = format::export_circuit(&circuit, (*format).into()).map_err(|e| usage(e.to_string()))?;
            write_file(out_path, &bytes)?;
            say(out, format!("{} -> {}", circuit.name(), out_path.display()));
            Ok(ExitCode::Success)
        }
    }
}

/// Runs one command, writing the summary to `out` and diagnostics to `err`.
pub fn execute_with(command: &Command, workers: usize, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode {
    match run_command(command, workers, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: &Command) -> ExitCode {
    execute_with(
        command,
        sim::default_workers(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    )
}

/// Parses and executes; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(cmd) => execute(&cmd).code(),
        Err(f) => {
            if f.code == ExitCode::Success {
                print!("{}", f.message);
            } else {
                eprint!("{}", f.message);
            }
            f.code.code()
        }
    }
}
