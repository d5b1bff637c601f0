//! Netlist serialization.
//!
//! Two encodings are supported:
//!
//! * structured (JSON), carrying `schema_version: "1"` and every id verbatim;
//! * text, one cell per line:
//!
//! ```text
//! circuit <name> width <n>
//! nets <name> <name> ...        # all nets in id order
//! const <name>
//! x <name> ...                  # LSB first
//! y <name> ...
//! p <name> ...
//! FA a b cin -> s co
//! ```
//!
//! Cell ids in the text form are the cell line order. Both encodings
//! round-trip to a structurally identical circuit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::netlist::{CellId, CellKind, Circuit, CircuitBuilder, Diagnostic, NetId, NetlistError};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetlistFormat {
    Structured,
    Text,
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed netlist: {0}")]
    Malformed(String),
    #[error("unsupported schema version `{0}` (expected `{SCHEMA_VERSION}`)")]
    SchemaVersion(String),
    #[error("invalid circuit: {}", join_diags(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("cannot export: {0}")]
    Export(String),
}

fn join_diags(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

impl From<NetlistError> for FormatError {
    fn from(e: NetlistError) -> Self {
        FormatError::Malformed(e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct NetDoc {
    id: usize,
    name: String,
}

#[derive(Serialize, Deserialize)]
struct CellDoc {
    id: usize,
    kind: CellKind,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDoc {
    schema_version: String,
    name: String,
    width: usize,
    const_zero: Option<usize>,
    nets: Vec<NetDoc>,
    cells: Vec<CellDoc>,
    x_inputs: Vec<usize>,
    y_inputs: Vec<usize>,
    product_outputs: Vec<usize>,
}

fn ids(nets: &[NetId]) -> Vec<usize> {
    nets.iter().map(|n| n.index()).collect()
}

fn net_ids(raw: &[usize]) -> Vec<NetId> {
    raw.iter().copied().map(NetId).collect()
}

pub fn export_circuit(circuit: &Circuit, format: NetlistFormat) -> Result<Vec<u8>, FormatError> {
    circuit.validate().map_err(FormatError::Invalid)?;
    match format {
        NetlistFormat::Structured => export_structured(circuit),
        NetlistFormat::Text => export_text(circuit),
    }
}

fn export_structured(c: &Circuit) -> Result<Vec<u8>, FormatError> {
    let doc = CircuitDoc {
        schema_version: SCHEMA_VERSION.to_string(),
        name: c.name().to_string(),
        width: c.width(),
        const_zero: c.const_zero().map(NetId::index),
        nets: c
            .nets()
            .iter()
            .map(|n| NetDoc {
                id: n.id.index(),
                name: n.name.clone(),
            })
            .collect(),
        cells: c
            .cells()
            .iter()
            .map(|cell| CellDoc {
                id: cell.id.index(),
                kind: cell.kind,
                inputs: ids(&cell.inputs),
                outputs: ids(&cell.outputs),
            })
            .collect(),
        x_inputs: ids(c.x_inputs()),
        y_inputs: ids(c.y_inputs()),
        product_outputs: ids(c.product_outputs()),
    };
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| FormatError::Export(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn export_text(c: &Circuit) -> Result<Vec<u8>, FormatError> {
    if c.name().is_empty() || c.name().chars().any(char::is_whitespace) {
        return Err(FormatError::Export(format!(
            "circuit name `{}` is not a single token",
            c.name()
        )));
    }
    let names = |nets: &[NetId]| {
        nets.iter()
            .map(|&n| c.net_name(n))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(s, "circuit {} width {}", c.name(), c.width());
    let all: Vec<NetId> = c.nets().iter().map(|n| n.id).collect();
    let _ = writeln!(s, "nets {}", names(&all));
    if let Some(z) = c.const_zero() {
        let _ = writeln!(s, "const {}", c.net_name(z));
    }
    let _ = writeln!(s, "x {}", names(c.x_inputs()));
    let _ = writeln!(s, "y {}", names(c.y_inputs()));
    let _ = writeln!(s, "p {}", names(c.product_outputs()));
    for cell in c.cells() {
        let _ = writeln!(
            s,
            "{} {} -> {}",
            cell.kind,
            names(&cell.inputs),
            names(&cell.outputs)
        );
    }
    Ok(s.into_bytes())
}

/// Parses either encoding; the first non-blank byte `{` selects JSON.
pub fn import_circuit(bytes: &[u8]) -> Result<Circuit, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Malformed(e.to_string()))?;
    let circuit = if text.trim_start().starts_with('{') {
        import_structured(text)?
    } else {
        import_text(text)?
    };
    circuit.validate().map_err(FormatError::Invalid)?;
    Ok(circuit)
}

fn import_structured(text: &str) -> Result<Circuit, FormatError> {
    // Check the version before the full schema so newer documents get a clear error.
    let probe: serde_json::Value =
        serde_json::from_str(text).map_err(|e| FormatError::Malformed(e.to_string()))?;
    match probe.get("schema_version").and_then(|v| v.as_str()) {
        Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(FormatError::SchemaVersion(other.to_string())),
        None => return Err(FormatError::Malformed("missing schema_version".into())),
    }
    let doc: CircuitDoc =
        serde_json::from_value(probe).map_err(|e| FormatError::Malformed(e.to_string()))?;

    let mut b = CircuitBuilder::new(doc.name, doc.width);
    for (i, net) in doc.nets.iter().enumerate() {
        if net.id != i {
            return Err(FormatError::Malformed(format!("net id {} at position {i}", net.id)));
        }
        b.add_net(net.name.clone())?;
    }
    if let Some(z) = doc.const_zero {
        b.declare_const_zero(NetId(z))?;
    }
    b.declare_x_inputs(&net_ids(&doc.x_inputs))?;
    b.declare_y_inputs(&net_ids(&doc.y_inputs))?;
    b.declare_product_outputs(&net_ids(&doc.product_outputs))?;
    for (i, cell) in doc.cells.iter().enumerate() {
        if cell.id != i {
            return Err(FormatError::Malformed(format!("cell id {} at position {i}", cell.id)));
        }
        let id = b.add_cell(cell.kind, &net_ids(&cell.inputs), &net_ids(&cell.outputs))?;
        debug_assert_eq!(id, CellId(i));
    }
    Ok(b.seal()?)
}

fn import_text(text: &str) -> Result<Circuit, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let malformed = |line: usize, msg: &str| FormatError::Malformed(format!("line {line}: {msg}"));

    let (hl, header) = lines.next().ok_or_else(|| FormatError::Malformed("empty stream".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (name, width) = match h.as_slice() {
        ["circuit", name, "width", w] => (
            name.to_string(),
            w.parse::<usize>().map_err(|_| malformed(hl, "bad width"))?,
        ),
        _ => return Err(malformed(hl, "expected `circuit <name> width <n>`")),
    };
    let mut b = CircuitBuilder::new(name, width);
    let mut saw_nets = false;
    let lookup = |b: &CircuitBuilder, line: usize, tok: &str| {
        b.net_by_name(tok)
            .ok_or_else(|| malformed(line, &format!("unknown net `{tok}`")))
    };

    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or_default();
        let rest: Vec<&str> = toks.collect();
        match head {
            "nets" => {
                if saw_nets {
                    return Err(malformed(ln, "duplicate `nets` line"));
                }
                saw_nets = true;
                for t in &rest {
                    b.add_net(*t).map_err(|e| malformed(ln, &e.to_string()))?;
                }
            }
            "const" | "x" | "y" | "p" => {
                let nets = rest
                    .iter()
                    .map(|t| lookup(&b, ln, t))
                    .collect::<Result<Vec<_>, _>>()?;
                let r = match head {
                    "const" => match nets.as_slice() {
                        [z] => b.declare_const_zero(*z),
                        _ => return Err(malformed(ln, "`const` takes exactly one net")),
                    },
                    "x" => b.declare_x_inputs(&nets),
                    "y" => b.declare_y_inputs(&nets),
                    _ => b.declare_product_outputs(&nets),
                };
                r.map_err(|e| malformed(ln, &e.to_string()))?;
            }
            kind => {
                let kind = CellKind::parse(kind)
                    .ok_or_else(|| malformed(ln, &format!("unknown keyword `{kind}`")))?;
                let arrow = rest
                    .iter()
                    .position(|t| *t == "->")
                    .ok_or_else(|| malformed(ln, "missing `->`"))?;
                let ins = rest[..arrow]
                    .iter()
                    .map(|t| lookup(&b, ln, t))
                    .collect::<Result<Vec<_>, _>>()?;
                let outs = rest[arrow + 1..]
                    .iter()
                    .map(|t| lookup(&b, ln, t))
                    .collect::<Result<Vec<_>, _>>()?;
                b.add_cell(kind, &ins, &outs)
                    .map_err(|e| malformed(ln, &e.to_string()))?;
            }
        }
    }
    if !saw_nets {
        return Err(FormatError::Malformed("missing `nets` line".into()));
    }
    Ok(b.seal()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_conventional, build_proposed, FirstRowStyle};

    #[test]
    fn roundtrip_both_formats() {
        for c in [
            build_conventional(4, FirstRowStyle::FaWithZeroCin).unwrap(),
            build_proposed(3).unwrap(),
        ] {
            for f in [NetlistFormat::Structured, NetlistFormat::Text] {
                let bytes = export_circuit(&c, f).unwrap();
                assert_eq!(import_circuit(&bytes).unwrap(), c);
            }
        }
    }

    #[test]
    fn truncated_is_malformed() {
        let c = build_proposed(4).unwrap();
        let json = export_circuit(&c, NetlistFormat::Structured).unwrap();
        let err = import_circuit(&json[..json.len() / 2]).unwrap_err();
        assert!(matches!(err, FormatError::Malformed(_)), "{err}");

        let text = export_circuit(&c, NetlistFormat::Text).unwrap();
        let cut = String::from_utf8(text).unwrap();
        let cut: Vec<&str> = cut.lines().take(10).collect();
        let err = import_circuit(cut.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::Invalid(_)), "{err}");
    }

    #[test]
    fn schema_mismatch() {
        let c = build_proposed(2).unwrap();
        let json = String::from_utf8(export_circuit(&c, NetlistFormat::Structured).unwrap()).unwrap();
        let bumped = json.replace("\"schema_version\": \"1\"", "\"schema_version\": \"2\"");
        assert!(matches!(
            import_circuit(bumped.as_bytes()),
            Err(FormatError::SchemaVersion(v)) if v == "2"
        ));
    }

    #[test]
    fn fa_line_token_order() {
        let c = build_conventional(2, FirstRowStyle::FaWithZeroCin).unwrap();
        let text = String::from_utf8(export_circuit(&c, NetlistFormat::Text).unwrap()).unwrap();
        assert!(text.starts_with("circuit conventional_2x2 width 2\n"));
        let fa = c.cells().iter().find(|c| c.kind == CellKind::Fa).unwrap();
        let line = format!(
            "FA {} {} {} -> {} {}",
            c.net_name(fa.inputs[0]),
            c.net_name(fa.inputs[1]),
            c.net_name(fa.inputs[2]),
            c.net_name(fa.outputs[0]),
            c.net_name(fa.outputs[1])
        );
        assert!(text.lines().any(|l| l == line), "{line} not in\n{text}");
    }

    #[test]
    fn unknown_net_in_text() {
        let src = "circuit t width 1\nnets x y p0 p1\nx x\ny y\np p0 p1\nAND2 x q -> p0\n";
        let err = import_circuit(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unknown net `q`"), "{err}");
    }
}
