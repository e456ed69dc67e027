//! OpenQASM 3 emission and a reader for exactly the emitted subset.
//!
//! Each clique phase gate becomes one multi-controlled `rz` on the embedding
//! auxiliary. `rz(φ) = diag(e^{-iφ/2}, e^{iφ/2})`, so a phase of `e^{+2iγ}` on
//! embed `0` (and its conjugate on `1`) is `rz(-4γ)`. Controls are listed
//! real-part auxiliary first, then the clique vertices; `negctrl` marks a
//! control that must read 0.

use std::fmt::Write as _;

use crate::circuit::{CircuitIR, GateIR, Polarity, QubitLayout};
use crate::error::{Error, Result};
use crate::simulator::StateVector;

pub const HEADER: &str = "OPENQASM 3.0;";

pub fn export_qasm(circuit: &CircuitIR) -> String {
    let layout = circuit.layout;
    let m = layout.total();
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str("include \"stdgates.inc\";\n");
    let _ = writeln!(
        out,
        "// targets q[0..{}], embedding aux q[{}], real-part aux q[{}..{}]",
        layout.n_target,
        layout.embed_aux(),
        layout.n_target + 1,
        m
    );
    let _ = writeln!(out, "qubit[{m}] q;");
    let _ = writeln!(out, "bit[{}] x;", layout.n_target);
    if layout.n_cliques > 0 {
        let _ = writeln!(out, "bit[{}] rp;", layout.n_cliques);
    }
    for q in 0..m {
        let _ = writeln!(out, "h q[{q}];");
    }
    for gate in &circuit.gates {
        match gate {
            GateIR::Hadamard(q) => {
                let _ = writeln!(out, "h q[{q}];");
            }
            GateIR::CliquePhase {
                rp_control,
                polarity,
                targets,
                embed,
                y,
                gamma,
                adjoint,
                ..
            } => {
                let angle = if *adjoint { 4.0 * gamma } else { -4.0 * gamma };
                let k = targets.len();
                let mut modifiers = vec![match polarity {
                    Polarity::OnZero => "negctrl",
                    Polarity::OnOne => "ctrl",
                }];
                modifiers.extend((0..k).map(|i| {
                    if (y >> (k - 1 - i)) & 1 == 1 {
                        "ctrl"
                    } else {
                        "negctrl"
                    }
                }));
                let qubits: Vec<String> = std::iter::once(*rp_control)
                    .chain(targets.iter().copied())
                    .chain(std::iter::once(*embed))
                    .map(|q| format!("q[{q}]"))
                    .collect();
                let _ = writeln!(
                    out,
                    "{} @ rz({}) {};",
                    modifiers.join(" @ "),
                    angle,
                    qubits.join(", ")
                );
            }
        }
    }
    for c in 0..layout.n_cliques {
        let _ = writeln!(out, "rp[{c}] = measure q[{}];", layout.rp_aux(c));
    }
    for v in 0..layout.n_target {
        let _ = writeln!(out, "x[{v}] = measure q[{v}];");
    }
    out
}

/// Number of gate statements (everything except declarations and measurements).
pub fn count_gate_statements(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| l.starts_with("h ") || l.contains(" @ "))
        .count()
}

pub fn count_measurements(text: &str) -> usize {
    text.lines().filter(|l| l.contains("= measure ")).count()
}

/// A parsed program: all gates in order, including the initial Hadamards,
/// meant to run from `|0…0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct QasmProgram {
    pub layout: QubitLayout,
    pub gates: Vec<GateIR>,
}

impl QasmProgram {
    pub fn run(&self) -> Result<StateVector> {
        let mut state = StateVector::zero(self.layout.total());
        for g in &self.gates {
            state.apply_gate(g)?;
        }
        Ok(state)
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Qasm {
        line,
        msg: msg.into(),
    }
}

fn parse_qubit(tok: &str, line: usize) -> Result<usize> {
    tok.trim()
        .strip_prefix("q[")
        .and_then(|t| t.strip_suffix(']'))
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(line, format!("bad qubit operand {tok:?}")))
}

fn parse_width(rest: &str, name: &str, line: usize) -> Result<usize> {
    rest.strip_suffix(&format!("] {name}"))
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(line, "bad declaration"))
}

/// Read text produced by [`export_qasm`].
pub fn parse_qasm(text: &str) -> Result<QasmProgram> {
    let mut m = None;
    let mut n = None;
    let mut k = 0usize;
    let mut gates = Vec::new();
    let mut saw_header = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let stmt = line
            .strip_suffix(';')
            .ok_or_else(|| err(line_no, "missing ';'"))?
            .trim();
        if stmt.starts_with("OPENQASM") {
            if stmt != "OPENQASM 3.0" {
                return Err(err(line_no, "only OPENQASM 3.0 is supported"));
            }
            saw_header = true;
        } else if stmt.starts_with("include") || stmt.contains("= measure ") {
            continue;
        } else if let Some(rest) = stmt.strip_prefix("qubit[") {
            m = Some(parse_width(rest, "q", line_no)?);
        } else if let Some(rest) = stmt.strip_prefix("bit[") {
            if rest.ends_with("] x") {
                n = Some(parse_width(rest, "x", line_no)?);
            } else {
                k = parse_width(rest, "rp", line_no)?;
            }
        } else if let Some(rest) = stmt.strip_prefix("h ") {
            gates.push(GateIR::Hadamard(parse_qubit(rest, line_no)?));
        } else if stmt.contains(" @ ") {
            let n = n.ok_or_else(|| err(line_no, "gate before register declarations"))?;
            let parts: Vec<&str> = stmt.split(" @ ").map(str::trim).collect();
            let (mods, call) = parts.split_at(parts.len() - 1);
            let call = call[0];
            let angle_str = call
                .strip_prefix("rz(")
                .and_then(|r| r.split_once(')'))
                .ok_or_else(|| err(line_no, "expected rz(angle)"))?;
            let angle: f64 = angle_str
                .0
                .parse()
                .map_err(|_| err(line_no, format!("bad angle {:?}", angle_str.0)))?;
            let qubits = angle_str
                .1
                .split(',')
                .map(|t| parse_qubit(t, line_no))
                .collect::<Result<Vec<_>>>()?;
            if qubits.len() != mods.len() + 1 || mods.len() < 2 {
                return Err(err(line_no, "operand count does not match modifiers"));
            }
            let positive = mods
                .iter()
                .map(|m| match *m {
                    "ctrl" => Ok(true),
                    "negctrl" => Ok(false),
                    other => Err(err(line_no, format!("unsupported modifier {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let rp_control = qubits[0];
            let clique = rp_control
                .checked_sub(n + 1)
                .ok_or_else(|| err(line_no, "first control is not a real-part auxiliary"))?;
            let polarity = if positive[0] {
                Polarity::OnOne
            } else {
                Polarity::OnZero
            };
            let y = positive[1..]
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | b as usize);
            let phase = -angle / 2.0;
            let adjoint = if phase == 0.0 {
                polarity == Polarity::OnOne
            } else {
                phase < 0.0
            };
            gates.push(GateIR::CliquePhase {
                rp_control,
                polarity,
                clique,
                targets: qubits[1..qubits.len() - 1].to_vec(),
                embed: qubits[qubits.len() - 1],
                y,
                gamma: phase.abs() / 2.0,
                adjoint,
            });
        } else {
            return Err(err(line_no, format!("unsupported statement {stmt:?}")));
        }
    }
    if !saw_header {
        return Err(err(1, "missing OPENQASM header"));
    }
    let m = m.ok_or_else(|| err(0, "missing qubit declaration"))?;
    let n = n.ok_or_else(|| err(0, "missing target bit declaration"))?;
    let layout = QubitLayout::new(n, k);
    if layout.total() != m {
        return Err(err(0, format!("{m} qubits do not match n={n} and {k} cliques")));
    }
    if let Some(q) = gates.iter().flat_map(|g| g.qubits()).find(|&q| q >= m) {
        return Err(Error::QubitOutOfRange { qubit: q, m });
    }
    Ok(QasmProgram { layout, gates })
}
