//! Gate-list circuit IR and the line-oriented text format.
//!
//! Format: a `qubits <n>` header, then one gate per line as
//! `<name> <q...> [<angle>]` with angles in radians. `#` starts a comment.

use std::fmt::Write as _;

use thiserror::Error;

/// Hard limit on parseable register width; state indices are packed into u64.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
}

impl GateKind {
    pub fn from_name(name: &str) -> Option<GateKind> {
        Some(match name {
            "h" => GateKind::H,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "s" => GateKind::S,
            "t" => GateKind::T,
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "cx" => GateKind::Cx,
            "cz" => GateKind::Cz,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
        }
    }

    /// Number of qubit operands.
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz => 2,
            _ => 1,
        }
    }

    /// Number of angle parameters.
    pub fn param_count(&self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Gate {
        Gate {
            kind,
            qubits,
            params,
        }
    }

    pub fn h(q: usize) -> Gate {
        Gate::new(GateKind::H, vec![q], vec![])
    }

    pub fn x(q: usize) -> Gate {
        Gate::new(GateKind::X, vec![q], vec![])
    }

    pub fn y(q: usize) -> Gate {
        Gate::new(GateKind::Y, vec![q], vec![])
    }

    pub fn z(q: usize) -> Gate {
        Gate::new(GateKind::Z, vec![q], vec![])
    }

    pub fn s(q: usize) -> Gate {
        Gate::new(GateKind::S, vec![q], vec![])
    }

    pub fn t(q: usize) -> Gate {
        Gate::new(GateKind::T, vec![q], vec![])
    }

    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Rx, vec![q], vec![theta])
    }

    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Ry, vec![q], vec![theta])
    }

    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Rz, vec![q], vec![theta])
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::new(GateKind::Cx, vec![control, target], vec![])
    }

    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::new(GateKind::Cz, vec![a, b], vec![])
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown gate `{name}`")]
    UnknownGate { line: usize, name: String },
    #[error("line {line}: qubit index {index} out of range (n_qubits = {n})")]
    QubitOutOfRange { line: usize, index: usize, n: usize },
    #[error("line {line}: gate `{name}` expects {expected} qubit(s), got {got}")]
    ArityMismatch {
        line: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: two-qubit gate with duplicate qubit {qubit}")]
    DuplicateQubit { line: usize, qubit: usize },
    #[error("missing `qubits <n>` header")]
    MissingHeader,
    #[error("line {line}: qubit count must be in 1..={max}, got {n}")]
    BadWidth { line: usize, n: usize, max: usize },
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Circuit {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) {
        debug_assert!(self.check_gate(&gate).is_ok());
        self.gates.push(gate);
    }

    fn check_gate(&self, gate: &Gate) -> Result<(), String> {
        if gate.qubits.len() != gate.kind.arity() {
            return Err(format!("arity mismatch for {}", gate.kind.name()));
        }
        if gate.params.len() != gate.kind.param_count() {
            return Err(format!("param count mismatch for {}", gate.kind.name()));
        }
        for &q in &gate.qubits {
            if q >= self.n_qubits {
                return Err(format!("qubit {q} out of range"));
            }
        }
        if gate.qubits.len() == 2 && gate.qubits[0] == gate.qubits[1] {
            return Err("duplicate qubit on two-qubit gate".into());
        }
        Ok(())
    }

    /// Circuit depth: length of the longest gate chain along qubit lines.
    pub fn depth(&self) -> usize {
        let mut per_qubit = vec![0usize; self.n_qubits];
        for gate in &self.gates {
            let d = 1 + gate.qubits.iter().map(|&q| per_qubit[q]).max().unwrap_or(0);
            for &q in &gate.qubits {
                per_qubit[q] = d;
            }
        }
        per_qubit.into_iter().max().unwrap_or(0)
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "qubits {}", self.n_qubits).unwrap();
        for gate in &self.gates {
            out.push_str(gate.kind.name());
            for &q in &gate.qubits {
                write!(out, " {q}").unwrap();
            }
            for &p in &gate.params {
                write!(out, " {p:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Parse the text circuit format. Gates are returned in source order.
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().unwrap();

        if circuit.is_none() {
            if head != "qubits" {
                return Err(ParseError::MissingHeader);
            }
            let n: usize = tokens
                .next()
                .ok_or_else(|| ParseError::Syntax {
                    line: line_no,
                    msg: "expected qubit count".into(),
                })?
                .parse()
                .map_err(|_| ParseError::Syntax {
                    line: line_no,
                    msg: "invalid qubit count".into(),
                })?;
            if tokens.next().is_some() {
                return Err(ParseError::Syntax {
                    line: line_no,
                    msg: "trailing tokens after header".into(),
                });
            }
            if n == 0 || n > MAX_QUBITS {
                return Err(ParseError::BadWidth {
                    line: line_no,
                    n,
                    max: MAX_QUBITS,
                });
            }
            circuit = Some(Circuit::new(n));
            continue;
        }

        let circ = circuit.as_mut().unwrap();
        let kind = GateKind::from_name(head).ok_or_else(|| ParseError::UnknownGate {
            line: line_no,
            name: head.to_string(),
        })?;
        let rest: Vec<&str> = tokens.collect();
        let expected = kind.arity() + kind.param_count();
        if rest.len() != expected {
            return Err(ParseError::ArityMismatch {
                line: line_no,
                name: head.to_string(),
                expected: kind.arity(),
                got: rest.len().saturating_sub(kind.param_count()),
            });
        }
        let mut qubits = Vec::with_capacity(kind.arity());
        for tok in &rest[..kind.arity()] {
            let q: usize = tok.parse().map_err(|_| ParseError::Syntax {
                line: line_no,
                msg: format!("invalid qubit index `{tok}`"),
            })?;
            if q >= circ.n_qubits {
                return Err(ParseError::QubitOutOfRange {
                    line: line_no,
                    index: q,
                    n: circ.n_qubits,
                });
            }
            qubits.push(q);
        }
        if kind.arity() == 2 && qubits[0] == qubits[1] {
            return Err(ParseError::DuplicateQubit {
                line: line_no,
                qubit: qubits[0],
            });
        }
        let mut params = Vec::with_capacity(kind.param_count());
        for tok in &rest[kind.arity()..] {
            let v: f64 = tok.parse().map_err(|_| ParseError::Syntax {
                line: line_no,
                msg: format!("invalid angle `{tok}`"),
            })?;
            params.push(v);
        }
        circ.gates.push(Gate::new(kind, qubits, params));
    }
    circuit.ok_or(ParseError::MissingHeader)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_circuit() {
        let c = parse_circuit("qubits 2\nh 0\ncx 0 1\n").unwrap();
        assert_eq!(c.n_qubits, 2);
        assert_eq!(c.gates, vec![Gate::h(0), Gate::cx(0, 1)]);
    }

    #[test]
    fn parses_comments_and_params() {
        let c = parse_circuit("# a comment\nqubits 4\nrz 3 1.5707963267948966 # pi/2\n").unwrap();
        assert_eq!(c.gates.len(), 1);
        assert_eq!(c.gates[0], Gate::rz(3, std::f64::consts::FRAC_PI_2));
    }

    #[test]
    fn rejects_duplicate_qubit() {
        let err = parse_circuit("qubits 1\ncx 0 0\n").unwrap_err();
        assert_eq!(err, ParseError::DuplicateQubit { line: 2, qubit: 0 });
    }

    #[test]
    fn rejects_unknown_gate() {
        let err = parse_circuit("qubits 2\nswap 0 1\n").unwrap_err();
        assert!(matches!(err, ParseError::UnknownGate { line: 2, .. }));
    }

    #[test]
    fn rejects_out_of_range_qubit() {
        let err = parse_circuit("qubits 2\nh 2\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::QubitOutOfRange {
                line: 2,
                index: 2,
                n: 2
            }
        );
    }

    #[test]
    fn rejects_missing_header() {
        assert_eq!(
            parse_circuit("h 0\n").unwrap_err(),
            ParseError::MissingHeader
        );
        assert_eq!(parse_circuit("").unwrap_err(), ParseError::MissingHeader);
    }

    #[test]
    fn rejects_arity_mismatch() {
        let err = parse_circuit("qubits 2\ncx 0\n").unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { line: 2, .. }));
    }

    #[test]
    fn round_trips_through_text() {
        let src = "qubits 3\nh 0\nrz 1 0.12345678901234567\ncx 0 2\nry 2 -2.5\n";
        let c = parse_circuit(src).unwrap();
        let again = parse_circuit(&c.to_text()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn depth_counts_longest_chain() {
        let mut c = Circuit::new(3);
        c.push(Gate::h(0));
        c.push(Gate::cx(0, 1));
        c.push(Gate::cx(1, 2));
        c.push(Gate::h(2));
        assert_eq!(c.depth(), 4);
        assert_eq!(Circuit::new(2).depth(), 0);
    }
}
