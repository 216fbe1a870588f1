//! Gate-list circuit representation and structural utilities.

mod qasm;

pub use qasm::{parse_qasm, serialize_qasm, QasmError};

use std::fmt;

use thiserror::Error;

use crate::bitstring::BitString;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("gate {gate}: {reason}")]
    InvalidGate { gate: String, reason: String },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("classical bit {clbit} out of range for {num_clbits} classical bits")]
    ClbitOutOfRange { clbit: usize, num_clbits: usize },
    #[error("gate {gate} acts on qubit {qubit} after it was measured")]
    GateAfterMeasure { gate: String, qubit: usize },
    #[error("classical bit {0} is written by more than one measurement")]
    ClbitReused(usize),
    #[error("input has {got} bits, circuit expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Gate vocabulary. Rotation and phase angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    Cp(f64),
    Cx,
    Cz,
    Swap,
    Ccx,
    /// Multi-controlled X with the given number of controls.
    Mcx(usize),
    Measure,
}

impl GateKind {
    /// OpenQASM mnemonic. `mcx` is an extension outside `qelib1.inc`.
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx(_) => "rx",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::Cp(_) => "cp",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Ccx => "ccx",
            GateKind::Mcx(_) => "mcx",
            GateKind::Measure => "measure",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::H
            | GateKind::S
            | GateKind::Sdg
            | GateKind::T
            | GateKind::Tdg
            | GateKind::Rx(_)
            | GateKind::Ry(_)
            | GateKind::Rz(_)
            | GateKind::Measure => 1,
            GateKind::Cp(_) | GateKind::Cx | GateKind::Cz | GateKind::Swap => 2,
            GateKind::Ccx => 3,
            GateKind::Mcx(n) => n + 1,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) | GateKind::Cp(t) => Some(*t),
            _ => None,
        }
    }

    pub fn is_measure(&self) -> bool {
        matches!(self, GateKind::Measure)
    }

    /// Every unitary kind with a fixed arity, in a stable order. Rotations carry a zero angle.
    pub fn unitary_kinds() -> Vec<GateKind> {
        vec![
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::T,
            GateKind::Tdg,
            GateKind::Rx(0.0),
            GateKind::Ry(0.0),
            GateKind::Rz(0.0),
            GateKind::Cp(0.0),
            GateKind::Cx,
            GateKind::Cz,
            GateKind::Swap,
            GateKind::Ccx,
        ]
    }

    /// Parses a bare mnemonic (no angle) into a kind with a placeholder angle of zero.
    pub fn from_name(name: &str) -> Option<GateKind> {
        Some(match name {
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "h" => GateKind::H,
            "s" => GateKind::S,
            "sdg" => GateKind::Sdg,
            "t" => GateKind::T,
            "tdg" => GateKind::Tdg,
            "rx" => GateKind::Rx(0.0),
            "ry" => GateKind::Ry(0.0),
            "rz" => GateKind::Rz(0.0),
            "cp" => GateKind::Cp(0.0),
            "cx" => GateKind::Cx,
            "cz" => GateKind::Cz,
            "swap" => GateKind::Swap,
            "ccx" => GateKind::Ccx,
            "mcx" => GateKind::Mcx(1),
            "measure" => GateKind::Measure,
            _ => return None,
        })
    }
}

/// One gate application. For controlled kinds the controls come first and the
/// target last.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub clbit: Option<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: impl Into<Vec<usize>>) -> Self {
        Self {
            kind,
            qubits: qubits.into(),
            clbit: None,
        }
    }

    pub fn measure(qubit: usize, clbit: usize) -> Self {
        Self {
            kind: GateKind::Measure,
            qubits: vec![qubit],
            clbit: Some(clbit),
        }
    }

    fn check_shape(&self) -> Result<(), CircuitError> {
        let invalid = |reason: String| CircuitError::InvalidGate {
            gate: self.kind.name().to_string(),
            reason,
        };
        if let GateKind::Mcx(0) = self.kind {
            return Err(invalid("mcx needs at least one control".into()));
        }
        if let Some(theta) = self.kind.angle() {
            if !theta.is_finite() {
                return Err(invalid(format!("angle {theta} is not finite")));
            }
        }
        if self.qubits.len() != self.kind.arity() {
            return Err(invalid(format!(
                "expects {} qubits, got {}",
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if self.qubits[..i].contains(q) {
                return Err(invalid(format!("qubit {q} used twice")));
            }
        }
        match (self.kind.is_measure(), self.clbit) {
            (true, None) => Err(invalid("measure without a classical bit".into())),
            (false, Some(_)) => Err(invalid("only measure writes a classical bit".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if let Some(theta) = self.kind.angle() {
            write!(f, "({theta})")?;
        }
        for (i, q) in self.qubits.iter().enumerate() {
            write!(f, "{}q{q}", if i == 0 { " " } else { "," })?;
        }
        if let Some(c) = self.clbit {
            write!(f, "->c{c}")?;
        }
        Ok(())
    }
}

/// A quantum program: an ordered gate list over `num_qubits` qubits, with
/// measurements writing into `num_clbits` classical bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub name: String,
    /// Quantum register name used in QASM form.
    pub qreg: String,
    /// Classical register name used in QASM form.
    pub creg: String,
    pub num_qubits: usize,
    pub num_clbits: usize,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CircuitStats {
    pub num_qubits: usize,
    pub num_gates: usize,
    pub depth: usize,
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize, num_clbits: usize) -> Self {
        Self {
            name: name.into(),
            qreg: "q".into(),
            creg: "c".into(),
            num_qubits,
            num_clbits,
            gates: Vec::new(),
        }
    }

    /// Appends a gate after checking it against the circuit's invariants.
    pub fn push(&mut self, gate: Gate) -> Result<&mut Self, CircuitError> {
        self.check_gate(&gate, self.gates.len())?;
        self.gates.push(gate);
        Ok(self)
    }

    /// Builder-style append for hand-written circuits; panics on invalid gates.
    pub fn with(mut self, kind: GateKind, qubits: impl Into<Vec<usize>>) -> Self {
        let gate = Gate::new(kind, qubits);
        self.push(gate).unwrap_or_else(|e| panic!("{e}"));
        self
    }

    /// Appends a measurement of every qubit `i` into classical bit `i`.
    pub fn measure_all(mut self) -> Self {
        assert!(self.num_clbits >= self.num_qubits);
        for q in 0..self.num_qubits {
            self.push(Gate::measure(q, q)).unwrap_or_else(|e| panic!("{e}"));
        }
        self
    }

    fn check_gate(&self, gate: &Gate, position: usize) -> Result<(), CircuitError> {
        gate.check_shape()?;
        for &q in &gate.qubits {
            if q >= self.num_qubits {
                return Err(CircuitError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        if let Some(c) = gate.clbit {
            if c >= self.num_clbits {
                return Err(CircuitError::ClbitOutOfRange {
                    clbit: c,
                    num_clbits: self.num_clbits,
                });
            }
            if self.gates[..position].iter().any(|g| g.clbit == Some(c)) {
                return Err(CircuitError::ClbitReused(c));
            }
        }
        if !gate.kind.is_measure() {
            for &q in &gate.qubits {
                let measured = self.gates[..position]
                    .iter()
                    .any(|g| g.kind.is_measure() && g.qubits[0] == q);
                if measured {
                    return Err(CircuitError::GateAfterMeasure {
                        gate: gate.kind.name().to_string(),
                        qubit: q,
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks every circuit invariant.
    pub fn validate(&self) -> Result<(), CircuitError> {
        self.gates
            .iter()
            .enumerate()
            .try_for_each(|(i, g)| self.check_gate(g, i))
    }

    /// Number of input bits accepted by [`bind_input`]. Equals the qubit count,
    /// except that circuits measuring fewer bits than they have qubits also
    /// accept inputs of `num_clbits` bits (see [`bind_input`]).
    pub fn accepts_input_width(&self, width: usize) -> bool {
        width == self.num_qubits || (self.num_clbits < self.num_qubits && width == self.num_clbits)
    }

    /// Width of the input register used when enumerating inputs: the measured
    /// register when it is narrower than the qubit register, otherwise all qubits.
    pub fn input_width(&self) -> usize {
        if self.num_clbits > 0 && self.num_clbits < self.num_qubits {
            self.num_clbits
        } else {
            self.num_qubits
        }
    }

    pub fn stats(&self) -> CircuitStats {
        circuit_stats(self)
    }

    /// Depth counting measurement as one more layer on the qubits it reads.
    pub fn depth_with_measurement(&self) -> usize {
        layered_depth(self.gates.iter(), self.num_qubits)
    }
}

fn layered_depth<'a>(gates: impl Iterator<Item = &'a Gate>, num_qubits: usize) -> usize {
    let mut level = vec![0usize; num_qubits];
    for g in gates {
        let next = g.qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for &q in &g.qubits {
            level[q] = next;
        }
    }
    level.into_iter().max().unwrap_or(0)
}

/// Qubit count, non-measurement gate count, and depth (longest chain of
/// gates linked through shared qubits, measurements excluded).
pub fn circuit_stats(c: &Circuit) -> CircuitStats {
    let unitary = || c.gates.iter().filter(|g| !g.kind.is_measure());
    CircuitStats {
        num_qubits: c.num_qubits,
        num_gates: unitary().count(),
        depth: layered_depth(unitary(), c.num_qubits),
    }
}

/// Prepares a computational-basis input: an X gate is prepended on every
/// qubit whose input bit is 1, ahead of all existing gates.
///
/// Bit `i` of `input` (counting from the right of the textual form) drives
/// qubit `i`. An input narrower than the qubit register is accepted when its
/// width equals the classical register width; the remaining qubits are work
/// qubits and start in |0⟩.
pub fn bind_input(c: &Circuit, input: &BitString) -> Result<Circuit, CircuitError> {
    if !c.accepts_input_width(input.width()) {
        return Err(CircuitError::LengthMismatch {
            expected: c.num_qubits,
            got: input.width(),
        });
    }
    let mut bound = c.clone();
    let prologue = (0..input.width())
        .filter(|&q| input.bit(q))
        .map(|q| Gate::new(GateKind::X, [q]));
    bound.gates = prologue.chain(c.gates.iter().cloned()).collect();
    Ok(bound)
}

/// The three-qubit GHZ program: H on q0, then a CX chain q0→q1→q2, then
/// every qubit measured into the classical bit of the same index.
pub fn ghz(num_qubits: usize) -> Circuit {
    assert!(num_qubits >= 2);
    let mut c = Circuit::new(format!("ghz{num_qubits}"), num_qubits, num_qubits).with(GateKind::H, [0]);
    for q in 0..num_qubits - 1 {
        c = c.with(GateKind::Cx, [q, q + 1]);
    }
    c.measure_all()
}

/// Two-qubit Bell pair (|00⟩ + |11⟩)/√2 with both qubits measured.
pub fn bell() -> Circuit {
    let mut c = ghz(2);
    c.name = "bell".into();
    c
}

/// A reversible expression evaluator on three qubits: q2 ^= q0·q1, then
/// q1 ^= q0, then q0 is negated. Deterministic on every basis input.
pub fn expression3() -> Circuit {
    Circuit::new("expr3", 3, 3)
        .with(GateKind::Ccx, [0, 1, 2])
        .with(GateKind::Cx, [0, 1])
        .with(GateKind::X, [0])
        .measure_all()
}

/// Quantum Fourier transform on `n` qubits (with the final qubit-reversal swaps).
pub fn qft(n: usize) -> Circuit {
    let mut c = Circuit::new(format!("qft{n}"), n, n);
    for target in (0..n).rev() {
        c = c.with(GateKind::H, [target]);
        for control in (0..target).rev() {
            let theta = std::f64::consts::PI / f64::from(1u32 << (target - control));
            c = c.with(GateKind::Cp(theta), [control, target]);
        }
    }
    for q in 0..n / 2 {
        c = c.with(GateKind::Swap, [q, n - 1 - q]);
    }
    c.measure_all()
}
