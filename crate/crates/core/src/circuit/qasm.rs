//! OpenQASM 2.0 subset reader and writer.
//!
//! Accepted programs declare at most one `qreg` and one `creg`, use gates from
//! [`GateKind`] (plus `barrier`, which is dropped), and may broadcast
//! single-qubit gates and `measure` over whole registers. `mcx` is accepted as
//! an extension: the last argument is the target, the rest are controls.
//!
//! A leading `// circuit: <name>` comment sets the circuit name; otherwise the
//! name is taken from the quantum register.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, CircuitError, Gate, GateKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported gate {0:?}")]
    UnsupportedGate(String),
    #[error("index {index} out of range for register {register}[{size}]")]
    IndexOutOfRange {
        register: String,
        index: usize,
        size: usize,
    },
    #[error(transparent)]
    Invalid(#[from] CircuitError),
}

const NAME_TAG: &str = "// circuit:";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Sym(char),
    Arrow,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> QasmError {
    QasmError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, QasmError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let code = raw.find("//").map_or(raw, |i| &raw[..i]);
        let chars: Vec<char> = code.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Ident(ident), line, col });
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let num: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Number(num), line, col });
            } else if c == '"' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(syntax(line, col, "unterminated string"));
                }
                let s: String = chars[start..i].iter().collect();
                i += 1;
                out.push(Token { tok: Tok::Str(s), line, col });
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push(Token { tok: Tok::Arrow, line, col });
                i += 2;
            } else if ";,[]()+-*/".contains(c) {
                out.push(Token { tok: Tok::Sym(c), line, col });
                i += 1;
            } else {
                return Err(syntax(line, col, format!("unexpected character {c:?}")));
            }
        }
    }
    Ok(out)
}

struct Register {
    name: String,
    size: usize,
}

/// A gate operand: a single register element or a whole register.
enum Operand {
    Bit(usize),
    Whole(usize),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qreg: Option<Register>,
    creg: Option<Register>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        match self.tokens.get(self.pos).or(self.tokens.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn error(&self, message: impl Into<String>) -> QasmError {
        let (line, col) = self.here();
        syntax(line, col, message)
    }

    fn next(&mut self) -> Result<Token, QasmError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_sym(&mut self, sym: char) -> Result<(), QasmError> {
        match self.peek() {
            Some(Token { tok: Tok::Sym(c), .. }) if *c == sym => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected '{sym}'"))),
        }
    }

    fn eat_sym(&mut self, sym: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Sym(c), .. }) if *c == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, QasmError> {
        match self.next()? {
            Token { tok: Tok::Ident(s), .. } => Ok(s),
            t => Err(syntax(t.line, t.col, "expected identifier")),
        }
    }

    fn integer(&mut self) -> Result<usize, QasmError> {
        match self.next()? {
            Token { tok: Tok::Number(s), line, col } => s
                .parse()
                .map_err(|_| syntax(line, col, format!("expected integer, found {s}"))),
            t => Err(syntax(t.line, t.col, "expected integer")),
        }
    }

    fn header(&mut self) -> Result<(), QasmError> {
        match self.next()? {
            Token { tok: Tok::Ident(s), .. } if s == "OPENQASM" => {}
            t => return Err(syntax(t.line, t.col, "program must start with OPENQASM 2.0;")),
        }
        match self.next()? {
            Token { tok: Tok::Number(v), .. } if v == "2.0" || v == "2" => {}
            t => return Err(syntax(t.line, t.col, "only OPENQASM 2.0 is supported")),
        }
        self.expect_sym(';')
    }

    fn register_decl(&mut self, quantum: bool) -> Result<(), QasmError> {
        let (line, col) = self.here();
        let name = self.ident()?;
        self.expect_sym('[')?;
        let size = self.integer()?;
        self.expect_sym(']')?;
        self.expect_sym(';')?;
        let slot = if quantum { &mut self.qreg } else { &mut self.creg };
        if slot.is_some() {
            let kind = if quantum { "qreg" } else { "creg" };
            return Err(syntax(line, col, format!("only one {kind} is supported")));
        }
        if quantum && size == 0 {
            return Err(syntax(line, col, "qreg must have at least one qubit"));
        }
        *slot = Some(Register { name, size });
        Ok(())
    }

    fn operand(&mut self, quantum: bool) -> Result<Operand, QasmError> {
        let (line, col) = self.here();
        let name = self.ident()?;
        let reg = if quantum { &self.qreg } else { &self.creg };
        let (reg_name, size) = match reg {
            Some(r) if r.name == name => (r.name.clone(), r.size),
            _ => return Err(syntax(line, col, format!("unknown register {name:?}"))),
        };
        if !self.eat_sym('[') {
            return Ok(Operand::Whole(size));
        }
        let index = self.integer()?;
        self.expect_sym(']')?;
        if index >= size {
            return Err(QasmError::IndexOutOfRange {
                register: reg_name,
                index,
                size,
            });
        }
        Ok(Operand::Bit(index))
    }

    fn qubit_list(&mut self) -> Result<Vec<Operand>, QasmError> {
        let mut args = vec![self.operand(true)?];
        while self.eat_sym(',') {
            args.push(self.operand(true)?);
        }
        Ok(args)
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym('+') {
                v += self.term()?;
            } else if self.eat_sym('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.factor()?;
        loop {
            if self.eat_sym('*') {
                v *= self.factor()?;
            } else if self.eat_sym('/') {
                v /= self.factor()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn factor(&mut self) -> Result<f64, QasmError> {
        if self.eat_sym('-') {
            return Ok(-self.factor()?);
        }
        if self.eat_sym('+') {
            return self.factor();
        }
        if self.eat_sym('(') {
            let v = self.expr()?;
            self.expect_sym(')')?;
            return Ok(v);
        }
        match self.next()? {
            Token { tok: Tok::Number(s), line, col } => s
                .parse()
                .map_err(|_| syntax(line, col, format!("bad number {s}"))),
            Token { tok: Tok::Ident(s), .. } if s == "pi" => Ok(std::f64::consts::PI),
            t => Err(syntax(t.line, t.col, "expected a number, 'pi' or '('")),
        }
    }

    fn statement(&mut self, circuit: &mut Circuit) -> Result<(), QasmError> {
        let (line, col) = self.here();
        let keyword = self.ident()?;
        match keyword.as_str() {
            "include" => {
                match self.next()? {
                    Token { tok: Tok::Str(_), .. } => {}
                    t => return Err(syntax(t.line, t.col, "expected include path")),
                }
                self.expect_sym(';')
            }
            "qreg" => self.register_decl(true),
            "creg" => self.register_decl(false),
            "barrier" => {
                self.qubit_list()?;
                self.expect_sym(';')
            }
            "measure" => {
                let q = self.operand(true)?;
                match self.next()? {
                    Token { tok: Tok::Arrow, .. } => {}
                    t => return Err(syntax(t.line, t.col, "expected '->'")),
                }
                let c = self.operand(false)?;
                self.expect_sym(';')?;
                match (q, c) {
                    (Operand::Bit(q), Operand::Bit(c)) => {
                        self.push(circuit, Gate::measure(q, c), line, col)
                    }
                    (Operand::Whole(nq), Operand::Whole(nc)) if nq == nc => {
                        for i in 0..nq {
                            self.push(circuit, Gate::measure(i, i), line, col)?;
                        }
                        Ok(())
                    }
                    _ => Err(syntax(line, col, "measure operands must both be bits or equal-size registers")),
                }
            }
            "gate" | "opaque" | "if" | "reset" => Err(syntax(
                line,
                col,
                format!("'{keyword}' statements are not supported"),
            )),
            name => self.gate_statement(circuit, name, line, col),
        }
    }

    fn gate_statement(
        &mut self,
        circuit: &mut Circuit,
        name: &str,
        line: usize,
        col: usize,
    ) -> Result<(), QasmError> {
        let template = match GateKind::from_name(name) {
            Some(k) if !k.is_measure() => k,
            _ => return Err(QasmError::UnsupportedGate(name.to_string())),
        };
        let kind = if template.angle().is_some() {
            self.expect_sym('(')?;
            let theta = self.expr()?;
            self.expect_sym(')')?;
            match template {
                GateKind::Rx(_) => GateKind::Rx(theta),
                GateKind::Ry(_) => GateKind::Ry(theta),
                GateKind::Rz(_) => GateKind::Rz(theta),
                _ => GateKind::Cp(theta),
            }
        } else {
            template
        };
        let args = self.qubit_list()?;
        self.expect_sym(';')?;

        if let [Operand::Whole(size)] = args[..] {
            if kind.arity() == 1 {
                for q in 0..size {
                    self.push(circuit, Gate::new(kind, [q]), line, col)?;
                }
                return Ok(());
            }
        }
        let mut qubits = Vec::with_capacity(args.len());
        for a in args {
            match a {
                Operand::Bit(q) => qubits.push(q),
                Operand::Whole(_) => {
                    return Err(syntax(line, col, "register broadcast only supported for single-qubit gates"))
                }
            }
        }
        let kind = match kind {
            GateKind::Mcx(_) if qubits.len() < 2 => {
                return Err(syntax(line, col, "mcx needs at least one control and a target"))
            }
            GateKind::Mcx(_) => GateKind::Mcx(qubits.len() - 1),
            k => k,
        };
        self.push(circuit, Gate::new(kind, qubits), line, col)
    }

    fn push(&self, circuit: &mut Circuit, gate: Gate, line: usize, col: usize) -> Result<(), QasmError> {
        if circuit.num_qubits == 0 {
            return Err(syntax(line, col, "gate before qreg declaration"));
        }
        circuit.push(gate)?;
        Ok(())
    }
}

/// Parses an OpenQASM 2.0 subset program into a validated [`Circuit`].
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let tagged_name = text
        .lines()
        .map(str::trim)
        .find_map(|l| l.strip_prefix(NAME_TAG))
        .map(|n| n.trim().to_string());

    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        qreg: None,
        creg: None,
    };
    p.header()?;
    let mut circuit = Circuit::new(String::new(), 0, 0);
    while p.peek().is_some() {
        let declared_q = p.qreg.is_some();
        let declared_c = p.creg.is_some();
        p.statement(&mut circuit)?;
        // Registers may be declared after gates only if nothing refers to them yet;
        // sizes are fixed from the moment of declaration.
        if !declared_q {
            if let Some(r) = &p.qreg {
                circuit.num_qubits = r.size;
                circuit.qreg = r.name.clone();
            }
        }
        if !declared_c {
            if let Some(r) = &p.creg {
                circuit.num_clbits = r.size;
                circuit.creg = r.name.clone();
            }
        }
    }
    if p.qreg.is_none() {
        return Err(p.error("program declares no qreg"));
    }
    circuit.name = tagged_name.unwrap_or_else(|| circuit.qreg.clone());
    circuit.validate()?;
    Ok(circuit)
}

/// Writes a circuit as OpenQASM 2.0 text that [`parse_qasm`] reads back to an
/// equal circuit. Angles use Rust's shortest round-trip float formatting.
pub fn serialize_qasm(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{NAME_TAG} {}", c.name);
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg {}[{}];", c.qreg, c.num_qubits);
    if c.num_clbits > 0 {
        let _ = writeln!(out, "creg {}[{}];", c.creg, c.num_clbits);
    }
    for g in &c.gates {
        if let (GateKind::Measure, Some(clbit)) = (g.kind, g.clbit) {
            let _ = writeln!(out, "measure {}[{}] -> {}[{}];", c.qreg, g.qubits[0], c.creg, clbit);
            continue;
        }
        out.push_str(g.kind.name());
        if let Some(theta) = g.kind.angle() {
            let _ = write!(out, "({theta:?})");
        }
        for (i, q) in g.qubits.iter().enumerate() {
            let _ = write!(out, "{}{}[{}]", if i == 0 { " " } else { "," }, c.qreg, q);
        }
        out.push_str(";\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_stats, ghz};
    use proptest::prelude::*;

    const GHZ_QASM: &str = r#"OPENQASM 2.0;
include "qelib1.inc";
qreg q[3];
creg c[3];
// Apply a Hadamard gate on qubit_1
h q[0];
// Entangle qubit_1 with 2, 2 with 3
cx q[0],q[1];
cx q[1],q[2];
barrier q[0],q[1],q[2];
measure q[0] -> c[0];
measure q[1] -> c[1];
measure q[2] -> c[2];
"#;

    #[test]
    fn parses_ghz() {
        let c = parse_qasm(GHZ_QASM).unwrap();
        assert_eq!(c.num_qubits, 3);
        assert_eq!(c.num_clbits, 3);
        let mut expected = ghz(3);
        expected.name = "q".into();
        assert_eq!(c, expected);
        assert_eq!(circuit_stats(&c).depth, 3);
        assert_eq!(c.depth_with_measurement(), 4);
    }

    #[test]
    fn minimal_program() {
        let c = parse_qasm("OPENQASM 2.0; qreg q[1]; creg c[1]; measure q[0]->c[0];").unwrap();
        assert_eq!(c.gates, vec![Gate::measure(0, 0)]);
    }

    #[test]
    fn unsupported_gate_is_named() {
        let err = parse_qasm("OPENQASM 2.0; qreg q[1]; u3(0,0,0) q[0];").unwrap_err();
        assert_eq!(err, QasmError::UnsupportedGate("u3".into()));
    }

    #[test]
    fn index_out_of_range() {
        let err = parse_qasm("OPENQASM 2.0; qreg q[2]; h q[2];").unwrap_err();
        assert_eq!(
            err,
            QasmError::IndexOutOfRange {
                register: "q".into(),
                index: 2,
                size: 2
            }
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_qasm("OPENQASM 2.0;\nqreg q[2];\nh q[0]\ncx q[0],q[1];").unwrap_err();
        match err {
            QasmError::Syntax { line, col, .. } => assert_eq!((line, col), (4, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_qasm("qreg q[1];"), Err(QasmError::Syntax { line: 1, col: 1, .. })));
        assert!(matches!(
            parse_qasm("OPENQASM 3.0; qreg q[1];"),
            Err(QasmError::Syntax { .. })
        ));
    }

    #[test]
    fn rejects_second_register() {
        let err = parse_qasm("OPENQASM 2.0; qreg a[1]; qreg b[1];").unwrap_err();
        assert!(matches!(err, QasmError::Syntax { .. }));
    }

    #[test]
    fn angle_expressions() {
        let c = parse_qasm("OPENQASM 2.0; qreg q[2]; rz(-pi/4) q[0]; cp(2*pi/3 + 0.5) q[0],q[1]; rx(1e-3) q[1];")
            .unwrap();
        assert_eq!(c.gates[0].kind, GateKind::Rz(-std::f64::consts::PI / 4.0));
        assert_eq!(c.gates[1].kind, GateKind::Cp(2.0 * std::f64::consts::PI / 3.0 + 0.5));
        assert_eq!(c.gates[2].kind, GateKind::Rx(1e-3));
    }

    #[test]
    fn register_broadcast() {
        let c = parse_qasm("OPENQASM 2.0; qreg q[3]; creg c[3]; h q; measure q -> c;").unwrap();
        assert_eq!(c.gates.len(), 6);
        assert_eq!(c.gates[2], Gate::new(GateKind::H, [2]));
        assert_eq!(c.gates[5], Gate::measure(2, 2));
    }

    #[test]
    fn mcx_extension() {
        let c = parse_qasm("OPENQASM 2.0; qreg q[4]; mcx q[0],q[1],q[2],q[3];").unwrap();
        assert_eq!(c.gates[0], Gate::new(GateKind::Mcx(3), [0, 1, 2, 3]));
        assert_eq!(parse_qasm(&serialize_qasm(&c)).unwrap(), c);
    }

    #[test]
    fn empty_circuit_serializes_to_header() {
        let c = Circuit::new("empty", 2, 0);
        let text = serialize_qasm(&c);
        assert_eq!(
            text,
            "// circuit: empty\nOPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\n"
        );
        assert_eq!(parse_qasm(&text).unwrap(), c);
    }

    #[test]
    fn ghz_round_trip() {
        let c = ghz(3);
        assert_eq!(parse_qasm(&serialize_qasm(&c)).unwrap(), c);
    }

    #[test]
    fn measurement_must_be_terminal() {
        let err = parse_qasm("OPENQASM 2.0; qreg q[1]; creg c[1]; measure q[0] -> c[0]; h q[0];").unwrap_err();
        assert!(matches!(err, QasmError::Invalid(CircuitError::GateAfterMeasure { .. })));
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let angle = -10.0f64..10.0;
        let kinds = prop_oneof![
            Just(GateKind::X),
            Just(GateKind::Y),
            Just(GateKind::Z),
            Just(GateKind::H),
            Just(GateKind::S),
            Just(GateKind::Sdg),
            Just(GateKind::T),
            Just(GateKind::Tdg),
            angle.clone().prop_map(GateKind::Rx),
            angle.clone().prop_map(GateKind::Ry),
            angle.clone().prop_map(GateKind::Rz),
            angle.prop_map(GateKind::Cp),
            Just(GateKind::Cx),
            Just(GateKind::Cz),
            Just(GateKind::Swap),
            Just(GateKind::Ccx),
            (1usize..4).prop_map(GateKind::Mcx),
        ];
        (kinds, Just((0..n).collect::<Vec<_>>()).prop_shuffle())
            .prop_filter("arity fits", move |(k, _)| k.arity() <= n)
            .prop_map(|(k, perm)| Gate::new(k, perm[..k.arity()].to_vec()))
    }

    proptest! {
        #[test]
        fn round_trip(gates in proptest::collection::vec(arb_gate(4), 0..20), measure in any::<bool>()) {
            let mut c = Circuit::new("rt", 4, 4);
            for g in gates {
                c.push(g).unwrap();
            }
            if measure {
                c = c.measure_all();
            }
            prop_assert_eq!(parse_qasm(&serialize_qasm(&c)).unwrap(), c);
        }
    }
}
