use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::circuit::{Gate, GateKind};

/// Largest single-qubit depolarizing rate for which sampling a uniform
/// non-identity Pauli with that probability is a valid channel.
pub const MAX_1Q_DEPOLARIZING: f64 = 0.75;
/// Same bound for two-qubit (and wider) gates.
pub const MAX_2Q_DEPOLARIZING: f64 = 0.9375;

/// Classical readout flip probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Readout {
    pub p1_given_0: f64,
    pub p0_given_1: f64,
}

/// Declarative noise model: depolarizing rates per gate arity class with
/// per-gate-name overrides, and readout flips with per-qubit overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub name: String,
    pub one_qubit_depolarizing: f64,
    pub two_qubit_depolarizing: f64,
    pub per_gate_overrides: BTreeMap<String, f64>,
    pub readout: Readout,
    pub per_qubit_readout_overrides: BTreeMap<usize, Readout>,
}

fn check_prob(what: &str, p: f64, max: f64) -> Result<(), SimError> {
    if !(0.0..=max).contains(&p) {
        return Err(SimError::InvalidNoiseModel(format!(
            "{what} = {p} outside [0, {max}]"
        )));
    }
    Ok(())
}

impl NoiseModel {
    /// A model with every error probability zero.
    pub fn noiseless() -> Self {
        Self {
            name: "noiseless".into(),
            one_qubit_depolarizing: 0.0,
            two_qubit_depolarizing: 0.0,
            per_gate_overrides: BTreeMap::new(),
            readout: Readout::default(),
            per_qubit_readout_overrides: BTreeMap::new(),
        }
    }

    /// Uniform depolarizing and symmetric readout noise.
    pub fn uniform(name: &str, one_qubit: f64, two_qubit: f64, readout: f64) -> Self {
        Self {
            name: name.into(),
            one_qubit_depolarizing: one_qubit,
            two_qubit_depolarizing: two_qubit,
            readout: Readout {
                p1_given_0: readout,
                p0_given_1: readout,
            },
            ..Self::noiseless()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let nm: NoiseModel =
            serde_json::from_str(text).map_err(|e| SimError::InvalidNoiseModel(e.to_string()))?;
        nm.validate()?;
        Ok(nm)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidNoiseModel(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_prob("one_qubit_depolarizing", self.one_qubit_depolarizing, MAX_1Q_DEPOLARIZING)?;
        check_prob("two_qubit_depolarizing", self.two_qubit_depolarizing, MAX_2Q_DEPOLARIZING)?;
        for (name, &p) in &self.per_gate_overrides {
            let kind = GateKind::from_name(name)
                .filter(|k| !k.is_measure())
                .ok_or_else(|| SimError::InvalidNoiseModel(format!("override for unknown gate {name:?}")))?;
            let max = if kind.arity() == 1 {
                MAX_1Q_DEPOLARIZING
            } else {
                MAX_2Q_DEPOLARIZING
            };
            check_prob(&format!("per_gate_overrides[{name}]"), p, max)?;
        }
        let readouts = std::iter::once((String::from("readout"), &self.readout)).chain(
            self.per_qubit_readout_overrides
                .iter()
                .map(|(q, r)| (format!("per_qubit_readout_overrides[{q}]"), r)),
        );
        for (what, r) in readouts {
            check_prob(&format!("{what}.p1_given_0"), r.p1_given_0, 1.0)?;
            check_prob(&format!("{what}.p0_given_1"), r.p0_given_1, 1.0)?;
        }
        Ok(())
    }

    /// Depolarizing probability applied after `gate`.
    pub fn gate_error(&self, gate: &Gate) -> f64 {
        if let Some(&p) = self.per_gate_overrides.get(gate.kind.name()) {
            return p;
        }
        if gate.qubits.len() == 1 {
            self.one_qubit_depolarizing
        } else {
            self.two_qubit_depolarizing
        }
    }

    pub fn readout_for(&self, qubit: usize) -> Readout {
        self.per_qubit_readout_overrides
            .get(&qubit)
            .copied()
            .unwrap_or(self.readout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODERATE: &str = r#"{
        "name": "moderate",
        "one_qubit_depolarizing": 0.002,
        "two_qubit_depolarizing": 0.02,
        "per_gate_overrides": {"ccx": 0.05},
        "readout": {"p1_given_0": 0.02, "p0_given_1": 0.03},
        "per_qubit_readout_overrides": {"2": {"p1_given_0": 0.1, "p0_given_1": 0.0}}
    }"#;

    #[test]
    fn parses_and_resolves() {
        let nm = NoiseModel::from_json(MODERATE).unwrap();
        assert_eq!(nm.gate_error(&Gate::new(GateKind::H, [0])), 0.002);
        assert_eq!(nm.gate_error(&Gate::new(GateKind::Cx, [0, 1])), 0.02);
        assert_eq!(nm.gate_error(&Gate::new(GateKind::Ccx, [0, 1, 2])), 0.05);
        assert_eq!(nm.readout_for(0).p0_given_1, 0.03);
        assert_eq!(nm.readout_for(2).p1_given_0, 0.1);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = MODERATE.replace("\"name\"", "\"t1\": 5, \"name\"");
        assert!(matches!(NoiseModel::from_json(&text), Err(SimError::InvalidNoiseModel(_))));
    }

    #[test]
    fn rejects_missing_fields() {
        let text = r#"{"name":"x","one_qubit_depolarizing":0,"two_qubit_depolarizing":0,"readout":{"p1_given_0":0,"p0_given_1":0}}"#;
        assert!(NoiseModel::from_json(text).is_err());
    }

    #[test]
    fn channel_bounds() {
        let mut nm = NoiseModel::uniform("b", 0.75, 0.9375, 1.0);
        nm.validate().unwrap();
        nm.one_qubit_depolarizing = 0.76;
        assert!(nm.validate().is_err());
        let mut nm = NoiseModel::uniform("b", 0.0, 0.95, 0.0);
        assert!(nm.validate().is_err());
        nm.two_qubit_depolarizing = 0.0;
        nm.per_gate_overrides.insert("h".into(), 0.8);
        assert!(nm.validate().is_err());
        nm.per_gate_overrides.insert("h".into(), 0.5);
        nm.per_gate_overrides.insert("u3".into(), 0.1);
        assert!(nm.validate().is_err());
        let nm = NoiseModel::uniform("b", 0.0, 0.0, -0.1);
        assert!(nm.validate().is_err());
    }
}
