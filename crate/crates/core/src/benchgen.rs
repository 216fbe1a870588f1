//! Seeded random-circuit suites and input-triggered fault injection.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstring::BitString;
use crate::circuit::{bind_input, Circuit, CircuitError, Gate, GateKind};
use crate::metrics::{diversity_score, jsd, MetricsError, ProbeOutputs};
use crate::rng::{derive_seed, stream_rng};
use crate::simulator::{run_ideal, SimError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("only {} of {wanted} circuits reached the diversity target after {attempts} attempts", .partial.len())]
    DiversityUnreachable {
        wanted: usize,
        attempts: usize,
        partial: Vec<Circuit>,
    },
    #[error("trigger has {got} bits, circuit has {expected} input qubits")]
    TriggerLengthMismatch { expected: usize, got: usize },
    #[error("fault target qubit {0} out of range")]
    TargetOutOfRange(usize),
    #[error("asked for {wanted} faulty versions, only {available} observable faults exist")]
    NotEnoughCombinations { wanted: usize, available: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub count: usize,
    pub num_qubits: usize,
    pub depth: usize,
    pub gate_pool: Vec<GateKind>,
    pub min_diversity: Option<f64>,
    pub probe_inputs: Vec<BitString>,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(count: usize, num_qubits: usize, seed: u64) -> Self {
        Self {
            count,
            num_qubits,
            depth: 3,
            gate_pool: GateKind::unitary_kinds(),
            min_diversity: None,
            probe_inputs: vec![BitString::zeros(num_qubits)],
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        if self.count < 1 {
            return bad("count must be at least 1".into());
        }
        if self.depth < 1 {
            return bad("depth must be at least 1".into());
        }
        if self.num_qubits < 1 {
            return bad("num_qubits must be at least 1".into());
        }
        if self.gate_pool.iter().any(|g| g.is_measure() || matches!(g, GateKind::Mcx(_))) {
            return bad("gate pool may only hold fixed-arity unitary gates".into());
        }
        if !self.gate_pool.iter().any(|g| g.arity() <= self.num_qubits) {
            return bad("no gate in the pool fits the register".into());
        }
        if let Some(d) = self.min_diversity {
            if !(0.0..=1.0).contains(&d) {
                return bad(format!("min_diversity {d} outside [0, 1]"));
            }
        }
        if self.probe_inputs.is_empty() || self.probe_inputs.iter().any(|p| p.width() != self.num_qubits) {
            return bad(format!("probe inputs must be non-empty and {} bits wide", self.num_qubits));
        }
        Ok(())
    }
}

fn with_angle(kind: GateKind, theta: f64) -> GateKind {
    match kind {
        GateKind::Rx(_) => GateKind::Rx(theta),
        GateKind::Ry(_) => GateKind::Ry(theta),
        GateKind::Rz(_) => GateKind::Rz(theta),
        GateKind::Cp(_) => GateKind::Cp(theta),
        k => k,
    }
}

/// Layered random circuit: in each of `depth` layers the qubits are shuffled
/// and split into blocks, each block receiving a uniformly chosen pool gate
/// of matching arity. Every qubit is measured at the end.
pub fn random_circuit(cfg: &GeneratorConfig, index: usize) -> Circuit {
    let mut rng = stream_rng(derive_seed(cfg.seed, &[index as u64]), 0);
    let n = cfg.num_qubits;
    let mut c = Circuit::new(format!("rand{index:04}"), n, n);
    let mut qubits: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.depth {
        qubits.shuffle(&mut rng);
        let mut rest = &qubits[..];
        while !rest.is_empty() {
            let fitting: Vec<&GateKind> = cfg.gate_pool.iter().filter(|g| g.arity() <= rest.len()).collect();
            let Some(&&kind) = fitting.choose(&mut rng) else {
                break;
            };
            let kind = match kind.angle() {
                Some(_) => with_angle(kind, rng.random_range(0.0..TAU)),
                None => kind,
            };
            let (block, tail) = rest.split_at(kind.arity());
            c.push(Gate::new(kind, block.to_vec())).expect("generated gate is valid");
            rest = tail;
        }
    }
    c.measure_all()
}

fn probe_outputs(c: &Circuit, probes: &[BitString]) -> Result<ProbeOutputs, BenchError> {
    probes
        .iter()
        .map(|p| Ok((*p, run_ideal(&bind_input(c, p)?)?)))
        .collect()
}

/// Mean JSD between `candidate` and each of `others`, averaged over probes.
fn mean_distance(candidate: &ProbeOutputs, others: &[ProbeOutputs]) -> Result<f64, BenchError> {
    let mut total = 0.0;
    for o in others {
        let mut d = 0.0;
        for (x, p) in candidate {
            d += jsd(p, &o[x])?;
        }
        total += d / candidate.len() as f64;
    }
    Ok(total / others.len() as f64)
}

/// A generated suite with the diversity score of each member.
#[derive(Debug, Clone)]
pub struct Suite {
    pub circuits: Vec<Circuit>,
    /// Candidate index each circuit was generated from.
    pub indices: Vec<usize>,
    pub diversity: Vec<f64>,
}

impl Suite {
    pub fn mean_diversity(&self) -> f64 {
        self.diversity.iter().sum::<f64>() / self.diversity.len().max(1) as f64
    }
}

/// Tries at most this many candidates per requested circuit.
pub const ATTEMPTS_PER_CIRCUIT: usize = 20;

/// Generates candidates 0, 1, 2, … and keeps each one whose mean distance to
/// the circuits kept so far reaches `min_diversity` (all of them when no
/// minimum is set).
pub fn gen_suite(cfg: &GeneratorConfig) -> Result<Suite, BenchError> {
    cfg.validate()?;
    let threshold = cfg.min_diversity.unwrap_or(0.0);
    let cap = ATTEMPTS_PER_CIRCUIT * cfg.count;
    let mut circuits = Vec::new();
    let mut indices = Vec::new();
    let mut outputs: Vec<ProbeOutputs> = Vec::new();
    let mut index = 0;
    while circuits.len() < cfg.count {
        if index >= cap {
            return Err(BenchError::DiversityUnreachable {
                wanted: cfg.count,
                attempts: index,
                partial: circuits,
            });
        }
        let c = random_circuit(cfg, index);
        c.validate()?;
        let out = probe_outputs(&c, &cfg.probe_inputs)?;
        let keep = outputs.is_empty() || threshold <= 0.0 || mean_distance(&out, &outputs)? >= threshold;
        if keep {
            circuits.push(c);
            indices.push(index);
            outputs.push(out);
        }
        index += 1;
    }
    let diversity = if outputs.len() < 2 {
        vec![0.0; outputs.len()]
    } else {
        (0..outputs.len())
            .map(|i| diversity_score(i, &outputs))
            .collect::<Result<_, _>>()?
    };
    Ok(Suite {
        circuits,
        indices,
        diversity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultVariant {
    BitFlip,
    PhaseFlip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub trigger_input: BitString,
    pub target_qubit: usize,
    pub variant: FaultVariant,
}

/// Inserts a fault that fires only when the bound input equals the trigger.
///
/// An extra unmeasured ancilla qubit is appended. Ahead of the original
/// gates (so right after input preparation), the ancilla is set iff the data
/// qubits match the trigger: X on every qubit whose trigger bit is 0, a
/// multi-controlled X over all data qubits onto the ancilla, and the mirror X
/// gates. The ancilla then applies X (bit flip) or Z (phase flip) to the
/// target. Inputs keep their original width.
pub fn inject_fault(c: &Circuit, f: &FaultSpec) -> Result<Circuit, BenchError> {
    let n = c.input_width();
    if f.trigger_input.width() != n {
        return Err(BenchError::TriggerLengthMismatch {
            expected: n,
            got: f.trigger_input.width(),
        });
    }
    if f.target_qubit >= c.num_qubits {
        return Err(BenchError::TargetOutOfRange(f.target_qubit));
    }
    let ancilla = c.num_qubits;
    let mirror: Vec<Gate> = (0..n)
        .filter(|&q| !f.trigger_input.bit(q))
        .map(|q| Gate::new(GateKind::X, [q]))
        .collect();
    let mut prologue = mirror.clone();
    let controls: Vec<usize> = (0..n).collect();
    let kind = if n == 1 { GateKind::Cx } else { GateKind::Mcx(n) };
    prologue.push(Gate::new(kind, [controls, vec![ancilla]].concat()));
    prologue.extend(mirror);
    let flip = match f.variant {
        FaultVariant::BitFlip => GateKind::Cx,
        FaultVariant::PhaseFlip => GateKind::Cz,
    };
    prologue.push(Gate::new(flip, [ancilla, f.target_qubit]));
    let mut faulty = Circuit::new(format!("{}_fault", c.name), c.num_qubits + 1, c.num_clbits);
    faulty.qreg = c.qreg.clone();
    faulty.creg = c.creg.clone();
    for g in prologue.into_iter().chain(c.gates.iter().cloned()) {
        faulty.push(g)?;
    }
    Ok(faulty)
}

/// Smallest trigger-input Hellinger distance for a fault to count as observable.
pub const MIN_FAULT_EFFECT: f64 = 1e-6;

/// `n` distinct seeded bit-flip faults, each observable: the ideal output on
/// its trigger input differs from the original program's. Candidates are
/// drawn from a seeded shuffle of every (trigger, target) pair.
pub fn faulty_versions(c: &Circuit, n: usize, seed: u64) -> Result<Vec<(Circuit, FaultSpec)>, BenchError> {
    let width = c.input_width();
    let mut pairs: Vec<(u64, usize)> = (0..1u64 << width)
        .flat_map(|t| (0..width).map(move |q| (t, q)))
        .collect();
    pairs.shuffle(&mut stream_rng(derive_seed(seed, &[0xfa17]), 0));
    let mut out = Vec::with_capacity(n);
    let mut ideal_cache = BTreeMap::new();
    let mut observable = 0;
    for (t, q) in pairs {
        let spec = FaultSpec {
            trigger_input: BitString::new(t, width).expect("trigger fits"),
            target_qubit: q,
            variant: FaultVariant::BitFlip,
        };
        let faulty = inject_fault(c, &spec)?;
        let trigger = spec.trigger_input;
        let original = match ideal_cache.get(&trigger) {
            Some(d) => d,
            None => ideal_cache.entry(trigger).or_insert(run_ideal(&bind_input(c, &trigger)?)?),
        };
        let mutated = run_ideal(&bind_input(&faulty, &trigger)?)?;
        if crate::metrics::hellinger(original, &mutated)? < MIN_FAULT_EFFECT {
            continue;
        }
        observable += 1;
        if out.len() < n {
            out.push((faulty, spec));
        }
    }
    if n == 0 || out.len() < n {
        return Err(BenchError::NotEnoughCombinations {
            wanted: n,
            available: observable,
        });
    }
    for (i, (faulty, _)) in out.iter_mut().enumerate() {
        faulty.name = format!("{}_f{}", c.name, i + 1);
    }
    Ok(out)
}

/// Description of a generated suite, written next to its QASM files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub seed: u64,
    pub count: usize,
    pub num_qubits: usize,
    pub depth: usize,
    pub gate_pool: Vec<String>,
    pub min_diversity: Option<f64>,
    pub probe_inputs: Vec<BitString>,
    pub circuits: Vec<SuiteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub file: String,
    pub name: String,
    pub candidate_index: usize,
    pub diversity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<FaultEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultEntry {
    pub file: String,
    #[serde(flatten)]
    pub fault: FaultSpec,
}

impl SuiteManifest {
    pub fn new(cfg: &GeneratorConfig, suite: &Suite) -> Self {
        Self {
            seed: cfg.seed,
            count: cfg.count,
            num_qubits: cfg.num_qubits,
            depth: cfg.depth,
            gate_pool: cfg.gate_pool.iter().map(|g| g.name().to_string()).collect(),
            min_diversity: cfg.min_diversity,
            probe_inputs: cfg.probe_inputs.clone(),
            circuits: suite
                .circuits
                .iter()
                .zip(&suite.indices)
                .zip(&suite.diversity)
                .map(|((c, &i), &d)| SuiteEntry {
                    file: format!("{}.qasm", c.name),
                    name: c.name.clone(),
                    candidate_index: i,
                    diversity: d,
                    faults: Vec::new(),
                })
                .collect(),
        }
    }
}
