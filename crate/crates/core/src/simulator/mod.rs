//! Ideal statevector simulation and Monte Carlo noisy execution.
//!
//! Noisy runs sample stochastic Pauli trajectories: after every unitary gate,
//! with the gate's depolarizing probability, a uniformly random non-identity
//! Pauli word is applied on the gate's qubits. Measured bits are then flipped
//! according to the readout model. Shot `i` draws from its own stream
//! `(seed, i)`, so counts are identical for any thread count.

mod noise;
mod statevector;

pub use noise::{NoiseModel, Readout, MAX_1Q_DEPOLARIZING, MAX_2Q_DEPOLARIZING};
pub use statevector::{Pauli, StateVector};

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstring::BitString;
use crate::circuit::Circuit;
use crate::rng::stream_rng;

/// Largest circuit the simulator accepts.
pub const DEFAULT_QUBIT_CAP: usize = 16;
/// Shots per execution unless configured otherwise.
pub const DEFAULT_SHOTS: u64 = 1024;
/// Ideal outcomes below this probability are dropped from [`run_ideal`].
pub const PROBABILITY_FLOOR: f64 = 1e-12;

const SHOTS_PER_TASK: u64 = 256;

/// Exact outcome probabilities keyed by measured bit string.
pub type ProbMap = BTreeMap<BitString, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("circuit has {num_qubits} qubits, simulator cap is {cap}")]
    CapExceeded { num_qubits: usize, cap: usize },
    #[error("invalid noise model: {0}")]
    InvalidNoiseModel(String),
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("distribution must contain at least one shot")]
    EmptyDistribution,
    #[error("outcome {state} has width {got}, expected {expected}")]
    WidthMismatch {
        state: BitString,
        expected: usize,
        got: usize,
    },
}

/// Measured counts for one execution of a circuit on one input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub shots: u64,
    pub counts: BTreeMap<BitString, u64>,
}

impl OutputDistribution {
    /// Builds a distribution whose shot count is the sum of `counts`. Zero
    /// entries are dropped.
    pub fn from_counts(counts: BTreeMap<BitString, u64>) -> Result<Self, SimError> {
        let counts: BTreeMap<_, _> = counts.into_iter().filter(|&(_, n)| n > 0).collect();
        let shots = counts.values().sum();
        if shots == 0 {
            return Err(SimError::EmptyDistribution);
        }
        let width = counts.keys().next().map(BitString::width).unwrap_or(0);
        if let Some(bad) = counts.keys().find(|k| k.width() != width) {
            return Err(SimError::WidthMismatch {
                state: *bad,
                expected: width,
                got: bad.width(),
            });
        }
        Ok(Self { shots, counts })
    }

    /// Reconstructs counts as `round(p · shots)` from a probability map.
    pub fn from_probabilities(probs: &ProbMap, shots: u64) -> Result<Self, SimError> {
        let counts = probs
            .iter()
            .map(|(k, &p)| (*k, (p * shots as f64).round() as u64))
            .collect();
        Self::from_counts(counts)
    }

    pub fn count(&self, state: &BitString) -> u64 {
        self.counts.get(state).copied().unwrap_or(0)
    }

    pub fn probabilities(&self) -> ProbMap {
        let n = self.shots as f64;
        self.counts.iter().map(|(k, &c)| (*k, c as f64 / n)).collect()
    }
}

fn check_cap(c: &Circuit) -> Result<(), SimError> {
    if c.num_qubits > DEFAULT_QUBIT_CAP {
        return Err(SimError::CapExceeded {
            num_qubits: c.num_qubits,
            cap: DEFAULT_QUBIT_CAP,
        });
    }
    Ok(())
}

/// `(qubit, clbit)` pairs for every measurement, ordered by classical bit.
fn measurement_map(c: &Circuit) -> Vec<(usize, usize)> {
    let mut map: Vec<_> = c
        .gates
        .iter()
        .filter_map(|g| g.clbit.map(|cb| (g.qubits[0], cb)))
        .collect();
    map.sort_by_key(|&(_, cb)| cb);
    map
}

fn readout_value(map: &[(usize, usize)], basis_index: usize) -> u64 {
    map.iter()
        .fold(0u64, |v, &(q, cb)| v | ((((basis_index >> q) & 1) as u64) << cb))
}

/// Final statevector of the unitary part of `c`.
pub fn final_state(c: &Circuit) -> Result<StateVector, SimError> {
    check_cap(c)?;
    let mut state = StateVector::zero(c.num_qubits);
    for g in c.gates.iter().filter(|g| !g.kind.is_measure()) {
        state.apply(g);
    }
    Ok(state)
}

/// Outcome distribution (classical register value → probability) of a state.
fn outcome_probabilities(state: &StateVector, map: &[(usize, usize)]) -> BTreeMap<u64, f64> {
    let mut out = BTreeMap::new();
    for (i, p) in state.probabilities().into_iter().enumerate() {
        if p > 0.0 {
            *out.entry(readout_value(map, i)).or_insert(0.0) += p;
        }
    }
    out
}

/// Exact measurement probabilities of `c` (from |0…0⟩), restricted to the
/// classical register. Outcomes below [`PROBABILITY_FLOOR`] are omitted.
pub fn run_ideal(c: &Circuit) -> Result<ProbMap, SimError> {
    let state = final_state(c)?;
    let map = measurement_map(c);
    Ok(outcome_probabilities(&state, &map)
        .into_iter()
        .filter(|&(_, p)| p >= PROBABILITY_FLOOR)
        .map(|(v, p)| (BitString::new(v, c.num_clbits).expect("outcome fits register"), p))
        .collect())
}

/// Inverse-CDF sampler over classical outcomes.
struct OutcomeSampler {
    values: Vec<u64>,
    cumulative: Vec<f64>,
}

impl OutcomeSampler {
    fn new(probs: BTreeMap<u64, f64>) -> Self {
        let mut acc = 0.0;
        let (values, cumulative) = probs
            .into_iter()
            .map(|(v, p)| {
                acc += p;
                (v, acc)
            })
            .unzip();
        Self { values, cumulative }
    }

    fn sample(&self, u: f64) -> u64 {
        let total = *self.cumulative.last().expect("non-empty distribution");
        let target = u * total;
        let i = self.cumulative.partition_point(|&c| c <= target);
        self.values[i.min(self.values.len() - 1)]
    }
}

/// Runs `shots` shots in fixed-size tasks on the current rayon pool and
/// merges the per-task tallies. `shot` maps a shot index to a register value.
fn tally<F>(shots: u64, width: usize, shot: F) -> OutputDistribution
where
    F: Fn(u64) -> u64 + Sync,
{
    let tasks = shots.div_ceil(SHOTS_PER_TASK);
    let partial: Vec<HashMap<u64, u64>> = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut local = HashMap::new();
            let end = ((t + 1) * SHOTS_PER_TASK).min(shots);
            for i in t * SHOTS_PER_TASK..end {
                *local.entry(shot(i)).or_insert(0) += 1;
            }
            local
        })
        .collect();
    let mut counts = BTreeMap::new();
    for local in partial {
        for (v, n) in local {
            let key = BitString::new(v, width).expect("outcome fits register");
            *counts.entry(key).or_insert(0) += n;
        }
    }
    OutputDistribution { shots, counts }
}

/// Finite-shot sample from the ideal distribution of `c`.
pub fn sample_ideal(c: &Circuit, shots: u64, seed: u64) -> Result<OutputDistribution, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let state = final_state(c)?;
    let sampler = OutcomeSampler::new(outcome_probabilities(&state, &measurement_map(c)));
    Ok(tally(shots, c.num_clbits, |i| {
        let mut rng = stream_rng(seed, i);
        sampler.sample(rng.random())
    }))
}

/// Monte Carlo execution of `c` under noise model `nm`.
///
/// Per shot, error events are drawn for every unitary gate first (in gate
/// order), then one uniform selects the measurement outcome, then one uniform
/// per measured bit decides its readout flip. Shots without any gate error
/// sample the precomputed ideal outcome distribution directly.
pub fn run_noisy(c: &Circuit, nm: &NoiseModel, shots: u64, seed: u64) -> Result<OutputDistribution, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    nm.validate()?;
    let ideal = final_state(c)?;
    let map = measurement_map(c);
    let ideal_sampler = OutcomeSampler::new(outcome_probabilities(&ideal, &map));

    let unitary: Vec<_> = c.gates.iter().filter(|g| !g.kind.is_measure()).collect();
    let error_rates: Vec<f64> = unitary.iter().map(|g| nm.gate_error(g)).collect();
    let readouts: Vec<(usize, Readout)> = map.iter().map(|&(q, cb)| (cb, nm.readout_for(q))).collect();

    Ok(tally(shots, c.num_clbits, |i| {
        let mut rng = stream_rng(seed, i);
        // (gate position, Pauli word) for every error event in this trajectory.
        let mut events: Vec<(usize, u64)> = Vec::new();
        for (pos, (&p, g)) in error_rates.iter().zip(&unitary).enumerate() {
            if p > 0.0 && rng.random::<f64>() < p {
                let words = 1u64 << (2 * g.qubits.len());
                events.push((pos, rng.random_range(1..words)));
            }
        }
        let u: f64 = rng.random();
        let mut value = if events.is_empty() {
            ideal_sampler.sample(u)
        } else {
            let mut state = StateVector::zero(c.num_qubits);
            let mut next = events.iter().peekable();
            for (pos, g) in unitary.iter().enumerate() {
                state.apply(g);
                while let Some(&(_, word)) = next.next_if(|(at, _)| *at == pos) {
                    for (j, &q) in g.qubits.iter().enumerate() {
                        state.apply_pauli(q, Pauli::from_index(word >> (2 * j)));
                    }
                }
            }
            OutcomeSampler::new(outcome_probabilities(&state, &map)).sample(u)
        };
        for &(cb, r) in &readouts {
            let bit = (value >> cb) & 1;
            let flip = if bit == 0 { r.p1_given_0 } else { r.p0_given_1 };
            let draw: f64 = rng.random();
            if draw < flip {
                value ^= 1 << cb;
            }
        }
        value
    }))
}

/// Total variation distance between two probability maps over their union support.
pub fn total_variation(p: &ProbMap, q: &ProbMap) -> f64 {
    let keys: std::collections::BTreeSet<_> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::bits;
    use crate::circuit::{bind_input, ghz, Gate, GateKind};

    #[test]
    fn ghz_ideal() {
        let p = run_ideal(&ghz(3)).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[&bits("000")] - 0.5).abs() < 1e-12);
        assert!((p[&bits("111")] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trivial_measure() {
        let c = Circuit::new("m", 1, 1).measure_all();
        let p = run_ideal(&c).unwrap();
        assert_eq!(p, ProbMap::from([(bits("0"), 1.0)]));
    }

    #[test]
    fn bound_identity_circuit() {
        let c = Circuit::new("id", 2, 2).measure_all();
        let p = run_ideal(&bind_input(&c, &bits("10")).unwrap()).unwrap();
        assert_eq!(p, ProbMap::from([(bits("10"), 1.0)]));
    }

    #[test]
    fn measurement_maps_qubit_to_clbit() {
        // X on q0, measured into c1 of a 2-bit register.
        let mut c = Circuit::new("m", 2, 2).with(GateKind::X, [0]);
        c.push(Gate::measure(0, 1)).unwrap();
        let p = run_ideal(&c).unwrap();
        assert_eq!(p, ProbMap::from([(bits("10"), 1.0)]));
    }

    #[test]
    fn cap_enforced() {
        let c = Circuit::new("big", 17, 0);
        assert!(matches!(run_ideal(&c), Err(SimError::CapExceeded { num_qubits: 17, cap: 16 })));
    }

    #[test]
    fn sample_support_and_single_shot() {
        let d = sample_ideal(&ghz(3), 1024, 5).unwrap();
        assert_eq!(d.counts.values().sum::<u64>(), 1024);
        assert!(d.counts.keys().all(|k| *k == bits("000") || *k == bits("111")));
        let one = sample_ideal(&ghz(3), 1, 5).unwrap();
        assert_eq!(one.counts.len(), 1);
        assert_eq!(one.counts.values().next(), Some(&1));
        assert!(matches!(sample_ideal(&ghz(3), 0, 5), Err(SimError::ZeroShots)));
    }

    #[test]
    fn sample_concentrates() {
        let d = sample_ideal(&ghz(3), 100_000, 11).unwrap();
        let p = d.probabilities();
        assert!((p[&bits("000")] - 0.5).abs() < 0.01);
        assert!((p[&bits("111")] - 0.5).abs() < 0.01);
    }

    #[test]
    fn noiseless_matches_sampling_exactly() {
        // Same RNG layout: with no gate errors and zero readout flips, the
        // noisy path draws the outcome from the same uniform as sample_ideal.
        let nm = NoiseModel::noiseless();
        let noisy = run_noisy(&ghz(3), &nm, 2000, 3).unwrap();
        let ideal = sample_ideal(&ghz(3), 2000, 3).unwrap();
        assert_eq!(noisy, ideal);
    }

    #[test]
    fn readout_flip_rate() {
        let c = Circuit::new("ro", 1, 1).measure_all();
        let mut nm = NoiseModel::noiseless();
        nm.readout.p1_given_0 = 0.1;
        let d = run_noisy(&c, &nm, 100_000, 9).unwrap();
        let p1 = d.probabilities()[&bits("1")];
        assert!((p1 - 0.1).abs() < 0.005, "P(1) = {p1}");
    }

    #[test]
    fn per_qubit_readout_override() {
        let c = Circuit::new("ro", 2, 2).measure_all();
        let mut nm = NoiseModel::noiseless();
        nm.per_qubit_readout_overrides.insert(1, Readout { p1_given_0: 1.0, p0_given_1: 0.0 });
        let d = run_noisy(&c, &nm, 100, 1).unwrap();
        assert_eq!(d.counts, BTreeMap::from([(bits("10"), 100)]));
    }

    #[test]
    fn noise_produces_unexpected_states() {
        let nm = NoiseModel::uniform("moderate", 0.002, 0.02, 0.02);
        let d = run_noisy(&ghz(3), &nm, 1024, 42).unwrap();
        assert!(d.counts.len() > 2);
        let p = d.probabilities();
        assert!(p[&bits("000")] < 0.5 && p[&bits("000")] > 0.4);
        assert!(p[&bits("111")] < 0.5 && p[&bits("111")] > 0.4);
    }

    #[test]
    fn noisy_run_is_thread_count_independent() {
        let nm = NoiseModel::uniform("heavy", 0.05, 0.1, 0.05);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_noisy(&ghz(3), &nm, 5000, 77).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn depolarizing_reduces_pole_mass() {
        let pole_mass = |p1: f64| {
            let nm = NoiseModel::uniform("d", 0.0, p1, 0.0);
            let d = run_noisy(&ghz(3), &nm, 100_000, 123).unwrap().probabilities();
            d.get(&bits("000")).unwrap_or(&0.0) + d.get(&bits("111")).unwrap_or(&0.0)
        };
        assert_eq!(pole_mass(0.0), 1.0);
        assert!(pole_mass(0.05) < 1.0);
    }

    #[test]
    fn from_counts_validates() {
        assert!(matches!(
            OutputDistribution::from_counts(BTreeMap::new()),
            Err(SimError::EmptyDistribution)
        ));
        let mixed = BTreeMap::from([(bits("0"), 1), (bits("00"), 1)]);
        assert!(matches!(
            OutputDistribution::from_counts(mixed),
            Err(SimError::WidthMismatch { .. })
        ));
    }
}
