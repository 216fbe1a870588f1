//! Configuration-driven input generation, program specifications, and
//! assembly of the feature/target training corpus from noisy executions.

pub mod regex;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstring::BitString;
use crate::circuit::{bind_input, Circuit, CircuitError};
use crate::features::{featurize_result, FeatureVector};
use crate::rng::{derive_seed, stream_rng};
use crate::simulator::{run_ideal, run_noisy, NoiseModel, OutputDistribution, ProbMap, SimError};

#[derive(Debug, Error)]
pub enum DataGenError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("config entry {entry:?}, field {field}: {message}")]
    Validation {
        entry: String,
        field: &'static str,
        message: String,
    },
    #[error("range too large: {0}")]
    RangeTooLarge(String),
    #[error("unsupported regex {0}")]
    RegexUnsupported(String),
    #[error("no config entry for circuit {0:?}")]
    MissingConfigEntry(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum InputFormat {
    Integer,
    Binary,
    Expression,
}

/// One circuit's input-generation rule.
///
/// * `INTEGER`: every integer in `[start, end]`.
/// * `BINARY`: every value whose binary representation needs between `start`
///   and `end` bits, i.e. the integers in `[2^(start-1), 2^end - 1]`.
/// * `EXPRESSION`: every string matched by `regex`, ranked lexicographically;
///   the rank is the input value. `start` must equal the number of distinct
///   characters the regex can emit and `end` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEntry {
    pub id: String,
    pub format: InputFormat,
    pub start: i64,
    pub end: i64,
    pub percentage: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regex: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub entries: Vec<ConfigEntry>,
}

impl GenConfig {
    pub fn entry(&self, id: &str) -> Result<&ConfigEntry, DataGenError> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| DataGenError::MissingConfigEntry(id.to_string()))
    }
}

fn invalid(entry: &ConfigEntry, field: &'static str, message: impl Into<String>) -> DataGenError {
    DataGenError::Validation {
        entry: entry.id.clone(),
        field,
        message: message.into(),
    }
}

impl ConfigEntry {
    pub fn validate(&self) -> Result<(), DataGenError> {
        if !(self.percentage > 0.0 && self.percentage <= 100.0) {
            return Err(invalid(self, "percentage", format!("{} is outside (0, 100]", self.percentage)));
        }
        match self.format {
            InputFormat::Integer => {
                if self.start < 0 {
                    return Err(invalid(self, "start", "must be non-negative"));
                }
                if self.start > self.end {
                    return Err(invalid(self, "end", format!("{} is below start {}", self.end, self.start)));
                }
            }
            InputFormat::Binary => {
                if self.start < 1 {
                    return Err(invalid(self, "start", "must be at least 1"));
                }
                if self.start > self.end {
                    return Err(invalid(self, "end", format!("{} is below start {}", self.end, self.start)));
                }
            }
            InputFormat::Expression => {
                let Some(re) = &self.regex else {
                    return Err(invalid(self, "regex", "required for EXPRESSION"));
                };
                let unique = regex::alphabet_size(re)
                    .map_err(|e| invalid(self, "regex", e.to_string()))?;
                if self.start != unique as i64 {
                    return Err(invalid(
                        self,
                        "start",
                        format!("{} but the regex has {unique} unique characters", self.start),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON generation config.
pub fn parse_config(text: &str) -> Result<GenConfig, DataGenError> {
    let cfg: GenConfig = serde_json::from_str(text).map_err(|e| DataGenError::Syntax(e.to_string()))?;
    let mut seen = BTreeSet::new();
    for e in &cfg.entries {
        if !seen.insert(e.id.as_str()) {
            return Err(invalid(e, "id", "duplicate id"));
        }
        e.validate()?;
    }
    Ok(cfg)
}

/// How the percentage of the candidate space is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// Ascending prefix of the candidate enumeration.
    #[default]
    Prefix,
    /// Seeded uniform subset, returned in ascending order.
    Random { seed: u64 },
}

/// `ceil(percentage% · n)`, capped at `n`. Guards against float fuzz such
/// as `0.1 · 30 = 3.0000000000000004`.
pub fn selection_size(percentage: f64, n: usize) -> usize {
    let raw = percentage / 100.0 * n as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
}

fn space_limit(num_qubits: usize) -> Result<u64, DataGenError> {
    if num_qubits >= 63 {
        return Err(DataGenError::RangeTooLarge(format!("{num_qubits}-bit input space")));
    }
    Ok(1u64 << num_qubits)
}

/// Generates the inputs for one config entry on a circuit with `num_qubits`
/// input bits. Deterministic and duplicate-free.
pub fn generate_inputs(
    entry: &ConfigEntry,
    num_qubits: usize,
    selection: Selection,
) -> Result<Vec<BitString>, DataGenError> {
    entry.validate()?;
    let limit = space_limit(num_qubits)?;
    let candidates: Vec<u64> = match entry.format {
        InputFormat::Integer => {
            let (lo, hi) = (entry.start as u64, entry.end as u64);
            if hi >= limit {
                return Err(DataGenError::RangeTooLarge(format!(
                    "entry {:?}: {hi} does not fit in {num_qubits} bits",
                    entry.id
                )));
            }
            (lo..=hi).collect()
        }
        InputFormat::Binary => {
            let (lo_bits, hi_bits) = (entry.start as usize, entry.end as usize);
            if hi_bits > num_qubits {
                return Err(DataGenError::RangeTooLarge(format!(
                    "entry {:?}: {hi_bits} bits exceed {num_qubits} qubits",
                    entry.id
                )));
            }
            (1u64 << (lo_bits - 1)..1u64 << hi_bits).collect()
        }
        InputFormat::Expression => {
            let re = entry.regex.as_deref().expect("validated");
            let language = regex::language(re)?;
            (0..(language.len() as u64).min(limit)).collect()
        }
    };
    let k = selection_size(entry.percentage, candidates.len());
    let mut chosen = match selection {
        Selection::Prefix => candidates[..k].to_vec(),
        Selection::Random { seed } => {
            let mut shuffled = candidates;
            shuffled.shuffle(&mut stream_rng(seed, 0));
            shuffled.truncate(k);
            shuffled
        }
    };
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|v| BitString::new(v, num_qubits).expect("value below 2^num_qubits"))
        .collect())
}

/// Ideal output distribution of a circuit for each of its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramSpec {
    pub circuit_id: String,
    pub per_input: BTreeMap<BitString, ProbMap>,
}

impl ProgramSpec {
    pub fn get(&self, input: &BitString) -> Option<&ProbMap> {
        self.per_input.get(input)
    }

    /// Ideal probability of `state` on `input`; 0 when the state is not in the spec.
    pub fn target(&self, input: &BitString, state: &BitString) -> f64 {
        self.per_input
            .get(input)
            .and_then(|d| d.get(state))
            .copied()
            .unwrap_or(0.0)
    }
}

pub fn build_program_spec(c: &Circuit, inputs: &[BitString]) -> Result<ProgramSpec, DataGenError> {
    let per_input = inputs
        .iter()
        .map(|x| Ok((*x, run_ideal(&bind_input(c, x)?)?)))
        .collect::<Result<_, DataGenError>>()?;
    Ok(ProgramSpec {
        circuit_id: c.name.clone(),
        per_input,
    })
}

/// One observed state of one execution: its features and its ideal probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub circuit_id: String,
    pub input: BitString,
    pub state: BitString,
    pub pos: f64,
    pub odr: f64,
    pub pof: f64,
    pub target: f64,
}

impl TrainingRow {
    pub fn features(&self) -> FeatureVector {
        FeatureVector {
            pos: self.pos,
            odr: self.odr,
            pof: self.pof,
        }
    }
}

/// Rows for every observed state of one execution.
pub fn rows_from_execution(
    spec: &ProgramSpec,
    input: &BitString,
    dist: &OutputDistribution,
) -> Vec<TrainingRow> {
    featurize_result(dist)
        .into_iter()
        .map(|(state, f)| TrainingRow {
            circuit_id: spec.circuit_id.clone(),
            input: *input,
            state,
            pos: f.pos,
            odr: f.odr,
            pof: f.pof,
            target: spec.target(input, &state),
        })
        .collect()
}

/// Noisy executions of one circuit: `reps` runs of `shots` shots per input.
#[derive(Debug, Clone)]
pub struct ExecutionPlan<'a> {
    pub noise: &'a NoiseModel,
    pub shots: u64,
    pub reps: usize,
    pub seed: u64,
}

/// Executes `c` on each input under the plan and returns every run's
/// distribution, in (input, rep) order. Run `(i, r)` uses seed
/// `derive_seed(plan.seed, [i, r])`.
pub fn execute(
    c: &Circuit,
    inputs: &[BitString],
    plan: &ExecutionPlan<'_>,
) -> Result<Vec<(BitString, OutputDistribution)>, DataGenError> {
    let mut out = Vec::with_capacity(inputs.len() * plan.reps);
    for (i, x) in inputs.iter().enumerate() {
        let bound = bind_input(c, x)?;
        for r in 0..plan.reps {
            let seed = derive_seed(plan.seed, &[i as u64, r as u64]);
            out.push((*x, run_noisy(&bound, plan.noise, plan.shots, seed)?));
        }
    }
    Ok(out)
}

/// Executes one circuit and turns the results into training rows.
pub fn collect_rows(
    c: &Circuit,
    spec: &ProgramSpec,
    inputs: &[BitString],
    plan: &ExecutionPlan<'_>,
) -> Result<Vec<TrainingRow>, DataGenError> {
    Ok(execute(c, inputs, plan)?
        .iter()
        .flat_map(|(x, d)| rows_from_execution(spec, x, d))
        .collect())
}

/// Builds the baseline training corpus: for each circuit (matched to its
/// config entry by name), generate inputs, compute the program spec, run the
/// noisy executions, and featurize every observed state. Circuit `k` uses
/// seed `derive_seed(seed, [k])` for its executions.
pub fn generate_training_rows(
    circuits: &[Circuit],
    cfg: &GenConfig,
    noise: &NoiseModel,
    shots: u64,
    reps: usize,
    seed: u64,
) -> Result<Vec<TrainingRow>, DataGenError> {
    if shots == 0 {
        return Err(SimError::ZeroShots.into());
    }
    let mut rows = Vec::new();
    for (k, c) in circuits.iter().enumerate() {
        let entry = cfg.entry(&c.name)?;
        let inputs = generate_inputs(entry, c.input_width(), Selection::Prefix)?;
        let spec = build_program_spec(c, &inputs)?;
        let plan = ExecutionPlan {
            noise,
            shots,
            reps,
            seed: derive_seed(seed, &[k as u64]),
        };
        rows.extend(collect_rows(c, &spec, &inputs, &plan)?);
    }
    Ok(rows)
}

pub fn write_rows_csv<W: Write>(rows: &[TrainingRow], w: W) -> Result<(), DataGenError> {
    let mut writer = csv::Writer::from_writer(w);
    for r in rows {
        writer.serialize(r)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(r: R) -> Result<Vec<TrainingRow>, DataGenError> {
    let mut reader = csv::Reader::from_reader(r);
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}
