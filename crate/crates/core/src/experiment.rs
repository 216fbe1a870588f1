//! End-to-end runs: train a backend baseline, tune it per circuit under test,
//! filter noisy outputs, and measure noise reduction or fault detection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchgen::{faulty_versions, gen_suite, BenchError, FaultSpec, GeneratorConfig};
use crate::bitstring::BitString;
use crate::circuit::{bind_input, Circuit, CircuitError};
use crate::datagen::{
    build_program_spec, collect_rows, generate_training_rows, ConfigEntry, DataGenError, ExecutionPlan, GenConfig,
    InputFormat, ProgramSpec, TrainingRow,
};
use crate::filter::{default_threshold, filter_output, FilteredOutput, FilteredRecord};
use crate::metrics::{hellinger, ConfusionCounts, DetectionRow, ImprovementRow, MetricsError};
use crate::mlp::{fine_tune, train_baseline, MlpError, MlpModel, TrainConfig, TrainReport};
use crate::oracle::{assess, classify_outcome, score_percent, OracleConfig, OracleError, Verdict};
use crate::rng::derive_seed;
use crate::simulator::{run_ideal, run_noisy, NoiseModel, OutputDistribution, SimError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    DataGen(#[from] DataGenError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("{0}")]
    Invalid(String),
}

/// Shared knobs of the noise-learning pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub shots: u64,
    /// Repetitions of every baseline input when building the training corpus.
    pub baseline_reps: usize,
    /// Distinct passing inputs the tuner may execute.
    pub tune_inputs: usize,
    pub tune_reps: usize,
    pub baseline: TrainConfig,
    pub tuning: TrainConfig,
    pub oracle: OracleConfig,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            shots: 1024,
            baseline_reps: 20,
            tune_inputs: 4,
            tune_reps: 100,
            baseline: TrainConfig::baseline(derive_seed(seed, &[1])),
            tuning: TrainConfig::tuning(derive_seed(seed, &[2])),
            oracle: OracleConfig::default(),
            seed,
        }
    }
}

/// Training corpus of the baseline circuits under `noise`.
pub fn baseline_rows(
    circuits: &[Circuit],
    inputs: &GenConfig,
    noise: &NoiseModel,
    cfg: &PipelineConfig,
) -> Result<Vec<TrainingRow>, ExperimentError> {
    Ok(generate_training_rows(
        circuits,
        inputs,
        noise,
        cfg.shots,
        cfg.baseline_reps,
        derive_seed(cfg.seed, &[3]),
    )?)
}

/// Trains the backend's baseline model on the baseline circuits.
pub fn train_backend_baseline(
    circuits: &[Circuit],
    inputs: &GenConfig,
    noise: &NoiseModel,
    cfg: &PipelineConfig,
) -> Result<TrainReport, ExperimentError> {
    let rows = baseline_rows(circuits, inputs, noise, cfg)?;
    Ok(train_baseline(&rows, &cfg.baseline, &noise.name)?)
}

/// Fine-tunes `base` on `tune_reps` executions of `cut` for each of
/// `inputs`, with targets from `spec`.
pub fn tune_for_circuit(
    base: &MlpModel,
    cut: &Circuit,
    spec: &ProgramSpec,
    inputs: &[BitString],
    noise: &NoiseModel,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<MlpModel, ExperimentError> {
    let plan = ExecutionPlan {
        noise,
        shots: cfg.shots,
        reps: cfg.tune_reps,
        seed: derive_seed(seed, &[4]),
    };
    let mut rows = collect_rows(cut, spec, inputs, &plan)?;
    for r in &mut rows {
        r.circuit_id = cut.name.clone();
    }
    let tuning = TrainConfig {
        seed: derive_seed(seed, &[5]),
        ..cfg.tuning.clone()
    };
    Ok(fine_tune(base, &rows, &tuning)?)
}

/// One noisy execution per input plus its filtered counterpart.
pub struct FilteredRun {
    pub noisy: BTreeMap<BitString, OutputDistribution>,
    pub filtered: BTreeMap<BitString, FilteredOutput>,
}

impl FilteredRun {
    pub fn records(&self) -> Vec<FilteredRecord> {
        self.filtered
            .iter()
            .map(|(x, f)| FilteredRecord {
                input: *x,
                shots: self.noisy[x].shots,
                output: f.clone(),
            })
            .collect()
    }

    pub fn unfiltered(&self) -> BTreeMap<BitString, FilteredOutput> {
        self.noisy
            .iter()
            .map(|(x, d)| (*x, FilteredOutput::unfiltered(d)))
            .collect()
    }
}

pub fn execute_and_filter(
    model: &MlpModel,
    cut: &Circuit,
    inputs: &[BitString],
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<FilteredRun, ExperimentError> {
    let mut noisy = BTreeMap::new();
    let mut filtered = BTreeMap::new();
    let tau = default_threshold(shots);
    for (i, x) in inputs.iter().enumerate() {
        let d = run_noisy(&bind_input(cut, x)?, noise, shots, derive_seed(seed, &[i as u64]))?;
        filtered.insert(*x, filter_output(model, &d, tau));
        noisy.insert(*x, d);
    }
    Ok(FilteredRun { noisy, filtered })
}

/// First `n` inputs in ascending order, skipping `exclude`.
pub fn tuning_inputs(all: &[BitString], n: usize, exclude: Option<&BitString>) -> Vec<BitString> {
    all.iter().filter(|x| Some(*x) != exclude).take(n).copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDistance {
    pub input: BitString,
    pub hl_noisy: f64,
    pub hl_filtered: f64,
    pub fallback: bool,
}

pub struct NoiseReductionReport {
    pub baseline: TrainReport,
    pub tuned: MlpModel,
    pub run: FilteredRun,
    pub per_input: Vec<InputDistance>,
    pub row: ImprovementRow,
}

/// Trains a baseline, tunes it on the circuit under test using its first
/// `tune_inputs` inputs, then filters one noisy execution of every input and
/// compares noisy and filtered outputs to the ideal ones.
pub fn noise_reduction(
    baseline_circuits: &[Circuit],
    baseline_inputs: &GenConfig,
    cut: &Circuit,
    noise: &NoiseModel,
    cfg: &PipelineConfig,
) -> Result<NoiseReductionReport, ExperimentError> {
    let baseline = train_backend_baseline(baseline_circuits, baseline_inputs, noise, cfg)?;
    let inputs: Vec<BitString> = BitString::all(cut.input_width()).collect();
    let spec = build_program_spec(cut, &inputs)?;
    let tune_on = tuning_inputs(&inputs, cfg.tune_inputs, None);
    let tuned = tune_for_circuit(&baseline.model, cut, &spec, &tune_on, noise, cfg, derive_seed(cfg.seed, &[6]))?;
    let run = execute_and_filter(&tuned, cut, &inputs, noise, cfg.shots, derive_seed(cfg.seed, &[7]))?;
    let mut per_input = Vec::new();
    let mut noisy_pairs = Vec::new();
    let mut filtered_pairs = Vec::new();
    for x in &inputs {
        let ideal = spec.get(x).expect("spec covers every input").clone();
        let noisy = run.noisy[x].probabilities();
        let filtered = run.filtered[x].probabilities.clone();
        per_input.push(InputDistance {
            input: *x,
            hl_noisy: hellinger(&ideal, &noisy)?,
            hl_filtered: hellinger(&ideal, &filtered)?,
            fallback: run.filtered[x].fallback_used,
        });
        noisy_pairs.push((ideal.clone(), noisy));
        filtered_pairs.push((ideal, filtered));
    }
    let row = ImprovementRow::from_pairs(&noise.name, &noisy_pairs, &filtered_pairs)?;
    Ok(NoiseReductionReport {
        baseline,
        tuned,
        run,
        per_input,
        row,
    })
}

/// A program version under test: the original (no fault) or a faulty copy.
#[derive(Debug, Clone)]
pub struct Version {
    pub circuit: Circuit,
    pub fault: Option<FaultSpec>,
}

/// Verdicts for one version, with and without filtering, plus ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionVerdicts {
    pub program: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultSpec>,
    /// Inputs on which the ideal version output fails the oracles.
    pub faulty_inputs: Vec<BitString>,
    pub filtered: Vec<Verdict>,
    pub unfiltered: Vec<Verdict>,
}

pub struct DetectionReport {
    pub versions: Vec<VersionVerdicts>,
    pub tuned_models: Vec<MlpModel>,
    pub filtered: DetectionRow,
    pub unfiltered: DetectionRow,
}

/// Inputs on which the version's ideal output fails assessment against the
/// original specification.
pub fn ground_truth(
    version: &Circuit,
    spec: &ProgramSpec,
    inputs: &[BitString],
    shots: u64,
    oracle: &OracleConfig,
) -> Result<Vec<BitString>, ExperimentError> {
    let ideal = inputs
        .iter()
        .map(|x| {
            let p = run_ideal(&bind_input(version, x)?)?;
            Ok((
                *x,
                FilteredOutput {
                    probabilities: p,
                    dropped_states: Vec::new(),
                    fallback_used: false,
                    baseline_model: false,
                },
            ))
        })
        .collect::<Result<BTreeMap<_, _>, ExperimentError>>()?;
    Ok(assess(spec, &ideal, shots, oracle)?
        .into_iter()
        .filter(Verdict::failed)
        .map(|v| v.input)
        .collect())
}

/// Assesses every version of every program on all inputs, once on raw noisy
/// output and once on output filtered by a model tuned for that version.
/// Each version is tuned on its first passing inputs (the trigger input of a
/// faulty version is never used for tuning).
pub fn fault_detection(
    base: &MlpModel,
    programs: &[(Circuit, Vec<Version>)],
    noise: &NoiseModel,
    cfg: &PipelineConfig,
) -> Result<DetectionReport, ExperimentError> {
    let mut versions_out = Vec::new();
    let mut models = Vec::new();
    let mut filtered_counts = ConfusionCounts::default();
    let mut unfiltered_counts = ConfusionCounts::default();
    let mut filtered_verdicts = Vec::new();
    let mut unfiltered_verdicts = Vec::new();
    for (p, (original, versions)) in programs.iter().enumerate() {
        let inputs: Vec<BitString> = BitString::all(original.input_width()).collect();
        let spec = build_program_spec(original, &inputs)?;
        for (v, version) in versions.iter().enumerate() {
            let seed = derive_seed(cfg.seed, &[8, p as u64, v as u64]);
            let faulty = ground_truth(&version.circuit, &spec, &inputs, cfg.shots, &cfg.oracle)?;
            let passing: Vec<BitString> = inputs.iter().filter(|x| !faulty.contains(x)).copied().collect();
            let tune_on = tuning_inputs(&passing, cfg.tune_inputs, None);
            if tune_on.is_empty() {
                return Err(ExperimentError::Invalid(format!(
                    "{} has no passing input to tune on",
                    version.circuit.name
                )));
            }
            let tuned = tune_for_circuit(base, &version.circuit, &spec, &tune_on, noise, cfg, seed)?;
            let run = execute_and_filter(&tuned, &version.circuit, &inputs, noise, cfg.shots, derive_seed(seed, &[9]))?;
            let filtered = assess(&spec, &run.filtered, cfg.shots, &cfg.oracle)?;
            let unfiltered = assess(&spec, &run.unfiltered(), cfg.shots, &cfg.oracle)?;
            for (f, u) in filtered.iter().zip(&unfiltered) {
                let truth = faulty.contains(&f.input);
                filtered_counts.record(classify_outcome(truth, f.failed()));
                unfiltered_counts.record(classify_outcome(truth, u.failed()));
            }
            filtered_verdicts.push(filtered.clone());
            unfiltered_verdicts.push(unfiltered.clone());
            versions_out.push(VersionVerdicts {
                program: original.name.clone(),
                version: version.circuit.name.clone(),
                fault: version.fault.clone(),
                faulty_inputs: faulty,
                filtered,
                unfiltered,
            });
            models.push(tuned);
        }
    }
    if versions_out.is_empty() {
        return Err(ExperimentError::Invalid("no program versions to assess".into()));
    }
    Ok(DetectionReport {
        versions: versions_out,
        tuned_models: models,
        filtered: DetectionRow::new("with_filter", filtered_counts, score_percent(&filtered_verdicts)?),
        unfiltered: DetectionRow::new("without_filter", unfiltered_counts, score_percent(&unfiltered_verdicts)?),
    })
}

/// Generated circuits under test, `per_width` for each qubit count in
/// `widths`, each paired with its original and `faults` faulty versions.
/// Names are prefixed with the width (`q3_rand0000`).
pub fn detection_programs(
    widths: &[usize],
    per_width: usize,
    faults: usize,
    seed: u64,
) -> Result<Vec<(Circuit, Vec<Version>)>, ExperimentError> {
    let mut programs = Vec::new();
    for &nq in widths {
        let suite = gen_suite(&GeneratorConfig::new(per_width, nq, derive_seed(seed, &[10, nq as u64])))?;
        for mut c in suite.circuits {
            c.name = format!("q{nq}_{}", c.name);
            let mut versions = vec![Version {
                circuit: c.clone(),
                fault: None,
            }];
            let fault_seed = derive_seed(seed, &[11, programs.len() as u64]);
            for (circuit, f) in faulty_versions(&c, faults, fault_seed)? {
                versions.push(Version {
                    circuit,
                    fault: Some(f),
                });
            }
            programs.push((c, versions));
        }
    }
    Ok(programs)
}

/// Extra generated baseline circuits (`base_rand0000`, ...) and their
/// exhaustive INTEGER input entries, for mixing into a baseline corpus.
pub fn generated_baselines(
    count: usize,
    num_qubits: usize,
    seed: u64,
) -> Result<(Vec<Circuit>, Vec<ConfigEntry>), ExperimentError> {
    let suite = gen_suite(&GeneratorConfig::new(count, num_qubits, derive_seed(seed, &[12])))?;
    let mut circuits = Vec::new();
    let mut entries = Vec::new();
    for mut c in suite.circuits {
        c.name = format!("base_{}", c.name);
        entries.push(ConfigEntry {
            id: c.name.clone(),
            format: InputFormat::Integer,
            start: 0,
            end: (1i64 << num_qubits) - 1,
            percentage: 100.0,
            regex: None,
        });
        circuits.push(c);
    }
    Ok((circuits, entries))
}
