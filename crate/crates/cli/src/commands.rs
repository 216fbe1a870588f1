use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

use qnt_core::benchgen::{
    faulty_versions, gen_suite, inject_fault, BenchError, FaultEntry, FaultSpec, FaultVariant, GeneratorConfig,
    SuiteManifest,
};
use qnt_core::circuit::serialize_qasm;
use qnt_core::datagen::{
    build_program_spec, execute, generate_inputs, parse_config, write_rows_csv, ExecutionPlan, GenConfig,
    ProgramSpec, Selection,
};
use qnt_core::experiment::{
    baseline_rows, ground_truth, noise_reduction, tune_for_circuit, ExperimentError, PipelineConfig,
};
use qnt_core::filter::{default_threshold, filter_output, FilteredOutput, FilteredRecord};
use qnt_core::metrics::{write_detection_csv, write_improvement_csv, ConfusionCounts, DetectionRow, ImprovementRow};
use qnt_core::mlp::{train_baseline, MlpError, MlpModel};
use qnt_core::oracle::{assess, classify_outcome, score_percent, OracleConfig, Verdict};
use qnt_core::{BitString, Circuit, NoiseModel, OutputDistribution};

use crate::io::{InputsFile, RunRecord, Session};
use crate::{
    AssessArgs, DetectionArgs, Fail, FilterArgs, GenCircuitsArgs, GenInputsArgs, ImprovedArgs, InjectFaultArgs,
    PipelineArgs, RunArgs, SpecArgs, TrainBaselineArgs, TuneArgs, Variant,
};

fn usage(e: impl Display) -> Fail {
    Fail::usage(e.to_string())
}

fn mlp_fail(e: MlpError) -> Fail {
    match e {
        MlpError::DivergenceDetected(_) => Fail::runtime(e.to_string()),
        _ => usage(e),
    }
}

fn experiment_fail(e: ExperimentError) -> Fail {
    match e {
        ExperimentError::Mlp(e) => mlp_fail(e),
        _ => usage(e),
    }
}

fn print_summary(value: serde_json::Value) {
    println!("{value}");
}

fn read_noise(session: &mut Session, path: &Path) -> Result<NoiseModel, Fail> {
    let text = session.read(path)?;
    NoiseModel::from_json(&text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn read_config(session: &mut Session, path: &Path) -> Result<GenConfig, Fail> {
    let text = session.read(path)?;
    parse_config(&text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn read_model(session: &mut Session, path: &Path) -> Result<MlpModel, Fail> {
    let text = session.read(path)?;
    MlpModel::from_json(&text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

/// Inputs from an inputs file, or every input of the circuit's width.
fn read_inputs(session: &mut Session, path: Option<&Path>, c: &Circuit) -> Result<Vec<BitString>, Fail> {
    let Some(path) = path else {
        return Ok(BitString::all(c.input_width()).collect());
    };
    let file: InputsFile = session.read_json(path)?;
    if let Some(x) = file.inputs.iter().find(|x| x.width() != c.input_width()) {
        return Err(Fail::usage(format!(
            "input {x} has {} bits, circuit {} takes {}",
            x.width(),
            c.name,
            c.input_width()
        )));
    }
    Ok(file.inputs)
}

fn to_records(runs: &[(BitString, OutputDistribution)]) -> Vec<RunRecord> {
    runs.iter()
        .map(|(x, d)| RunRecord {
            input: *x,
            shots: d.shots,
            counts: d.counts.clone(),
        })
        .collect()
}

fn from_records(records: Vec<RunRecord>) -> Result<BTreeMap<BitString, OutputDistribution>, Fail> {
    let mut out = BTreeMap::new();
    for r in records {
        let d = OutputDistribution::from_counts(r.counts).map_err(usage)?;
        if d.shots != r.shots {
            return Err(Fail::usage(format!(
                "input {}: counts sum to {}, record says {} shots",
                r.input, d.shots, r.shots
            )));
        }
        if out.insert(r.input, d).is_some() {
            return Err(Fail::usage(format!("input {} appears twice", r.input)));
        }
    }
    Ok(out)
}

pub fn gen_inputs(a: GenInputsArgs) -> Result<(), Fail> {
    let mut s = Session::new(Some(a.seed));
    let cfg = read_config(&mut s, &a.config)?;
    let c = s.read_circuit(&a.circuit)?;
    let entry = cfg.entry(&c.name).map_err(usage)?;
    let selection = if a.random {
        Selection::Random { seed: a.seed }
    } else {
        Selection::Prefix
    };
    let inputs = generate_inputs(entry, c.input_width(), selection).map_err(usage)?;
    print_summary(serde_json::json!({ "circuit_id": c.name, "inputs": inputs.len() }));
    s.write_json(
        &a.out,
        &InputsFile {
            circuit_id: c.name,
            inputs,
        },
    )?;
    s.finish(&a.out)
}

pub fn spec(a: SpecArgs) -> Result<(), Fail> {
    let mut s = Session::new(None);
    let c = s.read_circuit(&a.circuit)?;
    let inputs = read_inputs(&mut s, a.inputs.as_deref(), &c)?;
    let spec = build_program_spec(&c, &inputs).map_err(usage)?;
    s.write_json(&a.out, &spec)?;
    s.finish(&a.out)
}

pub fn run(a: RunArgs) -> Result<(), Fail> {
    let mut s = Session::new(Some(a.seed));
    let c = s.read_circuit(&a.circuit)?;
    let inputs = read_inputs(&mut s, a.inputs.as_deref(), &c)?;
    let noise = read_noise(&mut s, &a.noise)?;
    let plan = ExecutionPlan {
        noise: &noise,
        shots: a.shots,
        reps: 1,
        seed: a.seed,
    };
    let runs = execute(&c, &inputs, &plan).map_err(usage)?;
    s.write_json(&a.out, &to_records(&runs))?;
    s.finish(&a.out)
}

pub fn train_baseline_cmd(a: TrainBaselineArgs) -> Result<(), Fail> {
    let mut s = Session::new(Some(a.seed));
    let inputs = read_config(&mut s, &a.config)?;
    let circuits = a
        .circuits
        .iter()
        .map(|p| s.read_circuit(p))
        .collect::<Result<Vec<_>, _>>()?;
    let noise = read_noise(&mut s, &a.noise)?;
    let mut cfg = PipelineConfig::new(a.seed);
    cfg.shots = a.shots;
    cfg.baseline_reps = a.reps;
    if let Some(e) = a.epochs {
        cfg.baseline.epochs = e;
    }
    let rows = baseline_rows(&circuits, &inputs, &noise, &cfg).map_err(experiment_fail)?;
    if let Some(path) = &a.rows {
        let mut csv = Vec::new();
        write_rows_csv(&rows, &mut csv).map_err(|e| Fail::runtime(e.to_string()))?;
        s.write(path, &csv)?;
    }
    let report = train_baseline(&rows, &cfg.baseline, &noise.name).map_err(mlp_fail)?;
    print_summary(serde_json::json!({
        "train_rows": report.train_rows,
        "test_rows": report.test_rows,
        "train_mae": report.train_mae,
        "test_mae": report.test_mae,
    }));
    s.write(&a.out, report.model.to_json().as_bytes())?;
    s.finish(&a.out)
}

pub fn tune(a: TuneArgs) -> Result<(), Fail> {
    let mut s = Session::new(Some(a.seed));
    let base = read_model(&mut s, &a.model)?;
    let c = s.read_circuit(&a.circuit)?;
    let inputs = read_inputs(&mut s, Some(&a.inputs), &c)?;
    let spec = match &a.spec {
        Some(p) => s.read_json::<ProgramSpec>(p)?,
        None => build_program_spec(&c, &inputs).map_err(usage)?,
    };
    if let Some(x) = inputs.iter().find(|x| spec.get(x).is_none()) {
        return Err(Fail::usage(format!("specification has no entry for input {x}")));
    }
    let noise = read_noise(&mut s, &a.noise)?;
    let mut cfg = PipelineConfig::new(a.seed);
    cfg.shots = a.shots;
    cfg.tune_reps = a.reps;
    if let Some(e) = a.epochs {
        cfg.tuning.epochs = e;
    }
    let tuned = tune_for_circuit(&base, &c, &spec, &inputs, &noise, &cfg, a.seed).map_err(experiment_fail)?;
    s.write(&a.out, tuned.to_json().as_bytes())?;
    s.finish(&a.out)
}

pub fn filter(a: FilterArgs) -> Result<(), Fail> {
    let mut s = Session::new(None);
    let model = read_model(&mut s, &a.model)?;
    let runs = from_records(s.read_json(&a.results)?)?;
    if let Some(t) = a.threshold.filter(|t| !(0.0..=1.0).contains(t)) {
        return Err(Fail::usage(format!("threshold {t} outside [0, 1]")));
    }
    let records: Vec<FilteredRecord> = runs
        .iter()
        .map(|(x, d)| FilteredRecord {
            input: *x,
            shots: d.shots,
            output: filter_output(&model, d, a.threshold.unwrap_or_else(|| default_threshold(d.shots))),
        })
        .collect();
    s.write_json(&a.out, &records)?;
    s.finish(&a.out)
}

/// Reads raw or filtered results as assessable outputs plus their shot count.
fn read_observed(s: &mut Session, path: &Path) -> Result<(BTreeMap<BitString, FilteredOutput>, u64), Fail> {
    let value: serde_json::Value = s.read_json(path)?;
    let filtered = value
        .as_array()
        .and_then(|a| a.first())
        .is_some_and(|r| r.get("probabilities").is_some());
    let (observed, shots): (BTreeMap<_, _>, Vec<u64>) = if filtered {
        let records: Vec<FilteredRecord> = serde_json::from_value(value).map_err(usage)?;
        let shots = records.iter().map(|r| r.shots).collect();
        (records.into_iter().map(|r| (r.input, r.output)).collect(), shots)
    } else {
        let runs = from_records(serde_json::from_value(value).map_err(usage)?)?;
        let shots = runs.values().map(|d| d.shots).collect();
        (runs.iter().map(|(x, d)| (*x, FilteredOutput::unfiltered(d))).collect(), shots)
    };
    match shots.split_first() {
        Some((&first, rest)) if rest.iter().all(|&n| n == first) => Ok((observed, first)),
        Some(_) => Err(Fail::usage(format!("{}: records use different shot counts", path.display()))),
        None => Err(Fail::usage(format!("{}: no results", path.display()))),
    }
}

pub fn assess_cmd(a: AssessArgs) -> Result<(), Fail> {
    let mut s = Session::new(None);
    let spec: ProgramSpec = s.read_json(&a.spec)?;
    let (observed, shots) = read_observed(&mut s, &a.results)?;
    let cfg = OracleConfig {
        alpha: a.alpha,
        ..OracleConfig::default()
    };
    let verdicts = assess(&spec, &observed, shots, &cfg).map_err(usage)?;
    let failed: Vec<BitString> = verdicts.iter().filter(|v| v.failed()).map(|v| v.input).collect();
    print_summary(serde_json::json!({ "inputs": verdicts.len(), "failed": failed }));
    s.write_json(&a.out, &verdicts)?;
    s.finish(&a.out)
}

pub fn improved(a: ImprovedArgs) -> Result<(), Fail> {
    let mut s = Session::new(None);
    let spec: ProgramSpec = s.read_json(&a.spec)?;
    let noisy = from_records(s.read_json(&a.noisy)?)?;
    let filtered: Vec<FilteredRecord> = s.read_json(&a.filtered)?;
    let mut noisy_pairs = Vec::new();
    let mut filtered_pairs = Vec::new();
    for r in &filtered {
        let ideal = spec
            .get(&r.input)
            .ok_or_else(|| Fail::usage(format!("specification has no entry for input {}", r.input)))?;
        let raw = noisy
            .get(&r.input)
            .ok_or_else(|| Fail::usage(format!("noisy results have no entry for input {}", r.input)))?;
        noisy_pairs.push((ideal.clone(), raw.probabilities()));
        filtered_pairs.push((ideal.clone(), r.output.probabilities.clone()));
    }
    let row = ImprovementRow::from_pairs(&a.backend, &noisy_pairs, &filtered_pairs).map_err(usage)?;
    print_summary(serde_json::to_value(&row).map_err(usage)?);
    let mut csv = Vec::new();
    write_improvement_csv(std::slice::from_ref(&row), &mut csv).map_err(|e| Fail::runtime(e.to_string()))?;
    s.write(&a.out, &csv)?;
    s.finish(&a.out)
}

pub fn detection(a: DetectionArgs) -> Result<(), Fail> {
    if a.filtered.len() != a.versions.len() || a.unfiltered.len() != a.versions.len() {
        return Err(Fail::usage("give one --filtered and one --unfiltered verdict file per --circuit"));
    }
    let mut s = Session::new(None);
    let spec: ProgramSpec = s.read_json(&a.spec)?;
    let inputs: Vec<BitString> = spec.per_input.keys().copied().collect();
    let oracle = OracleConfig::default();
    let mut counts = [ConfusionCounts::default(), ConfusionCounts::default()];
    let mut all: [Vec<Vec<Verdict>>; 2] = [Vec::new(), Vec::new()];
    for ((version, f), u) in a.versions.iter().zip(&a.filtered).zip(&a.unfiltered) {
        let c = s.read_circuit(version)?;
        let truth = ground_truth(&c, &spec, &inputs, a.shots, &oracle).map_err(experiment_fail)?;
        for (k, path) in [f, u].into_iter().enumerate() {
            let verdicts: Vec<Verdict> = s.read_json(path)?;
            for v in &verdicts {
                counts[k].record(classify_outcome(truth.contains(&v.input), v.failed()));
            }
            all[k].push(verdicts);
        }
    }
    let rows = [("with_filter", 0), ("without_filter", 1)]
        .into_iter()
        .map(|(label, k)| Ok(DetectionRow::new(label, counts[k], score_percent(&all[k]).map_err(usage)?)))
        .collect::<Result<Vec<_>, Fail>>()?;
    print_summary(serde_json::to_value(&rows).map_err(usage)?);
    let mut csv = Vec::new();
    write_detection_csv(&rows, &mut csv).map_err(|e| Fail::runtime(e.to_string()))?;
    s.write(&a.out, &csv)?;
    s.finish(&a.out)
}

pub fn gen_circuits(a: GenCircuitsArgs) -> Result<(), Fail> {
    let mut s = Session::new(Some(a.seed));
    let cfg = GeneratorConfig {
        depth: a.depth,
        min_diversity: a.min_diversity,
        ..GeneratorConfig::new(a.count, a.qubits, a.seed)
    };
    cfg.validate().map_err(usage)?;
    let suite = match gen_suite(&cfg) {
        Ok(suite) => suite,
        Err(BenchError::DiversityUnreachable { wanted, attempts, partial }) => {
            for c in &partial {
                s.write(&a.out_dir.join(format!("{}.qasm", c.name)), serialize_qasm(c).as_bytes())?;
            }
            s.finish(&a.out_dir)?;
            return Err(Fail::runtime(format!(
                "only {} of {wanted} circuits reached the diversity target after {attempts} attempts; partial suite written",
                partial.len()
            )));
        }
        Err(e) => return Err(usage(e)),
    };
    for c in &suite.circuits {
        s.write(&a.out_dir.join(format!("{}.qasm", c.name)), serialize_qasm(c).as_bytes())?;
    }
    let manifest = SuiteManifest::new(&cfg, &suite);
    s.write_json(&a.out_dir.join("manifest.json"), &manifest)?;
    print_summary(serde_json::json!({ "circuits": suite.circuits.len(), "mean_diversity": suite.mean_diversity() }));
    s.finish(&a.out_dir)
}

pub fn inject_fault_cmd(a: InjectFaultArgs) -> Result<(), Fail> {
    let mut s = Session::new(a.seed);
    let c = s.read_circuit(&a.circuit)?;
    if let Some(trigger) = &a.trigger {
        let spec = FaultSpec {
            trigger_input: trigger.parse().map_err(usage)?,
            target_qubit: a.target.expect("clap requires --target"),
            variant: match a.variant {
                Variant::BitFlip => FaultVariant::BitFlip,
                Variant::PhaseFlip => FaultVariant::PhaseFlip,
            },
        };
        let faulty = inject_fault(&c, &spec).map_err(usage)?;
        s.write(&a.out, serialize_qasm(&faulty).as_bytes())?;
        return s.finish(&a.out);
    }
    let n = a.count.expect("clap requires --trigger or --count");
    let seed = a.seed.expect("clap requires --seed with --count");
    let versions = faulty_versions(&c, n, seed).map_err(usage)?;
    let mut entries = Vec::new();
    for (faulty, fault) in &versions {
        let file = format!("{}.qasm", faulty.name);
        s.write(&a.out.join(&file), serialize_qasm(faulty).as_bytes())?;
        entries.push(FaultEntry {
            file,
            fault: fault.clone(),
        });
    }
    s.write_json(&a.out.join("faults.json"), &entries)?;
    s.finish(&a.out)
}

pub fn pipeline(a: PipelineArgs) -> Result<(), Fail> {
    let mut s = Session::new(Some(a.seed));
    let inputs = read_config(&mut s, &a.config)?;
    let baselines = a
        .baselines
        .iter()
        .map(|p| s.read_circuit(p))
        .collect::<Result<Vec<_>, _>>()?;
    let cut = s.read_circuit(&a.cut)?;
    let noise = read_noise(&mut s, &a.noise)?;
    let mut cfg = PipelineConfig::new(a.seed);
    cfg.shots = a.shots;
    cfg.baseline_reps = a.baseline_reps;
    cfg.tune_reps = a.tune_reps;
    let report = noise_reduction(&baselines, &inputs, &cut, &noise, &cfg).map_err(experiment_fail)?;

    let all_inputs: Vec<BitString> = BitString::all(cut.input_width()).collect();
    let spec = build_program_spec(&cut, &all_inputs).map_err(usage)?;
    let noisy: Vec<(BitString, OutputDistribution)> =
        report.run.noisy.iter().map(|(x, d)| (*x, d.clone())).collect();
    let filtered_verdicts = assess(&spec, &report.run.filtered, cfg.shots, &cfg.oracle).map_err(usage)?;
    let noisy_verdicts = assess(&spec, &report.run.unfiltered(), cfg.shots, &cfg.oracle).map_err(usage)?;

    let dir = &a.out_dir;
    s.write(&dir.join("baseline_model.json"), report.baseline.model.to_json().as_bytes())?;
    s.write(&dir.join("tuned_model.json"), report.tuned.to_json().as_bytes())?;
    s.write_json(&dir.join("spec.json"), &spec)?;
    s.write_json(&dir.join("noisy.json"), &to_records(&noisy))?;
    s.write_json(&dir.join("filtered.json"), &report.run.records())?;
    s.write_json(&dir.join("verdicts_noisy.json"), &noisy_verdicts)?;
    s.write_json(&dir.join("verdicts_filtered.json"), &filtered_verdicts)?;
    let mut csv = Vec::new();
    write_improvement_csv(std::slice::from_ref(&report.row), &mut csv).map_err(|e| Fail::runtime(e.to_string()))?;
    s.write(&dir.join("improvement.csv"), &csv)?;
    print_summary(serde_json::json!({
        "baseline_test_mae": report.baseline.test_mae,
        "improvement": report.row,
        "failed_noisy": noisy_verdicts.iter().filter(|v| v.failed()).count(),
        "failed_filtered": filtered_verdicts.iter().filter(|v| v.failed()).count(),
    }));
    s.finish(dir)
}
