mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const SCHEMAS: &str = "\
File formats:
  circuit      OpenQASM 2.0 subset; first line `// circuit: <name>` names it
  noise        {\"name\", \"one_qubit_depolarizing\", \"two_qubit_depolarizing\",
                \"per_gate_overrides\": {\"cx\": 0.03, ...},
                \"readout\": {\"p1_given_0\", \"p0_given_1\"},
                \"per_qubit_readout_overrides\": {\"0\": {...}, ...}}
  gen config   {\"entries\": [{\"id\", \"format\": INTEGER|BINARY|EXPRESSION,
                \"start\", \"end\", \"percentage\", \"regex\"?}]}
  inputs       {\"circuit_id\", \"inputs\": [\"000\", ...]}
  spec         {\"circuit_id\", \"per_input\": {\"000\": {\"000\": 0.5, ...}}}
  results      [{\"input\", \"shots\", \"counts\": {\"000\": 512, ...}}]
  rows (CSV)   circuit_id,input,state,pos,odr,pof,target
  model        {\"format\": \"qnt-model/1\", \"layer_dims\", \"weights\", \"biases\",
                \"hidden_activation\", \"output_activation\", \"feature_norm\", \"provenance\"}
  filtered     [{\"input\", \"shots\", \"probabilities\", \"dropped\", \"fallback\"}]
  verdicts     [{\"input\", \"uof_fail\", \"wodf_fail\", \"p_value\", \"offending\"}]
  improvement  CSV: backend,HLin,HLif,Improved%
  detection    CSV: label,tp,fp,fn,tn,precision,recall,f1,score_percent

Every output <out> gets a <out>.manifest.json sidecar with the tool version,
command line, seed and SHA-256 digests of consumed and produced files.

Exit codes: 0 success, 2 invalid input or arguments, 3 runtime failure.
Errors are printed to stderr as one line of JSON.

Environment: QNT_THREADS caps the worker threads; results do not depend on it.";

#[derive(Parser)]
#[command(name = "qnt", version, about = "Noise-aware testing of quantum programs", after_long_help = SCHEMAS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate test inputs for a circuit from a generation config.
    GenInputs(GenInputsArgs),
    /// Compute a circuit's ideal output distribution for each input.
    Spec(SpecArgs),
    /// Execute a circuit once per input on a noisy simulator.
    Run(RunArgs),
    /// Build the baseline corpus and train a backend's baseline model.
    TrainBaseline(TrainBaselineArgs),
    /// Fine-tune a baseline model on a circuit under test.
    Tune(TuneArgs),
    /// Filter noisy results with a tuned model.
    Filter(FilterArgs),
    /// Assess results against a specification with the UOF and WODF oracles.
    Assess(AssessArgs),
    /// Noise-reduction and fault-detection reports.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Generate a suite of random circuits.
    GenCircuits(GenCircuitsArgs),
    /// Insert an input-triggered fault into a circuit.
    InjectFault(InjectFaultArgs),
    /// Train, tune, run, filter and assess one circuit end to end.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct GenInputsArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Draw a seeded random subset instead of the ascending prefix.
    #[arg(long)]
    random: bool,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Inputs file; all inputs of the circuit's width when omitted.
    #[arg(long)]
    inputs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    inputs: Option<PathBuf>,
    #[arg(long)]
    noise: PathBuf,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainBaselineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Baseline circuit; repeat for several.
    #[arg(long = "circuit", required = true)]
    circuits: Vec<PathBuf>,
    #[arg(long)]
    noise: PathBuf,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    /// Executions of every baseline input.
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the training corpus as CSV.
    #[arg(long)]
    rows: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    circuit: PathBuf,
    /// At most four passing inputs to tune on.
    #[arg(long)]
    inputs: PathBuf,
    /// Specification to train against; the circuit's own ideal output when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    noise: PathBuf,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    results: PathBuf,
    /// Drop threshold; 1/(2·shots) when omitted.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AssessArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Raw results or filtered results.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// Hellinger distances of noisy and filtered outputs to the specification.
    Improved(ImprovedArgs),
    /// Confusion counts, precision, recall and F1 of assessments with and without filtering.
    Detection(DetectionArgs),
}

#[derive(Args)]
struct ImprovedArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    noisy: PathBuf,
    #[arg(long)]
    filtered: PathBuf,
    #[arg(long)]
    backend: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectionArgs {
    /// Specification of the original program.
    #[arg(long)]
    spec: PathBuf,
    /// Program version (original or faulty); repeat once per version.
    #[arg(long = "circuit", required = true)]
    versions: Vec<PathBuf>,
    /// Verdicts on filtered output, one per --circuit.
    #[arg(long = "filtered", required = true)]
    filtered: Vec<PathBuf>,
    /// Verdicts on raw noisy output, one per --circuit.
    #[arg(long = "unfiltered", required = true)]
    unfiltered: Vec<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenCircuitsArgs {
    #[arg(long)]
    count: usize,
    #[arg(long)]
    qubits: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long)]
    min_diversity: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    BitFlip,
    PhaseFlip,
}

#[derive(Args)]
#[group(id = "mode", required = true, args = ["trigger", "count"])]
struct InjectFaultArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Explicit fault: the input that activates it.
    #[arg(long, requires = "target")]
    trigger: Option<String>,
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, value_enum, default_value = "bit-flip")]
    variant: Variant,
    /// Seeded faults: number of distinct observable bit-flip faults.
    #[arg(long, requires = "seed")]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output QASM file (explicit fault) or directory (seeded faults).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "baseline", required = true)]
    baselines: Vec<PathBuf>,
    #[arg(long)]
    cut: PathBuf,
    #[arg(long)]
    noise: PathBuf,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    #[arg(long, default_value_t = 20)]
    baseline_reps: usize,
    #[arg(long, default_value_t = 100)]
    tune_reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

/// A failed command: exit code 2 for bad input, 3 for runtime failures.
#[derive(Debug)]
pub struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

fn report(fail: &Fail) -> ExitCode {
    let line = serde_json::json!({ "error": fail.message, "exit_code": fail.code });
    eprintln!("{line}");
    ExitCode::from(fail.code)
}

fn configure_threads() -> Result<(), Fail> {
    let Ok(value) = std::env::var("QNT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Fail::usage(format!("QNT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Fail::runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            return report(&Fail::usage(message.trim_start_matches("error: ")));
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::GenInputs(a) => commands::gen_inputs(a),
        Command::Spec(a) => commands::spec(a),
        Command::Run(a) => commands::run(a),
        Command::TrainBaseline(a) => commands::train_baseline_cmd(a),
        Command::Tune(a) => commands::tune(a),
        Command::Filter(a) => commands::filter(a),
        Command::Assess(a) => commands::assess_cmd(a),
        Command::Metrics(MetricsCommand::Improved(a)) => commands::improved(a),
        Command::Metrics(MetricsCommand::Detection(a)) => commands::detection(a),
        Command::GenCircuits(a) => commands::gen_circuits(a),
        Command::InjectFault(a) => commands::inject_fault_cmd(a),
        Command::Pipeline(a) => commands::pipeline(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(fail) => report(&fail),
    }
}
