//! `qcgm`: command-line frontend for compiling, sampling and training
//! quantum-circuit graphical models.

mod report;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qcgm::experiment::{run_experiment, run_sampler, ExperimentConfig, SamplerSettings};
use qcgm::inference::{
    estimate_partition, exact_partition, learn_mle, map_estimate, mle_reference, AdamConfig, GradientSource,
};
use qcgm::model::{format_bits, map_state_brute, partition_brute};
use qcgm::qasm::export_qasm;
use qcgm::samplers::{gibbs_sample, GibbsConfig, Method};
use qcgm::suite::structure;
use qcgm::{build_circuit, Dataset, GraphicalModel, NoiseConfig};

use report::{ensure_dir, read_samples, write_csv, write_json, write_samples, CliError, CliResult, Envelope};

/// Learning runs count as converged when this close to the reference optimum.
const OPTIMUM_TOLERANCE: f64 = 1e-3;

#[derive(Parser)]
#[command(name = "qcgm", version, about = "Quantum-circuit sampling for discrete graphical models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a model file for a suite structure with θ ~ U[low, high).
    GenModel(GenModelArgs),
    /// Sample a model and compare against the brute-force distribution.
    Sample(SampleArgs),
    /// Train θ with ADAM on Gibbs data (or a sample file) and write the trace.
    Learn(LearnArgs),
    /// Run the structure × sampler matrix and write per-run and median tables.
    Experiment(ExperimentArgs),
    /// Emit the compiled circuit as OpenQASM 3.
    ExportQasm(ModelOut),
    /// Most probable state via the Hamiltonian diagonal.
    Map(ModelArg),
    /// Estimate the partition function from the circuit's success rate.
    Partition(PartitionArgs),
}

#[derive(Args)]
struct ModelArg {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "QCGM_OUT_DIR", default_value = "qcgm-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ModelOut {
    #[arg(long)]
    model: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenModelArgs {
    /// Suite structure name, e.g. chain-3.
    #[arg(long)]
    structure: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    theta_low: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta_high: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseArgs {
    /// Per-qubit Pauli error probability after every gate (toy model).
    #[arg(long, default_value_t = 0.0)]
    noise_depol: f64,
    /// Per-qubit readout flip probability (toy model).
    #[arg(long, default_value_t = 0.0)]
    noise_readout: f64,
}

impl NoiseArgs {
    fn config(&self) -> CliResult<NoiseConfig> {
        Ok(NoiseConfig::new(self.noise_depol, self.noise_readout)?)
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "qcgm")]
    method: Method,
    /// Circuit trials for qcgm, samples for gibbs and pam.
    #[arg(long, default_value_t = 100_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 100)]
    gibbs_burn_in: usize,
    #[arg(long, default_value_t = 100)]
    gibbs_thinning: usize,
    /// Sum-of-gamma k; defaults to the number of cliques.
    #[arg(long)]
    sog_k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    sog_s: usize,
    #[arg(long, default_value_t = 1.0)]
    sog_tau: f64,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct LearnArgs {
    /// Structure to train (and to draw Gibbs data from).
    #[arg(long, default_value = "chain-3")]
    structure: String,
    /// Training data as a CSV with an `x` bitstring column; drawn by Gibbs
    /// sampling from a random ground truth when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    data_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gradient source: exact, qcgm or gibbs.
    #[arg(long, default_value = "exact")]
    source: GradientSource,
    #[arg(long, default_value_t = 30)]
    iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    step_size: f64,
    #[arg(long, default_value_t = 10_000)]
    n_grad: usize,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load_model(path: &Path) -> CliResult<GraphicalModel> {
    GraphicalModel::load(path).map_err(|e| CliError::new(e.kind(), format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::new("io", format!("writing {}: {e}", p.display()))),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn print_json(value: &impl Serialize) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn gen_model(a: GenModelArgs) -> CliResult<()> {
    let model = structure(&a.structure)?.random_model(a.seed, a.theta_low, a.theta_high)?;
    let mut text = model.to_json();
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

#[derive(Serialize)]
struct SampleReport {
    seed: u64,
    model_hash: String,
    normalization_shift: f64,
    n: usize,
    cliques: usize,
    method: Method,
    analytic: bool,
    shots: usize,
    fidelity: f64,
    hellinger: f64,
    total_variation: f64,
    trials: usize,
    accepted: usize,
    success_rate: f64,
    effective_samples: usize,
    exact_success: f64,
    sampler: serde_json::Value,
    noise: NoiseConfig,
    notes: Vec<String>,
}

fn sample(a: SampleArgs) -> CliResult<()> {
    let started = Instant::now();
    let model = load_model(&a.model)?;
    let noise = a.noise.config()?;
    if noise.enabled && a.method != Method::Qcgm {
        log::warn!("noise flags only affect the qcgm sampler; ignored for {:?}", a.method);
    }
    let settings = SamplerSettings {
        gibbs_burn_in: a.gibbs_burn_in,
        gibbs_thinning: a.gibbs_thinning,
        sog_k: a.sog_k,
        sog_s: a.sog_s,
        sog_tau: a.sog_tau,
    };
    let hash = model.content_hash();
    let run = run_sampler(&model, &hash, a.method, a.shots, a.seed, &noise, &settings)?;
    let sampler = match a.method {
        Method::Gibbs => serde_json::to_value(settings.gibbs(a.seed))?,
        Method::Pam => serde_json::to_value(settings.sog(&model, a.seed))?,
        Method::Qcgm | Method::Exact => serde_json::json!({}),
    };
    ensure_dir(&a.out.out)?;
    if let Some(out) = &run.output {
        write_samples(&a.out.out.join("samples.csv"), &out.samples, model.n())?;
    }
    let r = run.report;
    let body = SampleReport {
        seed: a.seed,
        model_hash: hash,
        normalization_shift: model.normalization_shift(),
        n: model.n(),
        cliques: model.num_cliques(),
        method: a.method,
        analytic: run.analytic,
        shots: a.shots,
        fidelity: r.fidelity,
        hellinger: r.hellinger,
        total_variation: r.total_variation,
        trials: r.trials,
        accepted: r.accepted,
        success_rate: r.success_rate,
        effective_samples: r.effective_samples,
        exact_success: run.exact_success,
        sampler,
        noise,
        notes: run.output.map(|o| o.notes).unwrap_or_default(),
    };
    let env = Envelope::new("sample", body, started.elapsed());
    write_json(&a.out.out.join("report.json"), &env)?;
    print_json(&env)
}

#[derive(Serialize)]
struct LearnReport {
    seed: u64,
    structure: String,
    data_source: String,
    data_size: usize,
    truth_hash: Option<String>,
    model_hash: String,
    normalization_shift: f64,
    adam: AdamConfig,
    initial_nll: f64,
    final_nll: f64,
    optimum_nll: f64,
    optimum_gap: f64,
    optimum_tolerance: f64,
    within_tolerance: bool,
    final_success: f64,
}

fn learn(a: LearnArgs) -> CliResult<()> {
    let started = Instant::now();
    let st = structure(&a.structure)?;
    ensure_dir(&a.out.out)?;
    let (data, truth, source) = match &a.data {
        Some(path) => {
            let (n, samples) = read_samples(path)?;
            if n != st.n {
                return Err(CliError::new(
                    "length_mismatch",
                    format!("{} has {n}-bit rows but {} has {} vertices", path.display(), st.name, st.n),
                ));
            }
            (Dataset::new(n, samples)?, None, path.display().to_string())
        }
        None => {
            let truth = st.default_random_model(qcgm::rng::derive_seed(a.seed, qcgm::rng::domain::MODEL, 0));
            let seed = qcgm::rng::derive_seed(a.seed, qcgm::rng::domain::DATA, 0);
            let out = gibbs_sample(&truth, a.data_size, &GibbsConfig::with_seed(seed))?;
            write_samples(&a.out.out.join("data.csv"), &out.samples, st.n)?;
            truth.save(a.out.out.join("truth.json"))?;
            (Dataset::new(st.n, out.samples)?, Some(truth), "gibbs".to_string())
        }
    };
    let adam = AdamConfig {
        step_size: a.step_size,
        iterations: a.iterations,
        n_grad: a.n_grad,
        source: a.source,
        seed: a.seed,
        ..AdamConfig::default()
    };
    let (trained, trace) = learn_mle(&st.zeros(), &data, &adam)?;
    let (_, optimum) = mle_reference(&st.zeros(), &data, 1e-9, 20_000)?;

    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    fs::write(a.out.out.join("trace.csv"), csv)?;
    trained.save(a.out.out.join("trained.json"))?;

    let final_nll = trace.final_nll().unwrap_or(f64::NAN);
    let gap = final_nll - optimum;
    let body = LearnReport {
        seed: a.seed,
        structure: st.name.to_string(),
        data_source: source,
        data_size: data.len(),
        truth_hash: truth.map(|t| t.content_hash()),
        model_hash: trained.content_hash(),
        normalization_shift: trained.normalization_shift(),
        adam,
        initial_nll: trace.records.first().map_or(f64::NAN, |r| r.nll),
        final_nll,
        optimum_nll: optimum,
        optimum_gap: gap,
        optimum_tolerance: OPTIMUM_TOLERANCE,
        within_tolerance: gap <= OPTIMUM_TOLERANCE,
        final_success: trace.records.last().map_or(f64::NAN, |r| r.exact_success),
    };
    let env = Envelope::new("learn", body, started.elapsed());
    write_json(&a.out.out.join("report.json"), &env)?;
    print_json(&env)
}

#[derive(Serialize)]
struct ExperimentReport {
    config: ExperimentConfig,
    summary: Vec<qcgm::experiment::SummaryRow>,
    runs: Vec<qcgm::experiment::RunRecord>,
}

fn experiment(a: ExperimentArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut config = match &a.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| CliError::new("serde", format!("{}: {e}", path.display())))?,
        None => ExperimentConfig::default(),
    };
    if let Some(runs) = a.runs {
        config.runs = runs;
    }
    if let Some(shots) = a.shots {
        config.shots = shots;
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if a.noise.noise_depol > 0.0 || a.noise.noise_readout > 0.0 {
        config.noise = a.noise.config()?;
    }
    let result = run_experiment(&config)?;
    ensure_dir(&a.out.out)?;
    write_csv(&a.out.out.join("runs.csv"), &result.runs)?;
    write_csv(&a.out.out.join("summary.csv"), &result.summary)?;
    let failures: usize = result.summary.iter().map(|r| r.failures).sum();
    if failures > 0 {
        log::warn!("{failures} runs failed; see runs.csv");
    }
    let env = Envelope::new(
        "experiment",
        ExperimentReport {
            config,
            summary: result.summary,
            runs: result.runs,
        },
        started.elapsed(),
    );
    write_json(&a.out.out.join("report.json"), &env)?;
    print_json(&env.body.summary)
}

fn export(a: ModelOut) -> CliResult<()> {
    let model = load_model(&a.model)?;
    emit(a.out.as_deref(), &export_qasm(&build_circuit(&model)?))
}

#[derive(Serialize)]
struct MapReport {
    model_hash: String,
    normalization_shift: f64,
    state: usize,
    bits: String,
    log_potential: f64,
    agrees_with_brute_force: bool,
}

fn map(a: ModelArg) -> CliResult<()> {
    let started = Instant::now();
    let model = load_model(&a.model)?;
    let state = map_estimate(&model)?;
    let body = MapReport {
        model_hash: model.content_hash(),
        normalization_shift: model.normalization_shift(),
        state,
        bits: format_bits(state, model.n()),
        log_potential: model.log_potential(state),
        agrees_with_brute_force: map_state_brute(&model)? == state,
    };
    print_json(&Envelope::new("map", body, started.elapsed()))
}

#[derive(Serialize)]
struct PartitionReport {
    seed: u64,
    model_hash: String,
    normalization_shift: f64,
    z_hat: f64,
    half_width: f64,
    success_rate: f64,
    trials: usize,
    accepted: usize,
    z_exact_circuit: f64,
    z_brute_force: f64,
    covers_brute_force: bool,
}

fn partition(a: PartitionArgs) -> CliResult<()> {
    let started = Instant::now();
    let model = load_model(&a.model)?;
    let est = estimate_partition(&model, a.shots, a.seed)?;
    let z = partition_brute(&model)?;
    let body = PartitionReport {
        seed: a.seed,
        model_hash: model.content_hash(),
        normalization_shift: est.shift,
        z_hat: est.z_hat,
        half_width: est.half_width,
        success_rate: est.success_rate,
        trials: est.trials,
        accepted: est.accepted,
        z_exact_circuit: exact_partition(&model)?,
        z_brute_force: z,
        covers_brute_force: est.covers(z),
    };
    print_json(&Envelope::new("partition", body, started.elapsed()))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenModel(a) => gen_model(a),
        Command::Sample(a) => sample(a),
        Command::Learn(a) => learn(a),
        Command::Experiment(a) => experiment(a),
        Command::ExportQasm(a) => export(a),
        Command::Map(a) => map(a),
        Command::Partition(a) => partition(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError {
                kind: "usage".into(),
                message: e.to_string().trim().to_string(),
                exit_code: 2,
            };
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code)
        }
    }
}
