//! Experiment orchestration: one sampler run against the exact distribution,
//! and the structure × sampler matrix with medians over runs.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{fidelity, hellinger_from_fidelity, median, total_variation, ComparisonReport};
use crate::model::{brute_force_pmf, GraphicalModel};
use crate::rng::{derive_seed, domain};
use crate::samplers::{
    gibbs_sample, pam_sample, qcgm_sample_circuit, GibbsConfig, Method, SamplerOutput, SoGConfig,
};
use crate::simulator::{NoiseConfig, Simulator};
use crate::suite::{structure, structures, Structure};
use crate::{build_circuit, inference};

/// Result of running one sampler once.
#[derive(Debug, Clone)]
pub struct SampleRun {
    /// `None` in analytic mode (`Method::Exact`).
    pub output: Option<SamplerOutput>,
    pub report: ComparisonReport,
    /// Exact success probability of the compiled circuit.
    pub exact_success: f64,
    pub analytic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub gibbs_burn_in: usize,
    pub gibbs_thinning: usize,
    /// `None` means `|cliques|`.
    pub sog_k: Option<usize>,
    pub sog_s: usize,
    pub sog_tau: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let g = GibbsConfig::default();
        Self {
            gibbs_burn_in: g.burn_in,
            gibbs_thinning: g.thinning,
            sog_k: None,
            sog_s: 10,
            sog_tau: 1.0,
        }
    }
}

impl SamplerSettings {
    pub fn gibbs(&self, seed: u64) -> GibbsConfig {
        GibbsConfig {
            burn_in: self.gibbs_burn_in,
            thinning: self.gibbs_thinning,
            sweeps_per_sample: 1,
            seed,
        }
    }

    pub fn sog(&self, model: &GraphicalModel, seed: u64) -> SoGConfig {
        let mut cfg = SoGConfig::for_model(model, seed);
        if let Some(k) = self.sog_k {
            cfg.k = k;
        }
        cfg.s = self.sog_s;
        cfg.tau = self.sog_tau;
        cfg
    }
}

/// Run `method` on `model` and compare with the brute-force distribution.
pub fn run_sampler(
    model: &GraphicalModel,
    model_id: &str,
    method: Method,
    shots: usize,
    seed: u64,
    noise: &NoiseConfig,
    settings: &SamplerSettings,
) -> Result<SampleRun> {
    let reference = brute_force_pmf(model)?;
    let circuit = build_circuit(model)?;
    let sim = Simulator::default();
    let exact = sim.exact_conditional(&circuit)?;
    let output = match method {
        Method::Exact => {
            let f = fidelity(&exact.distribution, &reference)?;
            let report = ComparisonReport {
                model_id: model_id.to_string(),
                method: method.to_string(),
                seed,
                fidelity: f,
                hellinger: hellinger_from_fidelity(f),
                total_variation: total_variation(&exact.distribution, &reference)?,
                trials: 0,
                accepted: 0,
                success_rate: exact.success_prob,
                effective_samples: 0,
            };
            return Ok(SampleRun {
                output: None,
                report,
                exact_success: exact.success_prob,
                analytic: true,
            });
        }
        Method::Qcgm => qcgm_sample_circuit(&sim, &circuit, shots, seed, noise)?,
        Method::Gibbs => gibbs_sample(model, shots, &settings.gibbs(seed))?,
        Method::Pam => pam_sample(model, shots, &settings.sog(model, seed))?,
    };
    let report = ComparisonReport::from_output(model_id, seed, &output, model.n(), &reference)?;
    Ok(SampleRun {
        output: Some(output),
        report,
        exact_success: exact.success_prob,
        analytic: false,
    })
}

fn default_runs() -> usize {
    10
}
fn default_shots() -> usize {
    100_000
}
fn default_low() -> f64 {
    -5.0
}
fn default_methods() -> Vec<Method> {
    vec![Method::Qcgm, Method::Gibbs, Method::Pam]
}

/// Experiment description, read from JSON by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Structure names from the suite; empty means the whole suite.
    #[serde(default)]
    pub structures: Vec<String>,
    /// Fixed model file used instead of random models, if set.
    #[serde(default)]
    pub model_file: Option<std::path::PathBuf>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_low")]
    pub theta_low: f64,
    #[serde(default)]
    pub theta_high: f64,
    #[serde(default = "default_methods")]
    pub samplers: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub settings: SamplerSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            structures: Vec::new(),
            model_file: None,
            runs: default_runs(),
            shots: default_shots(),
            theta_low: default_low(),
            theta_high: 0.0,
            samplers: default_methods(),
            seed: 0,
            noise: NoiseConfig::none(),
            settings: SamplerSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.shots == 0 {
            return Err(Error::InvalidConfig("runs and shots must be at least 1".into()));
        }
        if !(self.theta_low < self.theta_high && self.theta_high <= 0.0) {
            return Err(Error::InvalidConfig("theta range must be nonempty and within (-inf, 0]".into()));
        }
        if self.samplers.is_empty() {
            return Err(Error::InvalidConfig("no samplers selected".into()));
        }
        self.noise.validate()
    }

    fn resolve_structures(&self) -> Result<Vec<Structure>> {
        if self.structures.is_empty() {
            Ok(structures())
        } else {
            self.structures.iter().map(|s| structure(s)).collect()
        }
    }
}

/// One (structure, sampler, run) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub structure: String,
    pub method: Method,
    pub run: usize,
    pub model_seed: u64,
    pub sampler_seed: u64,
    pub model_hash: String,
    pub normalization_shift: f64,
    pub fidelity: f64,
    pub success_rate: f64,
    pub effective_samples: usize,
    pub exact_success: f64,
    /// Set when the run failed; the other numbers are then NaN or zero.
    pub error: Option<String>,
    #[serde(skip)]
    pub duration: Duration,
}

/// Medians over runs for one (structure, sampler) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub structure: String,
    pub n: usize,
    pub cliques: usize,
    pub method: Method,
    pub runs: usize,
    pub failures: usize,
    pub median_fidelity: f64,
    pub median_success_rate: f64,
    pub median_effective_samples: f64,
    pub median_exact_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Random model for `run` of a structure, seeded independently per structure.
pub fn experiment_model(config: &ExperimentConfig, st: &Structure, index: usize, run: usize) -> Result<(GraphicalModel, u64)> {
    let seed = derive_seed(derive_seed(config.seed, domain::MODEL, index as u64), domain::RUN, run as u64);
    Ok((st.random_model(seed, config.theta_low, config.theta_high)?, seed))
}

/// Run the full structure × sampler × run matrix. Individual failures are
/// recorded in the result rather than aborting the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let fixed = config
        .model_file
        .as_ref()
        .map(GraphicalModel::load)
        .transpose()?;
    let suite: Vec<(String, Option<Structure>)> = match &fixed {
        Some(_) => vec![("model-file".to_string(), None)],
        None => config
            .resolve_structures()?
            .into_iter()
            .map(|s| (s.name.to_string(), Some(s)))
            .collect(),
    };

    let mut jobs = Vec::new();
    for (index, (name, st)) in suite.iter().enumerate() {
        for run in 0..config.runs {
            for (mi, &method) in config.samplers.iter().enumerate() {
                jobs.push((index, name.clone(), st.clone(), run, mi, method));
            }
        }
    }

    let run_job = |(index, name, st, run, mi, method): &(usize, String, Option<Structure>, usize, usize, Method)| {
        let started = std::time::Instant::now();
        let sampler_seed = derive_seed(
            derive_seed(config.seed, domain::RUN, (*index * 1000 + *run) as u64),
            domain::SHOTS,
            *mi as u64,
        );
        let built = match (st, &fixed) {
            (Some(st), _) => experiment_model(config, st, *index, *run),
            (None, Some(m)) => Ok((m.clone(), 0)),
            (None, None) => unreachable!("suite entries carry a structure or a fixed model"),
        };
        let mut record = RunRecord {
            structure: name.clone(),
            method: *method,
            run: *run,
            model_seed: 0,
            sampler_seed,
            model_hash: String::new(),
            normalization_shift: f64::NAN,
            fidelity: f64::NAN,
            success_rate: f64::NAN,
            effective_samples: 0,
            exact_success: f64::NAN,
            error: None,
            duration: Duration::ZERO,
        };
        let outcome = built.and_then(|(model, model_seed)| {
            record.model_seed = model_seed;
            record.model_hash = model.content_hash();
            record.normalization_shift = model.normalization_shift();
            run_sampler(&model, &record.model_hash, *method, config.shots, sampler_seed, &config.noise, &config.settings)
        });
        match outcome {
            Ok(r) => {
                record.fidelity = r.report.fidelity;
                record.success_rate = r.report.success_rate;
                record.effective_samples = r.report.effective_samples;
                record.exact_success = r.exact_success;
                if r.report.accepted == 0 && !r.analytic {
                    record.error = Some("no accepted samples".into());
                }
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        record.duration = started.elapsed();
        record
    };

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
    let runs: Vec<RunRecord> = if workers <= 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let chunk = jobs.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|part| scope.spawn(|| part.iter().map(run_job).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("experiment worker panicked"))
                .collect()
        })
    };

    let mut summary = Vec::new();
    for (name, st) in &suite {
        let (n, cliques) = match (st, &fixed) {
            (Some(st), _) => (st.n, st.cliques.len()),
            (None, Some(m)) => (m.n(), m.num_cliques()),
            (None, None) => (0, 0),
        };
        for &method in &config.samplers {
            let cell: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| &r.structure == name && r.method == method)
                .collect();
            let ok: Vec<&&RunRecord> = cell.iter().filter(|r| r.error.is_none()).collect();
            let med = |f: fn(&RunRecord) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            summary.push(SummaryRow {
                structure: name.clone(),
                n,
                cliques,
                method,
                runs: cell.len(),
                failures: cell.len() - ok.len(),
                median_fidelity: med(|r| r.fidelity),
                median_success_rate: med(|r| r.success_rate),
                median_effective_samples: med(|r| r.effective_samples as f64),
                median_exact_success: median(&cell.iter().map(|r| r.exact_success).collect::<Vec<_>>()),
            });
        }
    }
    Ok(ExperimentResult { runs, summary })
}

/// Ground-truth model, Gibbs training data and the trained result, for the
/// learning experiment on a structure.
#[derive(Debug, Clone)]
pub struct LearningRun {
    pub truth: GraphicalModel,
    pub data: crate::model::Dataset,
    pub trained: GraphicalModel,
    pub trace: inference::TrainingTrace,
}

/// Draw `data_size` Gibbs samples from a random ground truth on `st`
/// (seeded by `seed`) and train from `θ = 0`.
pub fn run_learning(
    st: &Structure,
    data_size: usize,
    seed: u64,
    adam: &inference::AdamConfig,
) -> Result<LearningRun> {
    let truth = st.default_random_model(derive_seed(seed, domain::MODEL, 0));
    let gibbs = gibbs_sample(&truth, data_size, &GibbsConfig::with_seed(derive_seed(seed, domain::DATA, 0)))?;
    let data = crate::model::Dataset::new(truth.n(), gibbs.samples)?;
    let (trained, trace) = inference::learn_mle(&st.zeros(), &data, adam)?;
    Ok(LearningRun {
        truth,
        data,
        trained,
        trace,
    })
}
