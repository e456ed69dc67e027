//! Likelihood training, MAP estimation and partition-function estimation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, gamma_to_theta, theta_to_gamma};
use crate::error::{Error, Result};
use crate::model::{empirical_moments, BruteForce, Dataset, GraphicalModel};
use crate::pauli::build_hamiltonian;
use crate::rng::{derive_seed, domain};
use crate::samplers::{gibbs_sample, qcgm_sample_circuit, GibbsConfig, SamplerStatus};
use crate::simulator::{NoiseConfig, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientSource {
    /// Model moments by exhaustive enumeration.
    ExactOracle,
    /// Model moments from accepted circuit shots.
    QcgmSimulated,
    /// Model moments from a Gibbs chain with default settings.
    Gibbs,
}

impl std::str::FromStr for GradientSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-oracle" => Ok(Self::ExactOracle),
            "qcgm" | "qcgm-simulated" => Ok(Self::QcgmSimulated),
            "gibbs" => Ok(Self::Gibbs),
            other => Err(Error::InvalidConfig(format!("unknown gradient source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// Circuit trials or chain samples per gradient estimate.
    pub n_grad: usize,
    pub source: GradientSource,
    pub seed: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            iterations: 30,
            n_grad: 10_000,
            source: GradientSource::ExactOracle,
            seed: 0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| b > 0.0 && b < 1.0;
        if !(self.step_size > 0.0) || !unit(self.beta1) || !unit(self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(
                "ADAM needs step_size > 0, 0 < beta1, beta2 < 1 and epsilon > 0".into(),
            ));
        }
        if self.n_grad == 0 && self.source != GradientSource::ExactOracle {
            return Err(Error::InvalidConfig("n_grad must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    /// `μ̂ − μ̃`, gradient of the average negative log-likelihood.
    pub values: Vec<f64>,
    pub trials: usize,
    pub accepted: usize,
}

impl GradientEstimate {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.accepted as f64 / self.trials as f64
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn sample_moments(model: &GraphicalModel, samples: &[usize]) -> Vec<f64> {
    let mut mu = vec![0.0; model.dim()];
    for &x in samples {
        for j in model.active_entries(x) {
            mu[j] += 1.0;
        }
    }
    let inv = 1.0 / samples.len() as f64;
    mu.iter_mut().for_each(|m| *m *= inv);
    mu
}

/// Gradient of the average negative log-likelihood, `μ̂ − μ̃`.
pub fn gradient(
    model: &GraphicalModel,
    data: &Dataset,
    source: GradientSource,
    n_grad: usize,
    seed: u64,
) -> Result<GradientEstimate> {
    let empirical = empirical_moments(data, model)?;
    let (model_moments, trials, accepted) = match source {
        GradientSource::ExactOracle => (BruteForce::default().moments(model)?, 0, 0),
        GradientSource::QcgmSimulated => {
            let circuit = build_circuit(model)?;
            let out = qcgm_sample_circuit(
                &Simulator::default(),
                &circuit,
                n_grad,
                seed,
                &NoiseConfig::none(),
            )?;
            if out.status == SamplerStatus::NoAcceptedSamples {
                return Err(Error::NoAcceptedSamples { trials: n_grad });
            }
            (sample_moments(model, &out.samples), out.trials, out.samples.len())
        }
        GradientSource::Gibbs => {
            let out = gibbs_sample(model, n_grad, &GibbsConfig::with_seed(seed))?;
            (sample_moments(model, &out.samples), out.trials, out.samples.len())
        }
    };
    Ok(GradientEstimate {
        values: model_moments.iter().zip(&empirical).map(|(a, b)| a - b).collect(),
        trials,
        accepted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    /// Average negative log-likelihood of the training data (exact).
    pub nll: f64,
    /// Empirical success rate of the gradient's circuit run, or the exact
    /// success probability when the gradient did not sample the circuit.
    pub success_rate: f64,
    /// Exact success probability of the circuit for this `θ`.
    pub exact_success: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<TrainingRecord>,
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_nll(&self) -> Option<f64> {
        self.records.last().map(|r| r.nll)
    }

    /// CSV with columns `iteration,nll,delta,grad_norm`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "iteration,nll,delta,grad_norm")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.iteration, r.nll, r.success_rate, r.grad_norm)?;
        }
        Ok(())
    }
}

/// Exact success probability `δ* = Z(θ − max θ) / 2^n`.
pub fn exact_success(model: &GraphicalModel) -> Result<f64> {
    let normalized = model.normalize_for_circuit();
    let log_z = BruteForce::default().log_partition(&normalized)?;
    Ok((log_z - model.n() as f64 * std::f64::consts::LN_2).exp())
}

/// Maximum-likelihood training with ADAM on `θ`.
///
/// The trace has `iterations + 1` records; record `t` holds `θ_t` and the
/// gradient evaluated there. When a sampled gradient has no accepted shots
/// the previous gradient is reused.
pub fn learn_mle(
    init: &GraphicalModel,
    data: &Dataset,
    config: &AdamConfig,
) -> Result<(GraphicalModel, TrainingTrace)> {
    config.validate()?;
    let oracle = BruteForce::default();
    let mut model = init.clone();
    let d = model.dim();
    let (mut m, mut v) = (vec![0.0; d], vec![0.0; d]);
    let mut trace = TrainingTrace::default();
    let mut previous: Option<GradientEstimate> = None;

    for t in 0..=config.iterations {
        let seed = derive_seed(config.seed, domain::GRADIENT, t as u64);
        let grad = match gradient(&model, data, config.source, config.n_grad, seed) {
            Ok(g) => g,
            Err(Error::NoAcceptedSamples { trials }) => {
                let prev = previous.clone().ok_or(Error::NoAcceptedSamples { trials })?;
                log::warn!("iteration {t}: no accepted samples, reusing the previous gradient");
                GradientEstimate {
                    trials,
                    accepted: 0,
                    ..prev
                }
            }
            Err(e) => return Err(e),
        };
        let exact = exact_success(&model)?;
        trace.records.push(TrainingRecord {
            iteration: t,
            theta: model.theta().to_vec(),
            nll: oracle.nll(&model, data)?,
            success_rate: if grad.trials > 0 { grad.success_rate() } else { exact },
            exact_success: exact,
            grad_norm: grad.norm(),
        });
        if t == config.iterations {
            break;
        }

        let step = (t + 1) as i32;
        let c1 = 1.0 - config.beta1.powi(step);
        let c2 = 1.0 - config.beta2.powi(step);
        let theta: Vec<f64> = model
            .theta()
            .iter()
            .enumerate()
            .map(|(j, &th)| {
                let g = grad.values[j];
                m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
                v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
                th - config.step_size * (m[j] / c1) / ((v[j] / c2).sqrt() + config.epsilon)
            })
            .collect();
        model = model.with_theta(theta)?;
        previous = Some(grad);
    }
    Ok((model, trace))
}

/// Reference optimum of the average NLL for `data` on `init`'s structure.
///
/// Plain ADAM with exact moments, run until the gradient norm falls below
/// `tol` or `max_iter` steps pass. Returns the fitted model and its NLL.
/// When some states have zero empirical mass the optimum sits at infinity
/// and the returned NLL approaches it from above.
pub fn mle_reference(
    init: &GraphicalModel,
    data: &Dataset,
    tol: f64,
    max_iter: usize,
) -> Result<(GraphicalModel, f64)> {
    let oracle = BruteForce::default();
    let empirical = empirical_moments(data, init)?;
    let mut theta = init.theta().to_vec();
    let d = theta.len();
    let (mut m, mut v) = (vec![0.0; d], vec![0.0; d]);
    let (step, b1, b2) = (0.1, 0.9f64, 0.999f64);
    for t in 1..=max_iter {
        let model = init.with_theta(theta.clone())?;
        let g: Vec<f64> = oracle
            .moments(&model)?
            .iter()
            .zip(&empirical)
            .map(|(a, b)| a - b)
            .collect();
        if g.iter().map(|x| x * x).sum::<f64>().sqrt() < tol {
            break;
        }
        let (c1, c2) = (1.0 - b1.powi(t as i32), 1.0 - b2.powi(t as i32));
        for j in 0..d {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            theta[j] -= step * (m[j] / c1) / ((v[j] / c2).sqrt() + 1e-12);
        }
    }
    let model = init.with_theta(theta)?;
    let nll = oracle.nll(&model, data)?;
    Ok((model, nll))
}

/// Angles of the normalized model, laid out like `θ`.
pub fn gamma_parametrization(model: &GraphicalModel) -> Result<Vec<f64>> {
    model
        .normalize_for_circuit()
        .theta()
        .iter()
        .map(|&t| theta_to_gamma(t))
        .collect()
}

/// Inverse of [`gamma_parametrization`] (up to the normalization shift).
pub fn theta_from_gamma(gammas: &[f64]) -> Result<Vec<f64>> {
    gammas.iter().map(|&g| gamma_to_theta(g)).collect()
}

/// `dθ/dγ = −4·tan(2γ)` for `θ = 2 ln cos 2γ`.
pub fn dtheta_dgamma(gamma: f64) -> f64 {
    -4.0 * (2.0 * gamma).tan()
}

/// MAP state as the lowest-energy diagonal entry of the Hamiltonian.
/// Ties go to the lowest state index.
pub fn map_estimate(model: &GraphicalModel) -> Result<usize> {
    let limit = BruteForce::default().limit;
    if model.n() > limit {
        return Err(Error::OracleLimit { n: model.n(), limit });
    }
    let h = build_hamiltonian(model);
    let mut best = (0usize, f64::INFINITY);
    for j in 0..1usize << model.n() {
        let e = h.diag_entry(j)?;
        if e < best.1 {
            best = (j, e);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    /// Estimate of `Z` for the model as given (shift already undone).
    pub z_hat: f64,
    /// Half-width of the 95% binomial (Wald) interval around `z_hat`.
    pub half_width: f64,
    /// Shift the circuit applied to every parameter.
    pub shift: f64,
    pub success_rate: f64,
    pub trials: usize,
    pub accepted: usize,
}

impl PartitionEstimate {
    pub fn covers(&self, z: f64) -> bool {
        (self.z_hat - z).abs() <= self.half_width
    }
}

/// `Z(θ) = 2^n · δ* · exp(−shift · |cliques|)`, where the shift is the one
/// recorded by the compiled circuit.
fn rescale(model: &GraphicalModel, shift: f64, delta: f64) -> f64 {
    (delta.ln() + model.n() as f64 * std::f64::consts::LN_2 - shift * model.num_cliques() as f64).exp()
}

/// Estimate `Z` from the empirical success rate of `trials` circuit shots.
pub fn estimate_partition(model: &GraphicalModel, trials: usize, seed: u64) -> Result<PartitionEstimate> {
    let circuit = build_circuit(model)?;
    let out = qcgm_sample_circuit(&Simulator::default(), &circuit, trials, seed, &NoiseConfig::none())?;
    if out.status == SamplerStatus::NoAcceptedSamples {
        return Err(Error::NoAcceptedSamples { trials });
    }
    let rate = out.success_rate();
    let scale = rescale(model, circuit.shift, 1.0);
    let se = (rate * (1.0 - rate) / trials as f64).sqrt();
    Ok(PartitionEstimate {
        z_hat: rate * scale,
        half_width: 1.959_963_984_540_054 * se * scale,
        shift: circuit.shift,
        success_rate: rate,
        trials,
        accepted: out.samples.len(),
    })
}

/// `Z` from the exact success probability of the simulated circuit.
pub fn exact_partition(model: &GraphicalModel) -> Result<f64> {
    let circuit = build_circuit(model)?;
    let ex = Simulator::default().exact_conditional(&circuit)?;
    Ok(rescale(model, circuit.shift, ex.success_prob))
}
