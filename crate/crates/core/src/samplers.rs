//! Samplers: post-selected circuit sampling, Gibbs sampling and
//! perturb-and-MAP with sum-of-gamma noise.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Gumbel};
use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, CircuitIR};
use crate::error::{Error, Result};
use crate::model::{argmax_lowest, GraphicalModel, DEFAULT_ORACLE_LIMIT};
use crate::rng::{domain, stream};
use crate::simulator::{NoiseConfig, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qcgm,
    Gibbs,
    Pam,
    Exact,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Qcgm, Method::Gibbs, Method::Pam, Method::Exact];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Qcgm => "qcgm",
            Method::Gibbs => "gibbs",
            Method::Pam => "pam",
            Method::Exact => "exact",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qcgm" => Ok(Method::Qcgm),
            "gibbs" => Ok(Method::Gibbs),
            "pam" => Ok(Method::Pam),
            "exact" => Ok(Method::Exact),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}; expected qcgm, gibbs, pam or exact"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerStatus {
    Ok,
    /// Every circuit trial failed post-selection.
    NoAcceptedSamples,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutput {
    pub method: Method,
    /// Accepted configurations as state indices.
    pub samples: Vec<usize>,
    pub trials: usize,
    pub duration: Duration,
    pub status: SamplerStatus,
    pub notes: Vec<String>,
}

impl SamplerOutput {
    /// `δ̃* = accepted / trials`. Always 1 for the classical samplers.
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.samples.len() as f64 / self.trials as f64
        }
    }

    fn classical(method: Method, samples: Vec<usize>, started: Instant) -> Self {
        Self {
            method,
            trials: samples.len(),
            samples,
            duration: started.elapsed(),
            status: SamplerStatus::Ok,
            notes: Vec::new(),
        }
    }
}

/// Repeat-until-success sampling: `trials` shots, keep the accepted ones.
pub fn qcgm_sample(
    model: &GraphicalModel,
    trials: usize,
    seed: u64,
    noise: &NoiseConfig,
) -> Result<SamplerOutput> {
    let circuit = build_circuit(model)?;
    qcgm_sample_circuit(&Simulator::default(), &circuit, trials, seed, noise)
}

pub fn qcgm_sample_circuit(
    sim: &Simulator,
    circuit: &CircuitIR,
    trials: usize,
    seed: u64,
    noise: &NoiseConfig,
) -> Result<SamplerOutput> {
    let started = Instant::now();
    let shots = sim.sample_shots(circuit, trials, seed, noise)?;
    let samples: Vec<usize> = shots
        .iter()
        .filter(|s| s.accepted)
        .map(|s| s.target_bits)
        .collect();
    let status = if samples.is_empty() {
        log::warn!("no accepted samples in {trials} trials");
        SamplerStatus::NoAcceptedSamples
    } else {
        SamplerStatus::Ok
    };
    let mut notes = Vec::new();
    if noise.enabled {
        notes.push("toy noise model enabled; results are not a hardware prediction".into());
    }
    Ok(SamplerOutput {
        method: Method::Qcgm,
        samples,
        trials,
        duration: started.elapsed(),
        status,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    /// Sweeps discarded before the first sample, in units of `sweeps_per_sample`.
    pub burn_in: usize,
    /// Discarded samples between two emitted ones.
    pub thinning: usize,
    /// Full sweeps making up one chain step.
    pub sweeps_per_sample: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in: 100,
            thinning: 100,
            sweeps_per_sample: 1,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Precomputed clique memberships for single-site updates.
struct GibbsKernel<'a> {
    model: &'a GraphicalModel,
    /// For each vertex: (clique, bit of the vertex inside the local index).
    incident: Vec<Vec<(usize, usize)>>,
}

impl<'a> GibbsKernel<'a> {
    fn new(model: &'a GraphicalModel) -> Self {
        let mut incident = vec![Vec::new(); model.n()];
        for (c, clique) in model.cliques().iter().enumerate() {
            let k = clique.len();
            for (i, &v) in clique.iter().enumerate() {
                incident[v].push((c, k - 1 - i));
            }
        }
        Self { model, incident }
    }

    /// Log-odds of `x_v = 1` against `x_v = 0` given the other bits.
    #[inline]
    fn log_odds(&self, x: usize, v: usize) -> f64 {
        let mut delta = 0.0;
        for &(c, bit) in &self.incident[v] {
            let y0 = self.model.local_config(c, x) & !(1 << bit);
            delta += self.model.theta_at(c, y0 | (1 << bit)) - self.model.theta_at(c, y0);
        }
        delta
    }
}

/// `P(x_v = 1 | x_{-v})`.
pub fn gibbs_conditional(model: &GraphicalModel, x: usize, v: usize) -> Result<f64> {
    if v >= model.n() {
        return Err(Error::VertexOutOfRange { vertex: v, n: model.n() });
    }
    model.check_state(x)?;
    Ok(sigmoid(GibbsKernel::new(model).log_odds(x, v)))
}

/// Systematic-scan Gibbs sampling.
///
/// One sweep updates vertices `0..n` in order. The chain starts from a
/// uniformly random state, discards `burn_in` steps and then emits one state
/// every `thinning + 1` steps, where a step is `sweeps_per_sample` sweeps.
pub fn gibbs_sample(model: &GraphicalModel, count: usize, config: &GibbsConfig) -> Result<SamplerOutput> {
    if config.sweeps_per_sample == 0 {
        return Err(Error::InvalidConfig("sweeps_per_sample must be at least 1".into()));
    }
    let started = Instant::now();
    let n = model.n();
    let kernel = GibbsKernel::new(model);
    let mut rng = stream(config.seed, domain::GIBBS, 0);
    let mut x: usize = rng.random_range(0..1usize << n);

    let sweep = |x: &mut usize, rng: &mut rand_chacha::ChaCha8Rng| {
        for _ in 0..config.sweeps_per_sample {
            for v in 0..n {
                let mask = 1usize << (n - 1 - v);
                let p = sigmoid(kernel.log_odds(*x, v));
                if rng.random::<f64>() < p {
                    *x |= mask;
                } else {
                    *x &= !mask;
                }
            }
        }
    };

    for _ in 0..config.burn_in {
        sweep(&mut x, &mut rng);
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..=config.thinning {
            sweep(&mut x, &mut rng);
        }
        samples.push(x);
    }
    let mut out = SamplerOutput::classical(Method::Gibbs, samples, started);
    out.notes.push(format!(
        "burn_in={} thinning={} sweeps_per_sample={}",
        config.burn_in, config.thinning, config.sweeps_per_sample
    ));
    Ok(out)
}

/// Sum-of-gamma noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoGConfig {
    /// Number of summands that together approximate one Gumbel variable.
    pub k: usize,
    /// Truncation of the inner series.
    pub s: usize,
    pub tau: f64,
    pub seed: u64,
}

impl SoGConfig {
    /// Defaults for a model: `k = |cliques|`, `s = 10`, `tau = 1`.
    pub fn for_model(model: &GraphicalModel, seed: u64) -> Self {
        Self {
            k: model.num_cliques().max(1),
            s: 10,
            tau: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.s == 0 || !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig("SoG requires k >= 1, s >= 1 and tau > 0".into()));
        }
        Ok(())
    }
}

/// Reusable sampler for `(tau/k)·(Σ_{i=1..s} Gamma(1/k, k/i) − ln s)`.
#[derive(Debug, Clone)]
pub struct SoGSampler {
    terms: Vec<Gamma<f64>>,
    scale: f64,
    offset: f64,
}

impl SoGSampler {
    pub fn new(config: &SoGConfig) -> Result<Self> {
        config.validate()?;
        let k = config.k as f64;
        let terms = (1..=config.s)
            .map(|i| Gamma::new(1.0 / k, k / i as f64))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Self {
            terms,
            scale: config.tau / k,
            offset: (config.s as f64).ln(),
        })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let sum: f64 = self.terms.iter().map(|g| g.sample(rng)).sum();
        self.scale * (sum - self.offset)
    }
}

/// One sum-of-gamma draw. Prefer [`SoGSampler`] in loops.
pub fn sog_noise(config: &SoGConfig, rng: &mut impl Rng) -> Result<f64> {
    Ok(SoGSampler::new(config)?.sample(rng))
}

/// Noise added to every parameter before the MAP solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    SumOfGamma { k: usize, s: usize, tau: f64 },
    /// Independent `Gumbel(0, tau)` per parameter.
    Gumbel { tau: f64 },
    /// No noise: every sample is the MAP state.
    Disabled,
}

enum NoiseSource {
    Sog(SoGSampler),
    Gumbel(Gumbel<f64>),
    Disabled,
}

impl NoiseSource {
    fn new(p: &Perturbation) -> Result<Self> {
        Ok(match *p {
            Perturbation::SumOfGamma { k, s, tau } => {
                NoiseSource::Sog(SoGSampler::new(&SoGConfig { k, s, tau, seed: 0 })?)
            }
            Perturbation::Gumbel { tau } => NoiseSource::Gumbel(
                Gumbel::new(0.0, tau).map_err(|e| Error::InvalidConfig(e.to_string()))?,
            ),
            Perturbation::Disabled => NoiseSource::Disabled,
        })
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            NoiseSource::Sog(s) => s.sample(rng),
            NoiseSource::Gumbel(g) => g.sample(rng),
            NoiseSource::Disabled => 0.0,
        }
    }
}

/// Perturb-and-MAP with sum-of-gamma noise configured by `config`.
pub fn pam_sample(model: &GraphicalModel, count: usize, config: &SoGConfig) -> Result<SamplerOutput> {
    let p = Perturbation::SumOfGamma {
        k: config.k,
        s: config.s,
        tau: config.tau,
    };
    pam_sample_with(model, count, &p, config.seed)
}

/// Perturb-and-MAP: for each sample, add independent noise to every
/// parameter and return the exact MAP state of the perturbed model.
pub fn pam_sample_with(
    model: &GraphicalModel,
    count: usize,
    perturbation: &Perturbation,
    seed: u64,
) -> Result<SamplerOutput> {
    if model.n() > DEFAULT_ORACLE_LIMIT {
        return Err(Error::OracleLimit {
            n: model.n(),
            limit: DEFAULT_ORACLE_LIMIT,
        });
    }
    let started = Instant::now();
    let noise = NoiseSource::new(perturbation)?;
    let states = 1usize << model.n();
    let k = model.num_cliques();
    let active: Vec<usize> = (0..states).flat_map(|x| model.active_entries(x)).collect();

    let mut perturbed = model.theta().to_vec();
    let mut scores = vec![0.0; states];
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = stream(seed, domain::PAM, i as u64);
        for (p, &t) in perturbed.iter_mut().zip(model.theta()) {
            *p = t + noise.sample(&mut rng);
        }
        for (x, score) in scores.iter_mut().enumerate() {
            *score = active[x * k..(x + 1) * k].iter().map(|&j| perturbed[j]).sum();
        }
        samples.push(argmax_lowest(&scores));
    }
    let mut out = SamplerOutput::classical(Method::Pam, samples, started);
    if matches!(perturbation, Perturbation::SumOfGamma { .. }) && k > 1 {
        out.notes
            .push("perturb-and-MAP with per-parameter noise is biased when there is more than one clique".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{empirical_distribution, fidelity};
    use crate::model::brute_force_pmf;

    fn single() -> GraphicalModel {
        GraphicalModel::new(1, vec![vec![0]], vec![-1.0, 0.0]).unwrap()
    }

    #[test]
    fn method_parsing() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("metropolis".parse::<Method>().is_err());
    }

    #[test]
    fn qcgm_uniform_model() {
        let m = GraphicalModel::zeros(2, vec![vec![0, 1]]).unwrap();
        let out = qcgm_sample(&m, 2000, 1, &NoiseConfig::none()).unwrap();
        assert_eq!(out.success_rate(), 1.0);
        assert_eq!(out.status, SamplerStatus::Ok);
        let f = fidelity(
            &empirical_distribution(&out.samples, 2).unwrap(),
            &brute_force_pmf(&m).unwrap(),
        )
        .unwrap();
        assert!(f > 0.99);
    }

    #[test]
    fn qcgm_reports_empty_output() {
        // Every joint state hits a -60 entry in one of the two cliques, so
        // post-selection essentially never succeeds.
        let m = GraphicalModel::new(
            2,
            vec![vec![0, 1], vec![1]],
            vec![-60.0, -60.0, 0.0, -60.0, -60.0, 0.0],
        )
        .unwrap();
        let out = qcgm_sample(&m, 50, 2, &NoiseConfig::none()).unwrap();
        assert_eq!(out.status, SamplerStatus::NoAcceptedSamples);
        assert!(out.samples.is_empty());
        assert_eq!(out.success_rate(), 0.0);
        let c = build_circuit(&m).unwrap();
        assert!(matches!(
            crate::simulator::exact_conditional(&c),
            Err(Error::DegenerateSuccess(_))
        ));
    }

    #[test]
    fn gibbs_conditional_examples() {
        let z = GraphicalModel::zeros(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        for x in 0..8 {
            for v in 0..3 {
                assert_eq!(gibbs_conditional(&z, x, v).unwrap(), 0.5);
            }
        }
        let p = gibbs_conditional(&single(), 0, 0).unwrap();
        assert!((p - 1.0 / (1.0 + (-1f64).exp())).abs() < 1e-15);
        assert!((p - 0.73106).abs() < 1e-5);
        assert!(gibbs_conditional(&single(), 0, 1).is_err());
    }

    #[test]
    fn gibbs_is_deterministic() {
        let m = GraphicalModel::new(2, vec![vec![0, 1]], vec![-1.0, -2.0, 0.0, -0.5]).unwrap();
        let cfg = GibbsConfig {
            burn_in: 5,
            thinning: 2,
            sweeps_per_sample: 1,
            seed: 9,
        };
        let a = gibbs_sample(&m, 300, &cfg).unwrap();
        let b = gibbs_sample(&m, 300, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.success_rate(), 1.0);
        assert!(gibbs_sample(&m, 3, &GibbsConfig { sweeps_per_sample: 0, ..cfg }).is_err());
    }

    #[test]
    fn sog_validation() {
        let mut rng = stream(0, 0, 0);
        let bad = SoGConfig { k: 0, s: 10, tau: 1.0, seed: 0 };
        assert!(sog_noise(&bad, &mut rng).is_err());
        let bad = SoGConfig { k: 1, s: 10, tau: 0.0, seed: 0 };
        assert!(sog_noise(&bad, &mut rng).is_err());
    }

    #[test]
    fn pam_without_noise_returns_map() {
        let m = GraphicalModel::new(2, vec![vec![0, 1]], vec![-1.0, -2.0, 0.0, -0.5]).unwrap();
        let out = pam_sample_with(&m, 50, &Perturbation::Disabled, 1).unwrap();
        assert!(out.samples.iter().all(|&x| x == 2));
    }

    #[test]
    fn pam_size_gate() {
        let m = GraphicalModel::zeros(21, vec![vec![0, 1]]).unwrap();
        assert!(matches!(
            pam_sample_with(&m, 1, &Perturbation::Disabled, 0),
            Err(Error::OracleLimit { .. })
        ));
    }
}
