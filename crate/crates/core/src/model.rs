//! Overcomplete binary graphical models and the exhaustive inference oracle.
//!
//! A model over `n` binary vertices is a list of cliques together with one
//! real parameter per (clique, local configuration) pair. The sufficient
//! statistics are indicator functions, so for any joint configuration exactly
//! one parameter per clique is active.
//!
//! # Bit convention
//!
//! Joint configurations are stored as state indices in `0..2^n`. Vertex 0 is
//! the most significant bit. The same rule applies to local configurations of
//! a clique: the lowest vertex of the clique is the most significant bit of
//! the local index `y`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default vertex count beyond which brute-force enumeration is refused.
pub const DEFAULT_ORACLE_LIMIT: usize = 20;

/// Bit `v` of state index `x` over `n` vertices (vertex 0 is the MSB).
#[inline]
pub fn vertex_bit(x: usize, v: usize, n: usize) -> usize {
    (x >> (n - 1 - v)) & 1
}

/// Unpack a state index into one bit per vertex.
pub fn index_to_bits(x: usize, n: usize) -> Vec<u8> {
    (0..n).map(|v| vertex_bit(x, v, n) as u8).collect()
}

/// Pack bits (vertex 0 first) into a state index.
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

/// Render a configuration as a bitstring, vertex 0 first.
pub fn format_bits(x: usize, n: usize) -> String {
    (0..n)
        .map(|v| if vertex_bit(x, v, n) == 1 { '1' } else { '0' })
        .collect()
}

/// Parse a bitstring written vertex 0 first.
pub fn parse_bits(s: &str) -> Result<usize> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Empty("bitstring"));
    }
    s.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(Error::InvalidConfig(format!("bad bit character {other:?}"))),
    })
}

/// Binary pairwise-or-higher-order model in overcomplete parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalModel {
    n: usize,
    cliques: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    theta: Vec<f64>,
}

impl GraphicalModel {
    /// Build a model from cliques and a flat parameter vector.
    ///
    /// `theta` is laid out clique by clique; within clique `c` the entry for
    /// local configuration `y` sits at `offset(c) + y`.
    pub fn new(n: usize, cliques: Vec<Vec<usize>>, theta: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("model needs at least one vertex".into()));
        }
        if n >= usize::BITS as usize {
            return Err(Error::InvalidModel(format!("{n} vertices cannot be indexed")));
        }
        let mut offsets = Vec::with_capacity(cliques.len());
        let mut d = 0usize;
        for (c, clique) in cliques.iter().enumerate() {
            if clique.is_empty() {
                return Err(Error::InvalidModel(format!("clique {c} is empty")));
            }
            if let Some(&v) = clique.iter().find(|&&v| v >= n) {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if clique.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidModel(format!(
                    "clique {c} is not strictly ascending: {clique:?}"
                )));
            }
            if cliques[..c].contains(clique) {
                return Err(Error::InvalidModel(format!("duplicate clique {clique:?}")));
            }
            if clique.len() >= usize::BITS as usize {
                return Err(Error::InvalidModel(format!("clique {c} is too large")));
            }
            offsets.push(d);
            d += 1usize << clique.len();
        }
        if theta.len() != d {
            return Err(Error::InvalidModel(format!(
                "expected {d} parameters, got {}",
                theta.len()
            )));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite parameter {t}")));
        }
        for (a, ca) in cliques.iter().enumerate() {
            for (b, cb) in cliques.iter().enumerate() {
                if a != b && ca.len() < cb.len() && ca.iter().all(|v| cb.contains(v)) {
                    log::warn!("clique {ca:?} is contained in clique {cb:?}; the factorization is not maximal");
                }
            }
        }
        Ok(Self {
            n,
            cliques,
            offsets,
            theta,
        })
    }

    /// Model with every parameter set to zero (the uniform distribution).
    pub fn zeros(n: usize, cliques: Vec<Vec<usize>>) -> Result<Self> {
        let d = cliques.iter().map(|c| 1usize << c.len()).sum();
        Self::new(n, cliques, vec![0.0; d])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn num_cliques(&self) -> usize {
        self.cliques.len()
    }

    /// Total parameter count `d = Σ_c 2^|C_c|`.
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn offset(&self, clique: usize) -> usize {
        self.offsets[clique]
    }

    /// Parameter for clique `c` at local configuration `y`.
    pub fn theta_at(&self, clique: usize, y: usize) -> f64 {
        self.theta[self.offsets[clique] + y]
    }

    /// Map a flat parameter index back to `(clique, y)`.
    pub fn entry_key(&self, j: usize) -> (usize, usize) {
        let c = match self.offsets.binary_search(&j) {
            Ok(c) => c,
            Err(c) => c - 1,
        };
        (c, j - self.offsets[c])
    }

    /// Same structure, new parameters.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidModel(format!(
                "expected {} parameters, got {}",
                self.dim(),
                theta.len()
            )));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite parameter {t}")));
        }
        Ok(Self {
            theta,
            ..self.clone()
        })
    }

    pub fn check_state(&self, x: usize) -> Result<()> {
        if self.n < usize::BITS as usize && x >> self.n != 0 {
            return Err(Error::IndexOutOfRange {
                index: x,
                bits: self.n,
            });
        }
        Ok(())
    }

    /// Local configuration of clique `c` under joint state `x`.
    #[inline]
    pub fn local_config(&self, clique: usize, x: usize) -> usize {
        self.cliques[clique]
            .iter()
            .fold(0, |y, &v| (y << 1) | vertex_bit(x, v, self.n))
    }

    /// Flat indices of the parameters active at `x`, one per clique.
    pub fn active_entries(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cliques.len()).map(move |c| self.offsets[c] + self.local_config(c, x))
    }

    /// Overcomplete indicator statistics of `x` as a 0/1 vector of length `d`.
    pub fn phi_vector(&self, x: usize) -> Result<Vec<u8>> {
        self.check_state(x)?;
        let mut phi = vec![0u8; self.dim()];
        for j in self.active_entries(x) {
            phi[j] = 1;
        }
        Ok(phi)
    }

    /// Like [`phi_vector`](Self::phi_vector) but from explicit bits.
    pub fn phi_vector_bits(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        self.phi_vector(bits_to_index(bits))
    }

    /// Unnormalized log-probability `θᵀφ(x)`, summed clique by clique.
    #[inline]
    pub fn log_potential(&self, x: usize) -> f64 {
        let mut s = 0.0;
        for j in self.active_entries(x) {
            s += self.theta[j];
        }
        s
    }

    /// Add `c` to every parameter. The distribution is unchanged.
    pub fn shift_parameters(&self, c: f64) -> Self {
        Self {
            theta: self.theta.iter().map(|t| t + c).collect(),
            ..self.clone()
        }
    }

    /// Shift so that the largest parameter is exactly zero.
    pub fn normalize_for_circuit(&self) -> Self {
        self.shift_parameters(self.normalization_shift())
    }

    /// The shift applied by [`normalize_for_circuit`](Self::normalize_for_circuit), i.e. `-max θ`.
    pub fn normalization_shift(&self) -> f64 {
        -self.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(&self.to_file()).expect("model serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_file(&self) -> ModelFile {
        let mut theta = Vec::with_capacity(self.dim());
        for (c, clique) in self.cliques.iter().enumerate() {
            let k = clique.len();
            for y in 0..1usize << k {
                theta.push(ThetaEntry {
                    clique_index: c,
                    y_bits: (0..k).map(|i| ((y >> (k - 1 - i)) & 1) as u8).collect(),
                    value: self.theta_at(c, y),
                });
            }
        }
        ModelFile {
            n: self.n,
            cliques: self.cliques.clone(),
            theta,
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let d: usize = file.cliques.iter().map(|c| 1usize << c.len().min(63)).sum();
        let offsets: Vec<usize> = file
            .cliques
            .iter()
            .scan(0usize, |acc, c| {
                let o = *acc;
                *acc += 1usize << c.len().min(63);
                Some(o)
            })
            .collect();
        let mut theta = vec![f64::NAN; d];
        for e in &file.theta {
            let clique = file.cliques.get(e.clique_index).ok_or_else(|| {
                Error::InvalidModel(format!("theta refers to clique {}", e.clique_index))
            })?;
            if e.y_bits.len() != clique.len() || e.y_bits.iter().any(|&b| b > 1) {
                return Err(Error::InvalidModel(format!(
                    "bad y_bits {:?} for clique {}",
                    e.y_bits, e.clique_index
                )));
            }
            let j = offsets[e.clique_index] + bits_to_index(&e.y_bits);
            if !theta[j].is_nan() {
                return Err(Error::InvalidModel(format!(
                    "duplicate theta entry for clique {} y {:?}",
                    e.clique_index, e.y_bits
                )));
            }
            theta[j] = e.value;
        }
        if theta.iter().any(|t| t.is_nan()) {
            return Err(Error::InvalidModel(format!(
                "theta must have exactly {d} entries, one per (clique, y)"
            )));
        }
        Self::new(file.n, file.cliques, theta)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

impl fmt::Display for GraphicalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GraphicalModel(n={}, cliques={:?}, d={})", self.n, self.cliques, self.dim())
    }
}

/// On-disk model representation. See `docs/model.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub cliques: Vec<Vec<usize>>,
    pub theta: Vec<ThetaEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaEntry {
    pub clique_index: usize,
    pub y_bits: Vec<u8>,
    pub value: f64,
}

/// Probability vector over all `2^n` joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDistribution {
    probabilities: Vec<f64>,
}

impl DenseDistribution {
    /// Wrap a vector that must already sum to one (within 1e-9).
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Empty("distribution"));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidConfig("probabilities must be finite and nonnegative".into()));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self { probabilities })
    }

    /// Normalize nonnegative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::NotNormalized(sum));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probabilities: vec![1.0 / len as f64; len],
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.probabilities[x]
    }
}

/// Samples of joint configurations, optionally weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    samples: Vec<usize>,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(n: usize, samples: Vec<usize>) -> Result<Self> {
        Self::build(n, samples, None)
    }

    pub fn weighted(n: usize, samples: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != samples.len() {
            return Err(Error::InvalidConfig(format!(
                "{} weights for {} samples",
                weights.len(),
                samples.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig("weights must be finite and nonnegative".into()));
        }
        Self::build(n, samples, Some(weights))
    }

    /// From explicit bit vectors; each must have exactly `n` entries.
    pub fn from_bits(n: usize, rows: &[Vec<u8>]) -> Result<Self> {
        let samples = rows
            .iter()
            .map(|r| {
                if r.len() == n {
                    Ok(bits_to_index(r))
                } else {
                    Err(Error::LengthMismatch {
                        expected: n,
                        got: r.len(),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, samples)
    }

    fn build(n: usize, samples: Vec<usize>, weights: Option<Vec<f64>>) -> Result<Self> {
        if let Some(&x) = samples.iter().find(|&&x| x >> n != 0) {
            return Err(Error::IndexOutOfRange { index: x, bits: n });
        }
        Ok(Self {
            n,
            samples,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(sample, weight)` pairs; weight defaults to 1.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.samples.iter().enumerate().map(move |(i, &x)| {
            (x, self.weights.as_ref().map_or(1.0, |w| w[i]))
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.weights
            .as_ref()
            .map_or(self.samples.len() as f64, |w| w.iter().sum())
    }
}

/// Exhaustive enumeration over all joint states, refused above a vertex limit.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce {
    pub limit: usize,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self {
            limit: DEFAULT_ORACLE_LIMIT,
        }
    }
}

impl BruteForce {
    pub fn with_limit(limit: usize) -> Self {
        Self { limit }
    }

    fn check(&self, model: &GraphicalModel) -> Result<usize> {
        if model.n() > self.limit {
            return Err(Error::OracleLimit {
                n: model.n(),
                limit: self.limit,
            });
        }
        Ok(1usize << model.n())
    }

    /// Log-potentials of every state, index order.
    pub fn log_potentials(&self, model: &GraphicalModel) -> Result<Vec<f64>> {
        let states = self.check(model)?;
        Ok((0..states).map(|x| model.log_potential(x)).collect())
    }

    pub fn pmf(&self, model: &GraphicalModel) -> Result<DenseDistribution> {
        let lp = self.log_potentials(model)?;
        let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lp.iter().map(|l| (l - max).exp()).collect();
        DenseDistribution::from_weights(w)
    }

    /// `Z(θ) = Σ_x exp(θᵀφ(x))`.
    pub fn partition(&self, model: &GraphicalModel) -> Result<f64> {
        Ok(self.log_partition(model)?.exp())
    }

    /// `A(θ) = ln Z(θ)`, computed with a max-shift for stability.
    pub fn log_partition(&self, model: &GraphicalModel) -> Result<f64> {
        let lp = self.log_potentials(model)?;
        let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(max + lp.iter().map(|l| (l - max).exp()).sum::<f64>().ln())
    }

    /// Model moments `μ̂ = Σ_x P(x) φ(x)`.
    pub fn moments(&self, model: &GraphicalModel) -> Result<Vec<f64>> {
        let pmf = self.pmf(model)?;
        let mut mu = vec![0.0; model.dim()];
        for (x, &p) in pmf.probabilities().iter().enumerate() {
            for j in model.active_entries(x) {
                mu[j] += p;
            }
        }
        Ok(mu)
    }

    /// Average negative log-likelihood of the dataset.
    pub fn nll(&self, model: &GraphicalModel, data: &Dataset) -> Result<f64> {
        check_dataset(model, data)?;
        let a = self.log_partition(model)?;
        let total = data.total_weight();
        let s: f64 = data.iter().map(|(x, w)| w * model.log_potential(x)).sum();
        Ok(a - s / total)
    }

    /// Most probable state; the lowest state index wins ties.
    pub fn map_state(&self, model: &GraphicalModel) -> Result<usize> {
        let lp = self.log_potentials(model)?;
        Ok(argmax_lowest(&lp))
    }
}

pub(crate) fn check_dataset(model: &GraphicalModel, data: &Dataset) -> Result<()> {
    if data.is_empty() || data.total_weight() <= 0.0 {
        return Err(Error::Empty("dataset"));
    }
    if data.n() != model.n() {
        return Err(Error::LengthMismatch {
            expected: model.n(),
            got: data.n(),
        });
    }
    Ok(())
}

/// Index of the first maximum.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Empirical moments `μ̃`: weighted mean of `φ` over the dataset.
pub fn empirical_moments(data: &Dataset, model: &GraphicalModel) -> Result<Vec<f64>> {
    check_dataset(model, data)?;
    let total = data.total_weight();
    let mut mu = vec![0.0; model.dim()];
    for (x, w) in data.iter() {
        for j in model.active_entries(x) {
            mu[j] += w;
        }
    }
    mu.iter_mut().for_each(|m| *m /= total);
    Ok(mu)
}

pub fn brute_force_pmf(model: &GraphicalModel) -> Result<DenseDistribution> {
    BruteForce::default().pmf(model)
}

pub fn partition_brute(model: &GraphicalModel) -> Result<f64> {
    BruteForce::default().partition(model)
}

pub fn log_partition(model: &GraphicalModel) -> Result<f64> {
    BruteForce::default().log_partition(model)
}

pub fn moments(model: &GraphicalModel) -> Result<Vec<f64>> {
    BruteForce::default().moments(model)
}

pub fn nll(model: &GraphicalModel, data: &Dataset) -> Result<f64> {
    BruteForce::default().nll(model, data)
}

pub fn map_state_brute(model: &GraphicalModel) -> Result<usize> {
    BruteForce::default().map_state(model)
}
