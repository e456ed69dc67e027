//! Distances between distributions and sampler diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DenseDistribution;
use crate::samplers::SamplerOutput;

const NORMALIZATION_TOL: f64 = 1e-9;

fn check_pair(p: &DenseDistribution, q: &DenseDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch(p.len(), q.len()));
    }
    for d in [p, q] {
        let s: f64 = d.probabilities().iter().sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(s));
        }
    }
    Ok(())
}

/// `F(P, Q) = (Σ_x √(P(x) Q(x)))²`, clamped to `[0, 1]`.
pub fn fidelity(p: &DenseDistribution, q: &DenseDistribution) -> Result<f64> {
    check_pair(p, q)?;
    let bc: f64 = p
        .probabilities()
        .iter()
        .zip(q.probabilities())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Ok((bc * bc).clamp(0.0, 1.0))
}

/// Hellinger distance `H = √(1 − √F)`.
pub fn hellinger(p: &DenseDistribution, q: &DenseDistribution) -> Result<f64> {
    Ok(hellinger_from_fidelity(fidelity(p, q)?))
}

pub fn hellinger_from_fidelity(f: f64) -> f64 {
    (1.0 - f.sqrt()).max(0.0).sqrt()
}

/// `½ Σ_x |P(x) − Q(x)|`.
pub fn total_variation(p: &DenseDistribution, q: &DenseDistribution) -> Result<f64> {
    check_pair(p, q)?;
    let s: f64 = p
        .probabilities()
        .iter()
        .zip(q.probabilities())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * s).min(1.0))
}

/// Relative frequencies over `2^n` states. Unseen states get probability zero.
pub fn empirical_distribution(samples: &[usize], n: usize) -> Result<DenseDistribution> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let mut counts = vec![0.0; 1usize << n];
    for &x in samples {
        *counts
            .get_mut(x)
            .ok_or(Error::IndexOutOfRange { index: x, bits: n })? += 1.0;
    }
    DenseDistribution::from_weights(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessSummary {
    /// `δ̃* = accepted / trials`.
    pub success_rate: f64,
    /// `δ̃*·N`, i.e. the number of accepted samples.
    pub effective_samples: usize,
}

pub fn success_summary(output: &SamplerOutput) -> SuccessSummary {
    SuccessSummary {
        success_rate: output.success_rate(),
        effective_samples: output.samples.len(),
    }
}

/// One run of one sampler measured against a reference distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model_id: String,
    pub method: String,
    pub seed: u64,
    pub fidelity: f64,
    pub hellinger: f64,
    pub total_variation: f64,
    pub trials: usize,
    pub accepted: usize,
    pub success_rate: f64,
    pub effective_samples: usize,
}

impl ComparisonReport {
    /// Compare a sampler's accepted samples with `reference`. With no
    /// accepted samples the distances are reported as NaN.
    pub fn from_output(
        model_id: &str,
        seed: u64,
        output: &SamplerOutput,
        n: usize,
        reference: &DenseDistribution,
    ) -> Result<Self> {
        let summary = success_summary(output);
        let (fidelity, hellinger, tv) = if output.samples.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let emp = empirical_distribution(&output.samples, n)?;
            let f = fidelity(&emp, reference)?;
            (f, hellinger_from_fidelity(f), total_variation(&emp, reference)?)
        };
        Ok(Self {
            model_id: model_id.to_string(),
            method: output.method.to_string(),
            seed,
            fidelity,
            hellinger,
            total_variation: tv,
            trials: output.trials,
            accepted: output.samples.len(),
            success_rate: summary.success_rate,
            effective_samples: summary.effective_samples,
        })
    }
}

/// Median of the finite values; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
