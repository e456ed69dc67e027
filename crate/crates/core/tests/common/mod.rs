#![allow(dead_code)]

use qcgm::model::GraphicalModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random clique structure with `n` in `1..=max_n` and `1..=max_cliques`
/// distinct cliques; parameters from `U[low, high)`.
pub fn random_model(r: &mut ChaCha8Rng, max_n: usize, max_cliques: usize, low: f64, high: f64) -> GraphicalModel {
    let n = r.random_range(1..=max_n);
    let target = r.random_range(1..=max_cliques).min((1usize << n) - 1);
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    while cliques.len() < target {
        let mask = r.random_range(1..1usize << n);
        let clique: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        if !cliques.contains(&clique) {
            cliques.push(clique);
        }
    }
    let d: usize = cliques.iter().map(|c| 1usize << c.len()).sum();
    let theta = (0..d).map(|_| r.random_range(low..high)).collect();
    GraphicalModel::new(n, cliques, theta).unwrap()
}

/// Indicator `φ_{C,y}(x)` straight from its definition on bit vectors.
pub fn indicator(bits: &[u8], clique: &[usize], y: &[u8]) -> u8 {
    clique.iter().zip(y).all(|(&v, &b)| bits[v] == b) as u8
}

/// Bits of state `j`, vertex 0 first (most significant).
pub fn bits(j: usize, n: usize) -> Vec<u8> {
    (0..n).map(|v| ((j >> (n - 1 - v)) & 1) as u8).collect()
}

/// Local configuration `y` (clique order, first vertex most significant).
pub fn y_bits(y: usize, k: usize) -> Vec<u8> {
    (0..k).map(|i| ((y >> (k - 1 - i)) & 1) as u8).collect()
}

/// Unnormalized log-probability by explicit sum over (clique, y) indicators.
pub fn naive_log_potential(model: &GraphicalModel, x: usize) -> f64 {
    let b = bits(x, model.n());
    let mut s = 0.0;
    for (c, clique) in model.cliques().iter().enumerate() {
        for y in 0..1usize << clique.len() {
            if indicator(&b, clique, &y_bits(y, clique.len())) == 1 {
                s += model.theta_at(c, y);
            }
        }
    }
    s
}

/// pmf by direct normalization of `exp(naive_log_potential)`.
pub fn naive_pmf(model: &GraphicalModel) -> Vec<f64> {
    let w: Vec<f64> = (0..1usize << model.n()).map(|x| naive_log_potential(model, x).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

pub fn naive_partition(model: &GraphicalModel) -> f64 {
    (0..1usize << model.n()).map(|x| naive_log_potential(model, x).exp()).sum()
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Minimum average NLL over models on the chain `{0,1},{1,2}`.
///
/// The chain is decomposable, so the maximum-likelihood fit is the empirical
/// distribution's junction-tree factorization and the optimum equals
/// `H(x0,x1) + H(x1,x2) − H(x1)` of the empirical distribution.
pub fn chain3_mle_nll(data: &qcgm::Dataset) -> f64 {
    let mut counts = [0f64; 8];
    for (x, w) in data.iter() {
        counts[x] += w;
    }
    let total: f64 = counts.iter().sum();
    let entropy = |p: &[f64]| -> f64 {
        -p.iter().filter(|&&c| c > 0.0).map(|&c| c / total * (c / total).ln()).sum::<f64>()
    };
    let (mut p01, mut p12, mut p1) = ([0f64; 4], [0f64; 4], [0f64; 2]);
    for (x, &c) in counts.iter().enumerate() {
        p01[x >> 1] += c;
        p12[x & 3] += c;
        p1[(x >> 1) & 1] += c;
    }
    entropy(&p01) + entropy(&p12) - entropy(&p1)
}
