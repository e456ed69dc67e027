//! Statevector simulation of compiled circuits.
//!
//! Amplitudes live in one flat array. Qubit `q` of an `m`-qubit register is
//! bit `m - 1 - q` of the basis index, so qubit 0 is the most significant bit
//! (the same convention as model state indices). With the circuit layout this
//! means a basis index reads `[targets | embed | rp_0 … rp_{K-1}]` from the
//! high bits down.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitIR, GateIR, QubitLayout};
use crate::error::{Error, Result};
use crate::model::DenseDistribution;
use crate::rng::{domain, stream};

pub const DEFAULT_SIM_LIMIT: usize = 26;

/// Success probabilities below this are treated as degenerate.
pub const MIN_SUCCESS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    m: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `m` qubits.
    pub fn zero(m: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << m];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { m, amps }
    }

    /// `|+⟩^{⊗m}`.
    pub fn plus(m: usize) -> Self {
        let a = (-(m as f64) / 2.0).exp2();
        Self {
            m,
            amps: vec![Complex64::new(a, 0.0); 1usize << m],
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        Ok(Self {
            m: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.m
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    #[inline]
    fn bit_pos(&self, q: usize) -> usize {
        self.m - 1 - q
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.m {
            return Err(Error::QubitOutOfRange { qubit: q, m: self.m });
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &GateIR) -> Result<()> {
        for q in gate.qubits() {
            self.check_qubit(q)?;
        }
        match gate {
            GateIR::Hadamard(q) => self.hadamard(*q),
            GateIR::CliquePhase {
                rp_control,
                polarity,
                targets,
                embed,
                y,
                ..
            } => {
                let mut mask = 1usize << self.bit_pos(*rp_control);
                let mut want = polarity.bit() << self.bit_pos(*rp_control);
                let k = targets.len();
                for (i, &t) in targets.iter().enumerate() {
                    let pos = self.bit_pos(t);
                    mask |= 1 << pos;
                    want |= ((y >> (k - 1 - i)) & 1) << pos;
                }
                let phase = gate.phase_on_embed_zero().expect("phase gate");
                self.diagonal_phase(mask, want, self.bit_pos(*embed), phase);
            }
        }
        Ok(())
    }

    fn hadamard(&mut self, q: usize) {
        let stride = 1usize << self.bit_pos(q);
        let h = FRAC_1_SQRT_2;
        for block in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * h;
                *b = (x - y) * h;
            }
        }
    }

    /// Multiply amplitudes with `i & mask == want` by `phase`, or by its
    /// conjugate where the bit at `embed_pos` is set.
    fn diagonal_phase(&mut self, mask: usize, want: usize, embed_pos: usize, phase: Complex64) {
        let conj = phase.conj();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == want {
                *a *= if (i >> embed_pos) & 1 == 0 { phase } else { conj };
            }
        }
    }

    pub fn apply_x(&mut self, q: usize) {
        let stride = 1usize << self.bit_pos(q);
        for block in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            lo.swap_with_slice(hi);
        }
    }

    pub fn apply_z(&mut self, q: usize) {
        let pos = self.bit_pos(q);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i >> pos) & 1 == 1 {
                *a = -*a;
            }
        }
    }
}

/// Toy noise for demonstrations. Not a model of any physical device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Per involved qubit, after every gate.
    pub depolarizing_prob: f64,
    pub readout: ReadoutNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutNoise {
    Uniform(f64),
    PerQubit(Vec<f64>),
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            enabled: false,
            depolarizing_prob: 0.0,
            readout: ReadoutNoise::Uniform(0.0),
        }
    }

    pub fn new(depolarizing_prob: f64, readout_flip_prob: f64) -> Result<Self> {
        let cfg = Self {
            enabled: depolarizing_prob > 0.0 || readout_flip_prob > 0.0,
            depolarizing_prob,
            readout: ReadoutNoise::Uniform(readout_flip_prob),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=0.5).contains(&p);
        let readout_ok = match &self.readout {
            ReadoutNoise::Uniform(p) => ok(*p),
            ReadoutNoise::PerQubit(ps) => ps.iter().all(|&p| ok(p)),
        };
        if !ok(self.depolarizing_prob) || !readout_ok {
            return Err(Error::InvalidConfig("noise probabilities must lie in [0, 0.5]".into()));
        }
        Ok(())
    }

    pub fn readout_prob(&self, qubit: usize) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        match &self.readout {
            ReadoutNoise::Uniform(p) => *p,
            ReadoutNoise::PerQubit(ps) => ps.get(qubit).copied().unwrap_or(0.0),
        }
    }

    fn has_gate_noise(&self) -> bool {
        self.enabled && self.depolarizing_prob > 0.0
    }
}

/// After `gate`, hit each involved qubit with probability `depolarizing_prob`
/// by a uniformly chosen X, Z or XZ.
pub fn apply_noise_trajectory(
    state: &mut StateVector,
    gate: &GateIR,
    noise: &NoiseConfig,
    rng: &mut impl Rng,
) {
    if !noise.has_gate_noise() {
        return;
    }
    for q in gate.qubits() {
        if rng.random::<f64>() < noise.depolarizing_prob {
            match rng.random_range(0..3u8) {
                0 => state.apply_x(q),
                1 => state.apply_z(q),
                _ => {
                    state.apply_z(q);
                    state.apply_x(q);
                }
            }
        }
    }
}

/// One measured shot, split by register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Target bits, vertex 0 as most significant bit.
    pub target_bits: usize,
    pub embed_bit: u8,
    /// Real-part auxiliaries, clique 0 as most significant bit.
    pub rp_bits: usize,
    pub accepted: bool,
}

impl ShotRecord {
    pub fn decode(layout: &QubitLayout, index: usize) -> Self {
        let k = layout.n_cliques;
        let rp_bits = index & ((1usize << k) - 1);
        Self {
            target_bits: index >> (k + 1),
            embed_bit: ((index >> k) & 1) as u8,
            rp_bits,
            accepted: rp_bits == 0,
        }
    }
}

/// Post-selected target distribution together with the success probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactConditional {
    pub distribution: DenseDistribution,
    /// `δ*`: probability that every real-part auxiliary reads 0.
    pub success_prob: f64,
    /// Unnormalized accepted weight per target state, split by embedding bit.
    pub by_embed: [Vec<f64>; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct Simulator {
    pub limit: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Self {
            limit: DEFAULT_SIM_LIMIT,
        }
    }
}

impl Simulator {
    pub fn with_limit(limit: usize) -> Self {
        Self { limit }
    }

    fn check(&self, m: usize) -> Result<()> {
        if m > self.limit {
            return Err(Error::SimulatorLimit { m, limit: self.limit });
        }
        Ok(())
    }

    pub fn prepare_plus(&self, m: usize) -> Result<StateVector> {
        self.check(m)?;
        Ok(StateVector::plus(m))
    }

    /// Final state of `circuit` applied to `|+⟩^{⊗m}`.
    pub fn run(&self, circuit: &CircuitIR) -> Result<StateVector> {
        let mut state = self.prepare_plus(circuit.num_qubits())?;
        for g in &circuit.gates {
            state.apply_gate(g)?;
        }
        Ok(state)
    }

    pub fn exact_conditional(&self, circuit: &CircuitIR) -> Result<ExactConditional> {
        let state = self.run(circuit)?;
        conditional_from_state(&state, &circuit.layout)
    }

    /// `shots` independent measurements of the final state.
    ///
    /// Without gate noise the final state is computed once and sampled by
    /// inverse CDF; with gate noise every shot runs its own trajectory.
    pub fn sample_shots(
        &self,
        circuit: &CircuitIR,
        shots: usize,
        seed: u64,
        noise: &NoiseConfig,
    ) -> Result<Vec<ShotRecord>> {
        if shots == 0 {
            return Err(Error::InvalidConfig("shot count must be at least 1".into()));
        }
        noise.validate()?;
        let m = circuit.num_qubits();
        self.check(m)?;
        let readout: Vec<f64> = (0..m).map(|q| noise.readout_prob(q)).collect();
        let has_readout = readout.iter().any(|&p| p > 0.0);

        let mut records = Vec::with_capacity(shots);
        if noise.has_gate_noise() {
            for shot in 0..shots {
                let mut rng = stream(seed, domain::SHOTS, shot as u64);
                let mut state = StateVector::plus(m);
                for g in &circuit.gates {
                    state.apply_gate(g)?;
                    apply_noise_trajectory(&mut state, g, noise, &mut rng);
                }
                let cdf = cumulative(&state.probabilities());
                let mut index = draw(&cdf, &mut rng);
                if has_readout {
                    index = flip_readout(index, m, &readout, &mut rng);
                }
                records.push(ShotRecord::decode(&circuit.layout, index));
            }
        } else {
            let state = self.run(circuit)?;
            let cdf = cumulative(&state.probabilities());
            for shot in 0..shots {
                let mut rng = stream(seed, domain::SHOTS, shot as u64);
                let mut index = draw(&cdf, &mut rng);
                if has_readout {
                    index = flip_readout(index, m, &readout, &mut rng);
                }
                records.push(ShotRecord::decode(&circuit.layout, index));
            }
        }
        Ok(records)
    }
}

/// Post-select an already computed final state.
pub fn conditional_from_state(state: &StateVector, layout: &QubitLayout) -> Result<ExactConditional> {
    let n = layout.n_target;
    let k = layout.n_cliques;
    let mut by_embed = [vec![0.0; 1usize << n], vec![0.0; 1usize << n]];
    for x in 0..1usize << n {
        for z in 0..2usize {
            let index = (((x << 1) | z) << k) as usize;
            by_embed[z][x] = state.amplitudes()[index].norm_sqr();
        }
    }
    let weights: Vec<f64> = by_embed[0].iter().zip(&by_embed[1]).map(|(a, b)| a + b).collect();
    let success_prob: f64 = weights.iter().sum();
    if !(success_prob >= MIN_SUCCESS) {
        return Err(Error::DegenerateSuccess(success_prob));
    }
    Ok(ExactConditional {
        distribution: DenseDistribution::from_weights(weights)?,
        success_prob,
        by_embed,
    })
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("nonempty");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn flip_readout(mut index: usize, m: usize, probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    for (q, &p) in probs.iter().enumerate() {
        if p > 0.0 && rng.random::<f64>() < p {
            index ^= 1 << (m - 1 - q);
        }
    }
    index
}

pub fn prepare_plus(m: usize) -> Result<StateVector> {
    Simulator::default().prepare_plus(m)
}

pub fn exact_conditional(circuit: &CircuitIR) -> Result<ExactConditional> {
    Simulator::default().exact_conditional(circuit)
}

pub fn sample_shots(
    circuit: &CircuitIR,
    shots: usize,
    seed: u64,
    noise: &NoiseConfig,
) -> Result<Vec<ShotRecord>> {
    Simulator::default().sample_shots(circuit, shots, seed, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_circuit, Polarity};
    use crate::model::GraphicalModel;

    #[test]
    fn plus_state() {
        let s = prepare_plus(1).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a.re - FRAC_1_SQRT_2).abs() < 1e-15));
        let s = prepare_plus(3).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a.re - 0.353553).abs() < 1e-6));
        assert!(s.probabilities().iter().all(|&p| (p - 0.125).abs() < 1e-15));
        assert!(matches!(
            Simulator::with_limit(4).prepare_plus(5),
            Err(Error::SimulatorLimit { m: 5, limit: 4 })
        ));
    }

    #[test]
    fn hadamard_kernel() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&GateIR::Hadamard(0)).unwrap();
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let mut t = StateVector::zero(3);
        t.apply_gate(&GateIR::Hadamard(1)).unwrap();
        let before = t.clone();
        t.apply_gate(&GateIR::Hadamard(2)).unwrap();
        t.apply_gate(&GateIR::Hadamard(2)).unwrap();
        for (a, b) in t.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(matches!(
            t.apply_gate(&GateIR::Hadamard(3)),
            Err(Error::QubitOutOfRange { qubit: 3, m: 3 })
        ));
    }

    #[test]
    fn zero_angle_phase_is_identity() {
        let mut s = StateVector::plus(4);
        let before = s.clone();
        s.apply_gate(&GateIR::CliquePhase {
            rp_control: 3,
            polarity: Polarity::OnOne,
            clique: 0,
            targets: vec![0, 1],
            embed: 2,
            y: 2,
            gamma: 0.0,
            adjoint: false,
        })
        .unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn pauli_kernels() {
        let mut s = StateVector::zero(2);
        s.apply_x(1);
        assert_eq!(s.amplitudes()[1], Complex64::new(1.0, 0.0));
        s.apply_z(1);
        assert_eq!(s.amplitudes()[1], Complex64::new(-1.0, 0.0));
        s.apply_x(0);
        assert_eq!(s.amplitudes()[3], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn decode_layout() {
        let layout = QubitLayout::new(3, 2);
        // targets 101, embed 1, rp 00
        let r = ShotRecord::decode(&layout, 0b101_1_00);
        assert_eq!((r.target_bits, r.embed_bit, r.rp_bits, r.accepted), (0b101, 1, 0, true));
        let r = ShotRecord::decode(&layout, 0b000_0_10);
        assert_eq!((r.rp_bits, r.accepted), (0b10, false));
    }

    #[test]
    fn zero_model_is_trivial() {
        let m = GraphicalModel::zeros(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let c = build_circuit(&m).unwrap();
        let ex = exact_conditional(&c).unwrap();
        assert!((ex.success_prob - 1.0).abs() < 1e-12);
        assert!(ex.distribution.probabilities().iter().all(|&p| (p - 0.125).abs() < 1e-12));
        let shots = sample_shots(&c, 1000, 3, &NoiseConfig::none()).unwrap();
        assert!(shots.iter().all(|s| s.accepted));
    }

    #[test]
    fn single_vertex_success_identity() {
        let m = GraphicalModel::new(1, vec![vec![0]], vec![-1.0, 0.0]).unwrap();
        let c = build_circuit(&m).unwrap();
        let ex = exact_conditional(&c).unwrap();
        let e = (-1f64).exp();
        assert!((ex.success_prob - (1.0 + e) / 2.0).abs() < 1e-12);
        assert!((ex.success_prob - 0.683940).abs() < 1e-6);
        assert!((ex.distribution.get(0) - e / (1.0 + e)).abs() < 1e-12);
    }

    #[test]
    fn shots_are_deterministic() {
        let m = GraphicalModel::new(2, vec![vec![0, 1]], vec![-1.0, -2.0, 0.0, -0.5]).unwrap();
        let c = build_circuit(&m).unwrap();
        let a = sample_shots(&c, 500, 11, &NoiseConfig::none()).unwrap();
        let b = sample_shots(&c, 500, 11, &NoiseConfig::none()).unwrap();
        let other = sample_shots(&c, 500, 12, &NoiseConfig::none()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert!(sample_shots(&c, 0, 1, &NoiseConfig::none()).is_err());
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseConfig::new(0.6, 0.0).is_err());
        assert!(NoiseConfig::new(0.1, -0.1).is_err());
        let n = NoiseConfig::new(0.0, 0.0).unwrap();
        assert!(!n.enabled);
    }
}
