//! Compilation of a graphical model into a post-selected sampling circuit.
//!
//! Qubit layout over `m = n + 1 + |cliques|` qubits:
//!
//! | qubits                  | role                                      |
//! |-------------------------|-------------------------------------------|
//! | `0 .. n`                | target vertices                           |
//! | `n`                     | embedding auxiliary (marginalized)        |
//! | `n + 1 .. n + 1 + K`    | one real-part auxiliary per clique        |
//!
//! The circuit acts on `|+⟩^{⊗m}`. Each clique contributes a pair of
//! polarity-controlled diagonal phase gates per local configuration followed
//! by a Hadamard on that clique's real-part auxiliary. Post-selecting every
//! real-part auxiliary on `0` leaves the target register distributed exactly
//! as the model.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::model::GraphicalModel;
use crate::pauli::{build_statistic, materialize_statistic};

/// Parameters below this are floored before the angle conversion.
pub const THETA_FLOOR: f64 = -60.0;

/// Largest qubit count accepted by [`materialize_block`].
pub const BLOCK_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitLayout {
    pub n_target: usize,
    pub n_cliques: usize,
}

impl QubitLayout {
    pub fn new(n_target: usize, n_cliques: usize) -> Self {
        Self {
            n_target,
            n_cliques,
        }
    }

    pub fn embed_aux(&self) -> usize {
        self.n_target
    }

    pub fn rp_aux(&self, clique: usize) -> usize {
        self.n_target + 1 + clique
    }

    pub fn rp_range(&self) -> std::ops::Range<usize> {
        self.n_target + 1..self.total()
    }

    pub fn total(&self) -> usize {
        self.n_target + 1 + self.n_cliques
    }
}

/// Which value of the control qubit enables a gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    OnZero,
    OnOne,
}

impl Polarity {
    pub fn bit(self) -> usize {
        match self {
            Polarity::OnZero => 0,
            Polarity::OnOne => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateIR {
    Hadamard(usize),
    /// Diagonal gate: where `rp_control` matches `polarity` and the `targets`
    /// read `y` (first target as most significant bit), multiply by
    /// `exp(+2iγ)` if the `embed` qubit is 0 and `exp(-2iγ)` if it is 1.
    /// `adjoint` conjugates both phases.
    CliquePhase {
        rp_control: usize,
        polarity: Polarity,
        clique: usize,
        targets: Vec<usize>,
        embed: usize,
        y: usize,
        gamma: f64,
        adjoint: bool,
    },
}

impl GateIR {
    /// Every qubit the gate touches.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateIR::Hadamard(q) => vec![*q],
            GateIR::CliquePhase {
                rp_control,
                targets,
                embed,
                ..
            } => {
                let mut qs = targets.clone();
                qs.push(*embed);
                qs.push(*rp_control);
                qs
            }
        }
    }

    /// Phase applied when the embedding qubit reads 0; the 1 branch gets its conjugate.
    pub fn phase_on_embed_zero(&self) -> Option<Complex64> {
        match self {
            GateIR::Hadamard(_) => None,
            GateIR::CliquePhase { gamma, adjoint, .. } => {
                let a = if *adjoint { -2.0 * gamma } else { 2.0 * gamma };
                Some(Complex64::from_polar(1.0, a))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitIR {
    pub layout: QubitLayout,
    pub gates: Vec<GateIR>,
    /// Angles laid out like the model's parameter vector.
    pub gammas: Vec<f64>,
    /// The model the angles were derived from, after normalization.
    pub normalized: GraphicalModel,
    /// Constant added to every parameter of the source model.
    pub shift: f64,
}

impl CircuitIR {
    pub fn num_qubits(&self) -> usize {
        self.layout.total()
    }

    pub fn gamma(&self, clique: usize, y: usize) -> f64 {
        self.gammas[self.normalized.offset(clique) + y]
    }

    /// Gates belonging to one clique block, in order.
    pub fn block(&self, clique: usize) -> impl Iterator<Item = &GateIR> {
        let rp = self.layout.rp_aux(clique);
        self.gates.iter().filter(move |g| match g {
            GateIR::Hadamard(q) => *q == rp,
            GateIR::CliquePhase { clique: c, .. } => *c == clique,
        })
    }
}

/// `γ = ½·arccos(exp(θ/2))`, so that `cos 2γ = exp(θ/2)`.
pub fn theta_to_gamma(theta: f64) -> Result<f64> {
    if theta.is_nan() || theta > 0.0 {
        return Err(Error::Domain(format!(
            "parameter {theta} must be <= 0; normalize the model first"
        )));
    }
    let t = if theta < THETA_FLOOR {
        log::warn!("parameter {theta} floored to {THETA_FLOOR} before angle conversion");
        THETA_FLOOR
    } else {
        theta
    };
    Ok((0.5 * (t / 2.0).exp().acos()).clamp(0.0, FRAC_PI_4))
}

/// Inverse of [`theta_to_gamma`]: `θ = 2·ln cos 2γ`.
pub fn gamma_to_theta(gamma: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_4).contains(&gamma) {
        return Err(Error::Domain(format!("angle {gamma} outside [0, π/4)")));
    }
    let c = (2.0 * gamma).cos();
    if c <= 0.0 {
        return Err(Error::Domain(format!("cos(2γ) = {c} is not positive")));
    }
    Ok(2.0 * c.ln())
}

/// Compile a model. Parameters are normalized first; the shift is recorded.
pub fn build_circuit(model: &GraphicalModel) -> Result<CircuitIR> {
    let shift = model.normalization_shift();
    let normalized = model.shift_parameters(shift);
    let layout = QubitLayout::new(model.n(), model.num_cliques());
    let gammas = normalized
        .theta()
        .iter()
        .map(|&t| theta_to_gamma(t))
        .collect::<Result<Vec<_>>>()?;

    let mut gates = Vec::with_capacity(2 * model.dim() + model.num_cliques());
    for (c, clique) in normalized.cliques().iter().enumerate() {
        let rp = layout.rp_aux(c);
        for y in 0..1usize << clique.len() {
            let gamma = gammas[normalized.offset(c) + y];
            for (polarity, adjoint) in [(Polarity::OnZero, false), (Polarity::OnOne, true)] {
                gates.push(GateIR::CliquePhase {
                    rp_control: rp,
                    polarity,
                    clique: c,
                    targets: clique.clone(),
                    embed: layout.embed_aux(),
                    y,
                    gamma,
                    adjoint,
                });
            }
        }
        gates.push(GateIR::Hadamard(rp));
    }
    Ok(CircuitIR {
        layout,
        gates,
        gammas,
        normalized,
        shift,
    })
}

fn pauli_x() -> DenseMatrix {
    let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    DenseMatrix::from_rows(&[&[o, l], &[l, o]])
}

fn pauli_z() -> DenseMatrix {
    DenseMatrix::from_diag(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
}

/// `U_C = Π_y ((e^{iγZ} ⊗ I)·U_{C,y})²` on (embedding aux ⊗ targets), built by
/// explicit matrix algebra from the unitary embedding
/// `U_{C,y} = X ⊗ (I − Φ_{C,y}) + Z ⊗ Φ_{C,y}`.
///
/// The embedding auxiliary is the most significant factor here. Test support;
/// refuses more than `BLOCK_LIMIT - 2` targets.
pub fn clique_operator(circuit: &CircuitIR, clique: usize) -> Result<DenseMatrix> {
    let n = circuit.layout.n_target;
    if n + 2 > BLOCK_LIMIT {
        return Err(Error::MaterializeLimit {
            size: n + 2,
            limit: BLOCK_LIMIT,
        });
    }
    let vertices = &circuit.normalized.cliques()[clique];
    let k = vertices.len();
    let dim = 1usize << n;
    let id_n = DenseMatrix::identity(dim);
    let mut total = DenseMatrix::identity(2 * dim);
    for y in 0..1usize << k {
        let bits: Vec<u8> = (0..k).map(|i| ((y >> (k - 1 - i)) & 1) as u8).collect();
        let stat = build_statistic(vertices, &bits, n)?;
        let phi_diag: Vec<Complex64> = materialize_statistic(&stat)?
            .into_iter()
            .map(|v| Complex64::new(v as f64, 0.0))
            .collect();
        let phi = DenseMatrix::from_diag(&phi_diag);
        let not_phi = id_n.add(&phi.scale(Complex64::new(-1.0, 0.0)));
        let embedding = pauli_x().kron(&not_phi).add(&pauli_z().kron(&phi));

        let gamma = circuit.gamma(clique, y);
        let rz = DenseMatrix::from_diag(&[
            Complex64::from_polar(1.0, gamma),
            Complex64::from_polar(1.0, -gamma),
        ])
        .kron(&id_n);
        let half = rz.matmul(&embedding);
        total = half.matmul(&half).matmul(&total);
    }
    Ok(total)
}

/// Dense operator of one clique block on all `m` qubits, without the
/// closing Hadamard: `|0⟩⟨0| ⊗ U_C + |1⟩⟨1| ⊗ U_C†` on that clique's
/// real-part auxiliary, identity on the others. Test support, `m ≤ 10`.
pub fn materialize_block(circuit: &CircuitIR, clique: usize) -> Result<DenseMatrix> {
    let m = circuit.num_qubits();
    if m > BLOCK_LIMIT {
        return Err(Error::MaterializeLimit {
            size: m,
            limit: BLOCK_LIMIT,
        });
    }
    let n = circuit.layout.n_target;
    let u = clique_operator(circuit, clique)?;
    let u_dag = u.adjoint();
    let rp_shift = m - 1 - circuit.layout.rp_aux(clique);
    let embed_shift = m - 1 - n;
    let rp_mask = ((1usize << circuit.layout.n_cliques) - 1) & !(1usize << rp_shift);
    // Index of a full basis state inside (embed ⊗ targets).
    let small = |i: usize| (((i >> embed_shift) & 1) << n) | (i >> (m - n));

    let dim = 1usize << m;
    let mut out = DenseMatrix::zeros(dim);
    for i in 0..dim {
        for k in 0..dim {
            if i & rp_mask != k & rp_mask || (i >> rp_shift) & 1 != (k >> rp_shift) & 1 {
                continue;
            }
            let op = if (i >> rp_shift) & 1 == 0 { &u } else { &u_dag };
            out[(i, k)] = op[(small(i), small(k))];
        }
    }
    Ok(out)
}
