//! Sampling discrete graphical models with quantum circuits.
//!
//! The crate compiles a binary graphical model in overcomplete
//! parametrization into a repeat-until-success circuit whose post-selected
//! output is distributed exactly as the model, simulates that circuit with a
//! statevector engine, and ships the classical machinery around it:
//!
//! - [`model`]: models, datasets and the brute-force inference oracle
//! - [`pauli`]: symbolic diagonal statistics and the model Hamiltonian
//! - [`circuit`] / [`qasm`]: circuit compilation and OpenQASM 3 emission
//! - [`simulator`]: statevector kernels, post-selection and shot sampling
//! - [`samplers`]: circuit sampling, Gibbs sampling and perturb-and-MAP
//! - [`inference`]: likelihood training, MAP and partition-function estimation
//! - [`metrics`]: fidelity, Hellinger distance and sampler summaries
//! - [`suite`] / [`experiment`]: benchmark structures and experiment runs

pub mod circuit;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod pauli;
pub mod qasm;
pub mod rng;
pub mod samplers;
pub mod simulator;
pub mod suite;

pub use circuit::{build_circuit, CircuitIR, GateIR, Polarity, QubitLayout};
pub use error::{Error, Result};
pub use model::{BruteForce, Dataset, DenseDistribution, GraphicalModel};
pub use simulator::{NoiseConfig, ShotRecord, Simulator, StateVector};

/// Library version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
