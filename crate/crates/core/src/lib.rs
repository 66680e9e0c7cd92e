//! Planted Ising instances on Chimera graphs, the classical solvers used to
//! benchmark quantum annealers on them, exact certification, and the
//! benchmark harness that turns solver runs into performance profiles.
//!
//! Energies follow `E(σ) = Σ J_ij σ_i σ_j + Σ h_i σ_i` over `σ ∈ {−1, +1}^N`.

pub mod chimera;
pub mod error;
pub mod exact;
pub mod format;
pub mod generators;
pub mod harness;
pub mod ising;
pub mod qa;
pub mod rng;
pub mod solvers;

pub use chimera::ChimeraTopology;
pub use error::{Error, Result};
pub use ising::{BoolModel, Gauge, IsingModel, Spins};
pub use solvers::{SolveOptions, SolveTrajectory, SolverKind};
