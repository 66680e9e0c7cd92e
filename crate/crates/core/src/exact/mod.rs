//! Exact minimisation and model export for external solvers.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ising::{IsingModel, Spins};

pub mod bnb;
pub mod brute;
pub mod elimination;
pub mod lp;

pub use bnb::{branch_and_bound, branch_and_bound_from, BnbStats};
pub use brute::{brute_force, BRUTE_FORCE_CAP};
pub use elimination::{eliminate, sweep_order};

/// Sizes up to this are certified by enumeration rather than search.
pub const BRUTE_FORCE_PREFERRED: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    BranchAndBound,
    Elimination,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BruteForce => "brute_force",
            Method::BranchAndBound => "branch_and_bound",
            Method::Elimination => "elimination",
        }
    }
}

/// Optimal energy with the optima that attain it.
///
/// Enumeration lists every optimum; search lists at least one.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub optimal_energy: f64,
    pub optimal_configs: Vec<Spins>,
    pub method: Method,
    /// False when a time limit stopped the search; the energy is then only an upper bound.
    pub proof_complete: bool,
}

/// Frontier width up to which elimination is used for certification.
pub const ELIMINATION_PREFERRED: usize = 22;

/// Exact optimum by the cheapest complete method: enumeration for small
/// models, frontier elimination for narrow ones, otherwise branch and bound
/// (started from `hint`) under `time_limit` seconds.
pub fn certify_model(model: &IsingModel, time_limit: f64, hint: Option<&Spins>) -> Result<Certificate> {
    if model.node_count() <= BRUTE_FORCE_PREFERRED {
        return brute_force(model);
    }
    if sweep_order(model).1 <= ELIMINATION_PREFERRED {
        return eliminate(model);
    }
    Ok(branch_and_bound_from(model, time_limit, hint)?.0)
}
