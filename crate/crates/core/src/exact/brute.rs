//! Exhaustive enumeration in Gray-code order.
//!
//! Consecutive Gray codes differ in one bit, so each step updates the energy
//! by a single flip delta. Running sums drift, so every state within a small
//! tolerance of the running minimum is kept and the survivors are re-scored
//! with the exact energy at the end.

use crate::error::{Error, Result};
use crate::exact::{Certificate, Method};
use crate::ising::{IsingModel, Spins};
use crate::solvers::{Recorder, SolveOptions, SolveTrajectory};

pub const BRUTE_FORCE_CAP: usize = 24;

fn check_size(model: &IsingModel) -> Result<()> {
    if model.node_count() > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            method: "brute force",
            size: model.node_count(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    Ok(())
}

/// Walks all `2^N` states; `visit(mask, running_energy)` may stop the walk by
/// returning false. Returns true when every state was visited.
fn enumerate(model: &IsingModel, mut visit: impl FnMut(u64, f64, &[i8]) -> bool) -> bool {
    let n = model.node_count();
    let mut spins = vec![1i8; n];
    let mut energy = model.energy_of(&spins);
    let mut mask = 0u64;
    if !visit(mask, energy, &spins) {
        return false;
    }
    for g in 1u64..(1u64 << n) {
        let i = g.trailing_zeros() as usize;
        energy += -2.0 * f64::from(spins[i]) * model.local_field(i, &spins);
        spins[i] = -spins[i];
        mask ^= 1 << i;
        if !visit(mask, energy, &spins) {
            return false;
        }
    }
    true
}

/// Every optimum of `model`, sorted by mask.
pub fn brute_force(model: &IsingModel) -> Result<Certificate> {
    check_size(model)?;
    let n = model.node_count();
    let tol = 1e-8 * (1.0 + model.scale());
    let mut running_min = f64::INFINITY;
    let mut candidates: Vec<u64> = Vec::new();
    let mut candidate_energy: Vec<f64> = Vec::new();
    enumerate(model, |mask, e, _| {
        if e < running_min - tol {
            running_min = e;
            let keep = running_min + tol;
            let mut w = 0;
            for r in 0..candidates.len() {
                if candidate_energy[r] <= keep {
                    candidates[w] = candidates[r];
                    candidate_energy[w] = candidate_energy[r];
                    w += 1;
                }
            }
            candidates.truncate(w);
            candidate_energy.truncate(w);
        } else {
            running_min = running_min.min(e);
        }
        if e <= running_min + tol {
            candidates.push(mask);
            candidate_energy.push(e);
        }
        true
    });
    let mut best = f64::INFINITY;
    let mut optima = Vec::new();
    for mask in candidates {
        let s = Spins::from_mask(mask, n);
        let e = model.energy_of(s.as_slice());
        if e < best {
            best = e;
            optima.clear();
        }
        if e == best {
            optima.push(mask);
        }
    }
    optima.sort_unstable();
    Ok(Certificate {
        optimal_energy: best,
        optimal_configs: optima.into_iter().map(|m| Spins::from_mask(m, n)).collect(),
        method: Method::BruteForce,
        proof_complete: true,
    })
}

/// Enumeration as an anytime solver.
pub fn solve(model: &IsingModel, opts: &SolveOptions) -> Result<SolveTrajectory> {
    opts.validate()?;
    check_size(model)?;
    let mut rec = Recorder::new(model, opts);
    let tol = 1e-9 * (1.0 + model.scale());
    let mut running = f64::INFINITY;
    let mut steps = 0u64;
    let step_cost = 1 + 2 * model.edges().len() as u64 / model.node_count().max(1) as u64;
    let complete = enumerate(model, |_, e, spins| {
        rec.tick(step_cost);
        if e < running - tol || running == f64::INFINITY {
            running = e.min(rec.offer(spins));
        }
        steps += 1;
        !steps.is_multiple_of(1024) || !rec.done()
    });
    let mut traj = if complete {
        // catch optima hidden inside the tolerance window
        let cert = brute_force(model)?;
        for c in &cert.optimal_configs {
            rec.offer(c.as_slice());
        }
        let mut t = rec.finish("brute", opts.seed, 0);
        t.metadata.insert("proof".into(), "complete".into());
        t
    } else {
        let mut t = rec.finish("brute", opts.seed, 0);
        t.metadata.insert("proof".into(), "incomplete".into());
        t
    };
    traj.metadata.insert("states_visited".into(), steps.into());
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ferromagnetic_pair() {
        let m = IsingModel::new(2, [(0, 1, -1.0)], vec![0.0; 2]).unwrap();
        let c = brute_force(&m).unwrap();
        assert_eq!(c.optimal_energy, -1.0);
        assert_eq!(
            c.optimal_configs,
            vec![Spins::new(vec![1, 1]).unwrap(), Spins::new(vec![-1, -1]).unwrap()]
        );
    }

    #[test]
    fn antiferromagnetic_triangle() {
        let m = IsingModel::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], vec![0.0; 3]).unwrap();
        let c = brute_force(&m).unwrap();
        assert_eq!(c.optimal_energy, -1.0);
        assert_eq!(c.optimal_configs.len(), 6);
        assert!(m.is_frustrated(&c.optimal_configs[0]).unwrap());
    }

    #[test]
    fn rejects_large_models() {
        let m = IsingModel::new(25, [], vec![0.0; 25]).unwrap();
        assert!(matches!(brute_force(&m), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn solver_reports_complete_proof() {
        let m = IsingModel::new(4, [(0, 1, 1.0), (1, 2, -1.0), (2, 3, 0.5)], vec![0.25, 0.0, -1.0, 0.0]).unwrap();
        let t = solve(&m, &SolveOptions::new(5.0, 0)).unwrap();
        t.validate(&m).unwrap();
        assert_eq!(t.metadata["proof"], "complete");
        assert_eq!(t.best().unwrap().energy, brute_force(&m).unwrap().optimal_energy);
    }
}
