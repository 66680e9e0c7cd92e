//! Steepest coordinate descent greedy construction.
//!
//! Each construction starts with every spin unassigned and repeatedly fixes
//! the (variable, value) pair that lowers the partial energy the most, with
//! uniform random tie breaking. Unassigned spins contribute nothing, so
//! setting `σ_i = v` changes the partial energy by `v · f_i`, where `f_i` is
//! the field from `h_i` and the already assigned neighbours. Those fields are
//! cached and updated on every assignment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ising::IsingModel;
use crate::solvers::{Recorder, SolveOptions, SolveTrajectory};

/// Partial assignment plus the cached marginal field of every spin.
#[derive(Clone, Debug)]
pub struct Construction<'a> {
    model: &'a IsingModel,
    spins: Vec<i8>,
    fields: Vec<f64>,
    unassigned: Vec<usize>,
    candidates: Vec<(usize, i8)>,
}

impl<'a> Construction<'a> {
    pub fn new(model: &'a IsingModel) -> Self {
        Construction {
            model,
            spins: vec![0; model.node_count()],
            fields: model.fields().to_vec(),
            unassigned: (0..model.node_count()).collect(),
            candidates: Vec::new(),
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn is_complete(&self) -> bool {
        self.unassigned.is_empty()
    }

    /// Every `(i, v)` that minimises the partial energy after `σ_i = v`.
    pub fn argmin_candidates(&mut self) -> &[(usize, i8)] {
        self.candidates.clear();
        let mut best = f64::INFINITY;
        for &i in &self.unassigned {
            let f = self.fields[i];
            let cost = -f.abs();
            if cost < best {
                best = cost;
                self.candidates.clear();
            }
            if cost == best {
                if f < 0.0 {
                    self.candidates.push((i, 1));
                } else if f > 0.0 {
                    self.candidates.push((i, -1));
                } else {
                    self.candidates.push((i, -1));
                    self.candidates.push((i, 1));
                }
            }
        }
        &self.candidates
    }

    pub fn assign(&mut self, i: usize, v: i8) {
        debug_assert_eq!(self.spins[i], 0);
        self.spins[i] = v;
        let pos = self.unassigned.iter().position(|&k| k == i).expect("unassigned");
        self.unassigned.swap_remove(pos);
        for &(j, c) in self.model.neighbors(i) {
            self.fields[j] += c * f64::from(v);
        }
    }
}

pub fn solve(model: &IsingModel, opts: &SolveOptions) -> Result<SolveTrajectory> {
    opts.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rec = Recorder::new(model, opts);
    let mut constructions = 0u64;
    loop {
        let mut c = Construction::new(model);
        let mut aborted = false;
        while !c.is_complete() {
            if rec.done() {
                aborted = true;
                break;
            }
            rec.tick(c.unassigned.len() as u64);
            let (i, v) = {
                let cand = c.argmin_candidates();
                cand[rng.gen_range(0..cand.len())]
            };
            c.assign(i, v);
        }
        if aborted {
            break;
        }
        constructions += 1;
        rec.offer(c.spins());
        if rec.done() {
            break;
        }
    }
    Ok(rec.finish("scd", opts.seed, constructions.saturating_sub(1)))
}
