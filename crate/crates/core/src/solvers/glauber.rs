//! Zero-temperature Glauber dynamics with restarts.
//!
//! A sweep visits every spin once in a fresh random order. Strictly
//! improving flips are taken, zero-change flips are taken with probability
//! one half. When no single flip strictly improves the configuration the
//! quench is over: the state is reported and a fresh random configuration
//! is drawn.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ising::IsingModel;
use crate::solvers::{Recorder, SolveOptions, SolveTrajectory};

/// Energy changes this close to zero count as ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Improved,
    TieFlipped,
    Kept,
}

/// Current configuration of one quench.
#[derive(Clone, Debug)]
pub struct Quench<'a> {
    model: &'a IsingModel,
    spins: Vec<i8>,
    order: Vec<usize>,
}

impl<'a> Quench<'a> {
    pub fn new(model: &'a IsingModel, spins: Vec<i8>) -> Self {
        assert_eq!(spins.len(), model.node_count());
        Quench {
            model,
            spins,
            order: (0..model.node_count()).collect(),
        }
    }

    pub fn random<R: Rng>(model: &'a IsingModel, rng: &mut R) -> Self {
        let spins = (0..model.node_count())
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        Self::new(model, spins)
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Energy change if spin `i` were flipped.
    #[inline]
    pub fn flip_delta(&self, i: usize) -> f64 {
        -2.0 * f64::from(self.spins[i]) * self.model.local_field(i, &self.spins)
    }

    pub fn visit<R: Rng>(&mut self, i: usize, rng: &mut R) -> Move {
        let delta = self.flip_delta(i);
        if delta < -TIE_EPS {
            self.spins[i] = -self.spins[i];
            Move::Improved
        } else if delta <= TIE_EPS && rng.gen::<bool>() {
            self.spins[i] = -self.spins[i];
            Move::TieFlipped
        } else {
            Move::Kept
        }
    }

    /// One pass in a fresh random order; returns the number of strict improvements.
    pub fn sweep<R: Rng>(&mut self, rng: &mut R) -> usize {
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(rng);
        let improved = order
            .iter()
            .filter(|&&i| self.visit(i, rng) == Move::Improved)
            .count();
        self.order = order;
        improved
    }

    pub fn is_local_minimum(&self) -> bool {
        (0..self.spins.len()).all(|i| self.flip_delta(i) >= -TIE_EPS)
    }
}

pub fn solve(model: &IsingModel, opts: &SolveOptions) -> Result<SolveTrajectory> {
    opts.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rec = Recorder::new(model, opts);
    let sweep_cost = 2 * model.edges().len() as u64 + model.node_count() as u64;
    let mut restarts = 0u64;
    'runs: loop {
        let mut q = Quench::random(model, &mut rng);
        loop {
            if rec.done() {
                rec.offer(q.spins());
                break 'runs;
            }
            rec.tick(sweep_cost);
            if q.sweep(&mut rng) == 0 {
                rec.tick(sweep_cost);
                if q.is_local_minimum() {
                    break;
                }
            }
        }
        rec.offer(q.spins());
        if rec.done() {
            break;
        }
        restarts += 1;
    }
    Ok(rec.finish("gd", opts.seed, restarts))
}
