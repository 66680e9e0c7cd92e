//! Min-Sum message passing.
//!
//! Every directed edge `i → j` carries a scalar `ε_{i→j}`: the difference
//! between the min-marginal cost of `σ_j = +1` and `σ_j = −1` as seen from
//! the subtree behind `i`. With `y = 2h_i + Σ_{k∈N(i)\j} ε_{k→i}`,
//!
//! ```text
//! ε_{i→j} = SSL(−2J_ij, y),   SSL(x, y) = min(x, y) − min(−x, y) − x
//! ```
//!
//! and a spin decodes to `σ_i = −sign(2h_i + Σ_{k∈N(i)} ε_{k→i})`. Updates are
//! synchronous. A round ends at a fixed point or after `max_iters_per_round`
//! iterations; the decode is offered and the messages are perturbed with
//! uniform noise before the next round.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ising::IsingModel;
use crate::solvers::{Recorder, SolveOptions, SolveTrajectory};

pub const DEFAULT_MAX_ITERS: usize = 1000;
/// Largest absolute message change still counted as a fixed point.
pub const TOLERANCE: f64 = 1e-9;
/// Half-width of the uniform noise added to every message on restart.
pub const RESTART_NOISE: f64 = 0.1;

/// Symmetric saturated linear transfer: `y` clamped to `[−|x|, |x|]`, times `sign(x)`.
#[inline]
pub fn ssl(x: f64, y: f64) -> f64 {
    x.min(y) - (-x).min(y) - x
}

/// Messages on every directed edge, stored in adjacency order.
#[derive(Clone, Debug, PartialEq)]
pub struct Messages {
    start: Vec<usize>,
    values: Vec<f64>,
    pub iteration: usize,
}

impl Messages {
    fn zeros(model: &IsingModel) -> Self {
        let mut start = Vec::with_capacity(model.node_count() + 1);
        let mut total = 0;
        for i in 0..model.node_count() {
            start.push(total);
            total += model.neighbors(i).len();
        }
        start.push(total);
        Messages {
            start,
            values: vec![0.0; total],
            iteration: 0,
        }
    }

    /// `ε_{i→j}`, or `None` when `(i, j)` is not an edge.
    pub fn get(&self, model: &IsingModel, i: usize, j: usize) -> Option<f64> {
        let p = model.neighbors(i).iter().position(|&(k, _)| k == j)?;
        Some(self.values[self.start[i] + p])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Message-passing state for one model.
pub struct MinSum<'a> {
    model: &'a IsingModel,
    msgs: Messages,
    next: Vec<f64>,
    /// Slot of `ε_{j→i}` for the slot of `ε_{i→j}`.
    reverse: Vec<usize>,
}

impl<'a> MinSum<'a> {
    pub fn new(model: &'a IsingModel) -> Self {
        let msgs = Messages::zeros(model);
        let mut reverse = vec![0; msgs.len()];
        for i in 0..model.node_count() {
            for (p, &(j, _)) in model.neighbors(i).iter().enumerate() {
                let q = model
                    .neighbors(j)
                    .iter()
                    .position(|&(k, _)| k == i)
                    .expect("symmetric adjacency");
                reverse[msgs.start[i] + p] = msgs.start[j] + q;
            }
        }
        MinSum {
            model,
            next: vec![0.0; msgs.len()],
            msgs,
            reverse,
        }
    }

    pub fn messages(&self) -> &Messages {
        &self.msgs
    }

    /// One synchronous update; returns the largest absolute change.
    pub fn step(&mut self) -> f64 {
        let m = self.model;
        let old = &self.msgs.values;
        let mut change = 0.0f64;
        for i in 0..m.node_count() {
            let nbrs = m.neighbors(i);
            let base = self.msgs.start[i];
            let h2 = 2.0 * m.fields()[i];
            for (p, &(_, coupling)) in nbrs.iter().enumerate() {
                let mut y = h2;
                for q in 0..nbrs.len() {
                    if q != p {
                        y += old[self.reverse[base + q]];
                    }
                }
                let v = ssl(-2.0 * coupling, y);
                change = change.max((v - old[base + p]).abs());
                self.next[base + p] = v;
            }
        }
        std::mem::swap(&mut self.msgs.values, &mut self.next);
        self.msgs.iteration += 1;
        change
    }

    /// Iterates until the change drops below [`TOLERANCE`] or `max_iters` is hit.
    /// Returns the number of iterations and whether a fixed point was reached.
    pub fn run(&mut self, max_iters: usize) -> (usize, bool) {
        for k in 1..=max_iters {
            if self.step() < TOLERANCE {
                return (k, true);
            }
        }
        (max_iters, false)
    }

    /// `2h_i + Σ_k ε_{k→i}` for every node.
    pub fn beliefs(&self) -> Vec<f64> {
        (0..self.model.node_count())
            .map(|i| {
                let base = self.msgs.start[i];
                let incoming: f64 = (0..self.model.neighbors(i).len())
                    .map(|p| self.msgs.values[self.reverse[base + p]])
                    .sum();
                2.0 * self.model.fields()[i] + incoming
            })
            .collect()
    }

    pub fn decode<R: Rng>(&self, rng: &mut R) -> Vec<i8> {
        self.beliefs()
            .into_iter()
            .map(|b| {
                if b > 0.0 {
                    -1
                } else if b < 0.0 || rng.gen::<bool>() {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }

    pub fn perturb<R: Rng>(&mut self, rng: &mut R, amplitude: f64) {
        for v in &mut self.msgs.values {
            *v += rng.gen_range(-amplitude..=amplitude);
        }
    }
}

pub fn solve(model: &IsingModel, opts: &SolveOptions) -> Result<SolveTrajectory> {
    opts.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rec = Recorder::new(model, opts);
    let mut ms = MinSum::new(model);
    let step_cost = 6 * ms.msgs.len() as u64 + model.node_count() as u64;
    let max_iters = opts.max_iters_per_round.max(1);
    let mut rounds = 0u64;
    loop {
        let mut iters = 0;
        while iters < max_iters && !rec.done() {
            rec.tick(step_cost);
            iters += 1;
            if ms.step() < TOLERANCE {
                break;
            }
        }
        rec.tick(step_cost);
        rec.offer(&ms.decode(&mut rng));
        if rec.done() {
            break;
        }
        ms.perturb(&mut rng, RESTART_NOISE);
        rounds += 1;
    }
    let mut traj = rec.finish("ms", opts.seed, rounds);
    traj.metadata
        .insert("max_iters_per_round".into(), max_iters.into());
    Ok(traj)
}
