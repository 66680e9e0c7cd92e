//! Depth-first branch and bound over spin fixings.
//!
//! With some spins fixed, every free spin `i` sees the linear coefficient
//! `g_i = h_i + Σ_{j fixed} J_ij σ_j`. The energy of any completion is at
//! least
//!
//! ```text
//! P + Σ_{i free} −|g_i| + Σ_{(i,j) free} −|J_ij|
//! ```
//!
//! where `P` is the energy of the terms among fixed spins. This is the
//! frustration bound of the undecided terms, with fixed-to-free couplers
//! folded into the free fields first.
//!
//! Variables are ordered by connectivity: start at the most influential
//! spin (`Σ|J| + |h|`), then repeatedly take the spin most strongly coupled
//! to those already ordered. The value with the smaller child bound is tried
//! first, falling back to `−sign(g_i)` and then `+1`.

use crate::error::Result;
use crate::exact::{Certificate, Method};
use crate::ising::{IsingModel, Spins};
use crate::solvers::{ClockKind, Recorder, SolveOptions, SolveTrajectory};

const CHECK_INTERVAL: u64 = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BnbStats {
    pub nodes: u64,
    /// Second branches that survived the bound test.
    pub backtracks: u64,
    pub leaves: u64,
}

/// Branching order used by the search.
pub fn variable_order(model: &IsingModel) -> Vec<usize> {
    let n = model.node_count();
    let influence: Vec<f64> = (0..n)
        .map(|i| model.fields()[i].abs() + model.neighbors(i).iter().map(|&(_, c)| c.abs()).sum::<f64>())
        .collect();
    let mut conn = vec![0.0f64; n];
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = usize::MAX;
        for i in 0..n {
            if placed[i] {
                continue;
            }
            if pick == usize::MAX
                || conn[i] > conn[pick]
                || (conn[i] == conn[pick] && influence[i] > influence[pick])
            {
                pick = i;
            }
        }
        placed[pick] = true;
        order.push(pick);
        for &(j, c) in model.neighbors(pick) {
            conn[j] += c.abs();
        }
    }
    order
}

struct Search<'m, 'r> {
    model: &'m IsingModel,
    rec: &'r mut Recorder<'m>,
    order: Vec<usize>,
    spins: Vec<i8>,
    g: Vec<f64>,
    partial: f64,
    free_abs: f64,
    free_pairs: f64,
    incumbent: f64,
    best: Vec<i8>,
    eps: f64,
    undo: Vec<(usize, f64)>,
    symmetric: bool,
    aborted: bool,
    stats: BnbStats,
}

impl<'m, 'r> Search<'m, 'r> {
    fn new(model: &'m IsingModel, rec: &'r mut Recorder<'m>) -> Self {
        let n = model.node_count();
        let g = model.fields().to_vec();
        let free_abs = g.iter().map(|v| v.abs()).sum();
        let free_pairs = model.edges().iter().map(|e| e.coupling.abs()).sum();
        Search {
            model,
            rec,
            order: variable_order(model),
            spins: vec![0; n],
            g,
            partial: 0.0,
            free_abs,
            free_pairs,
            incumbent: f64::INFINITY,
            best: Vec::new(),
            eps: 1e-10 * (1.0 + model.scale()),
            undo: Vec::new(),
            symmetric: model.fields().iter().all(|&h| h == 0.0),
            aborted: false,
            stats: BnbStats::default(),
        }
    }

    fn bound(&self) -> f64 {
        self.partial - self.free_abs - self.free_pairs
    }

    fn child_bound(&self, v: usize, s: f64) -> f64 {
        let gv = self.g[v];
        let mut b = self.partial + gv * s - (self.free_abs - gv.abs()) - self.free_pairs;
        for &(j, c) in self.model.neighbors(v) {
            if self.spins[j] == 0 {
                b += c.abs() - ((self.g[j] + c * s).abs() - self.g[j].abs());
            }
        }
        b
    }

    fn assign(&mut self, v: usize, s: i8) {
        let sf = f64::from(s);
        self.partial += self.g[v] * sf;
        self.free_abs -= self.g[v].abs();
        self.spins[v] = s;
        for &(j, c) in self.model.neighbors(v) {
            if self.spins[j] == 0 {
                self.undo.push((j, self.g[j]));
                self.free_abs -= self.g[j].abs();
                self.g[j] += c * sf;
                self.free_abs += self.g[j].abs();
                self.free_pairs -= c.abs();
            }
        }
    }

    fn dfs(&mut self, depth: usize) {
        self.stats.nodes += 1;
        self.rec.tick(1 + self.model.neighbors(self.order.get(depth).copied().unwrap_or(0)).len() as u64);
        if self.stats.nodes.is_multiple_of(CHECK_INTERVAL) && self.rec.done() {
            self.aborted = true;
            return;
        }
        if depth == self.order.len() {
            self.stats.leaves += 1;
            let e = self.rec.offer(&self.spins);
            if e < self.incumbent {
                self.incumbent = e;
                self.best.clone_from(&self.spins);
            }
            return;
        }
        let v = self.order[depth];
        let up = self.child_bound(v, 1.0);
        let down = self.child_bound(v, -1.0);
        // ties go against the local field
        let first: i8 = if up < down || (up == down && self.g[v] <= 0.0) { 1 } else { -1 };
        let tries = if self.symmetric && depth == 0 { 1 } else { 2 };
        for k in 0..tries {
            let s = if k == 0 { first } else { -first };
            let b = if s == 1 { up } else { down };
            if b >= self.incumbent - self.eps {
                continue;
            }
            if k == 1 {
                self.stats.backtracks += 1;
            }
            let saved = (self.partial, self.free_abs, self.free_pairs, self.undo.len());
            self.assign(v, s);
            self.dfs(depth + 1);
            while self.undo.len() > saved.3 {
                let (j, old) = self.undo.pop().expect("undo entry");
                self.g[j] = old;
            }
            self.spins[v] = 0;
            (self.partial, self.free_abs, self.free_pairs) = (saved.0, saved.1, saved.2);
            if self.aborted {
                return;
            }
        }
    }
}

fn run<'m>(model: &'m IsingModel, rec: &mut Recorder<'m>, hint: Option<&Spins>) -> (Certificate, BnbStats) {
    let mut search = Search::new(model, rec);
    if let Some(h) = hint {
        let e = search.rec.offer(h.as_slice());
        search.incumbent = e;
        search.best = h.as_slice().to_vec();
    }
    if search.bound() < search.incumbent - search.eps || search.best.is_empty() {
        search.dfs(0);
    }
    let mut configs = vec![Spins::from_vec_unchecked(search.best.clone())];
    if search.symmetric && !search.best.is_empty() {
        let flip = configs[0].flipped();
        if flip != configs[0] {
            configs.push(flip);
        }
    }
    let cert = Certificate {
        optimal_energy: search.incumbent,
        optimal_configs: configs,
        method: Method::BranchAndBound,
        proof_complete: !search.aborted,
    };
    (cert, search.stats)
}

/// Proves optimality within `time_limit` wall-clock seconds, or reports the incumbent.
pub fn branch_and_bound(model: &IsingModel, time_limit: f64) -> Result<Certificate> {
    branch_and_bound_from(model, time_limit, None).map(|(c, _)| c)
}

/// As [`branch_and_bound`], starting from a known configuration as incumbent.
pub fn branch_and_bound_from(
    model: &IsingModel,
    time_limit: f64,
    hint: Option<&Spins>,
) -> Result<(Certificate, BnbStats)> {
    let opts = SolveOptions::new(time_limit, 0).with_clock(ClockKind::Wall);
    opts.validate()?;
    if let Some(h) = hint {
        h.check_complete(model.node_count())?;
    }
    let mut rec = Recorder::new(model, &opts);
    Ok(run(model, &mut rec, hint))
}

/// Branch and bound as an anytime solver.
pub fn solve(model: &IsingModel, opts: &SolveOptions) -> Result<SolveTrajectory> {
    opts.validate()?;
    let mut rec = Recorder::new(model, opts);
    let (cert, stats) = run(model, &mut rec, None);
    let mut t = rec.finish("bnb", opts.seed, 0);
    let proof = if cert.proof_complete { "complete" } else { "incomplete" };
    t.metadata.insert("proof".into(), proof.into());
    t.metadata.insert("nodes".into(), stats.nodes.into());
    Ok(t)
}
