//! Tiny-N stand-in for quantum annealing.
//!
//! Replacing each spin by the Pauli `Z` operator turns the energy into a
//! diagonal matrix over the `2^N` basis states, so its ground state is the
//! classical optimum. Basis state `mask` has `σ_i = +1` when bit `i` is 0.
//!
//! [`anneal`] integrates the Schrödinger equation for
//!
//! ```text
//! H(Γ) = (1 − Γ) · (−Σ_i X_i) + Γ · diag(E),   Γ = t / T
//! ```
//!
//! from the uniform superposition, using a symmetric split step per time
//! step: half a diagonal phase, an exact `X` rotation on every qubit, half a
//! diagonal phase, all evaluated at the step midpoint.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ising::{Gauge, IsingModel, Metadata, Spins};
use crate::solvers::{Improvement, SolveTrajectory};

pub const LIFT_CAP: usize = 20;
pub const ANNEAL_CAP: usize = 10;
pub const MIN_STEPS: usize = 10;

/// Diagonal of the lifted energy matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalLift {
    pub node_count: usize,
    pub energies: Vec<f64>,
}

impl DiagonalLift {
    pub fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Basis states within `tol` of the minimum.
    pub fn optima(&self, tol: f64) -> Vec<usize> {
        let min = self.min_energy();
        (0..self.energies.len()).filter(|&m| self.energies[m] <= min + tol).collect()
    }
}

pub fn lift(model: &IsingModel) -> Result<DiagonalLift> {
    let n = model.node_count();
    if n > LIFT_CAP {
        return Err(Error::TooLarge {
            method: "diagonal lift",
            size: n,
            cap: LIFT_CAP,
        });
    }
    let energies = (0..1u64 << n)
        .map(|m| model.energy_of(Spins::from_mask(m, n).as_slice()))
        .collect();
    Ok(DiagonalLift { node_count: n, energies })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnealResult {
    pub schedule_points: usize,
    pub anneal_time: f64,
    pub ground_state_probability: f64,
    pub final_distribution: Vec<f64>,
    /// Largest deviation of the state norm from 1 seen during the evolution.
    pub max_norm_error: f64,
}

impl AnnealResult {
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Draws basis states from the final distribution.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<usize> {
        let mut cumulative = Vec::with_capacity(self.final_distribution.len());
        let mut acc = 0.0;
        for p in &self.final_distribution {
            acc += p;
            cumulative.push(acc);
        }
        (0..count)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
            })
            .collect()
    }
}

fn optimum_tolerance(model: &IsingModel) -> f64 {
    1e-9 * (1.0 + model.scale())
}

pub fn anneal(model: &IsingModel, anneal_time: f64, steps: usize) -> Result<AnnealResult> {
    let n = model.node_count();
    if n > ANNEAL_CAP {
        return Err(Error::TooLarge {
            method: "annealing simulation",
            size: n,
            cap: ANNEAL_CAP,
        });
    }
    if steps < MIN_STEPS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_STEPS} schedule steps are required, got {steps}"
        )));
    }
    if !anneal_time.is_finite() || anneal_time < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "anneal time must be finite and non-negative, got {anneal_time}"
        )));
    }
    let lifted = lift(model)?;
    let dim = 1usize << n;
    let amp = 1.0 / (dim as f64).sqrt();
    let mut psi = vec![Complex64::new(amp, 0.0); dim];
    let dt = anneal_time / steps as f64;
    let mut max_norm_error = 0.0f64;
    for step in 0..steps {
        let gamma = (step as f64 + 0.5) / steps as f64;
        let half = 0.5 * dt * gamma;
        apply_diagonal(&mut psi, &lifted.energies, half);
        let a = dt * (1.0 - gamma);
        let (c, s) = (a.cos(), a.sin());
        for q in 0..n {
            let bit = 1usize << q;
            for m in 0..dim {
                if m & bit == 0 {
                    let (x, y) = (psi[m], psi[m | bit]);
                    psi[m] = x * c + Complex64::new(0.0, s) * y;
                    psi[m | bit] = Complex64::new(0.0, s) * x + y * c;
                }
            }
        }
        apply_diagonal(&mut psi, &lifted.energies, half);
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        max_norm_error = max_norm_error.max((norm - 1.0).abs());
    }
    let final_distribution: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let ground_state_probability = lifted
        .optima(optimum_tolerance(model))
        .into_iter()
        .map(|m| final_distribution[m])
        .sum();
    Ok(AnnealResult {
        schedule_points: steps,
        anneal_time,
        ground_state_probability,
        final_distribution,
        max_norm_error,
    })
}

fn apply_diagonal(psi: &mut [Complex64], energies: &[f64], scale: f64) {
    for (z, &e) in psi.iter_mut().zip(energies) {
        *z *= Complex64::from_polar(1.0, -scale * e);
    }
}

/// Settings for [`solve`]: the simulator stand-in for a reads-based annealer.
#[derive(Clone, Debug, PartialEq)]
pub struct QaSimOptions {
    pub num_reads: usize,
    /// Dimensionless anneal time; also the per-read time in microseconds.
    pub anneal_time: f64,
    pub steps: usize,
    /// Reads between gauge re-randomisations.
    pub gauge_period: usize,
    pub seed: u64,
}

impl QaSimOptions {
    pub fn per_read_seconds(&self) -> f64 {
        self.anneal_time * 1e-6
    }
}

/// Samples `num_reads` anneals, drawing a fresh random gauge every
/// `gauge_period` reads. Read `k` (1-based) is stamped at `k` per-read times.
pub fn solve(model: &IsingModel, opts: &QaSimOptions) -> Result<SolveTrajectory> {
    if opts.num_reads == 0 || opts.gauge_period == 0 {
        return Err(Error::InvalidArgument(
            "read count and gauge period must be positive".into(),
        ));
    }
    let n = model.node_count();
    let per_read = opts.per_read_seconds();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut improvements: Vec<Improvement> = Vec::new();
    let mut done = 0;
    while done < opts.num_reads {
        let gauge = Gauge::new((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())?;
        let gauged = model.gauge_transform(&gauge)?;
        let result = anneal(&gauged, opts.anneal_time, opts.steps)?;
        let batch = opts.gauge_period.min(opts.num_reads - done);
        let flip = gauge.flip_mask();
        for mask in result.sample(&mut rng, batch) {
            done += 1;
            let config = Spins::from_mask(mask as u64 ^ flip, n);
            let energy = model.energy_of(config.as_slice());
            if improvements.last().is_none_or(|best| energy < best.energy) {
                improvements.push(Improvement {
                    elapsed: done as f64 * per_read,
                    energy,
                    config,
                });
            }
        }
    }
    let mut metadata = Metadata::new();
    metadata.insert("num_reads".into(), opts.num_reads.into());
    metadata.insert("anneal_time".into(), opts.anneal_time.into());
    metadata.insert("steps".into(), opts.steps.into());
    metadata.insert("gauge_period".into(), opts.gauge_period.into());
    Ok(SolveTrajectory {
        solver: "qa-sim".into(),
        seed: opts.seed,
        time_limit: per_read * opts.num_reads as f64,
        improvements,
        total_restarts: opts.num_reads as u64 - 1,
        metadata,
    })
}
