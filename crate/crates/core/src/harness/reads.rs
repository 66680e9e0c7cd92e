//! Best-of-k curves for solvers that return independent single shots.

use serde_json::json;

use crate::error::{Error, Result};
use crate::ising::{Metadata, Spins};
use crate::solvers::{Improvement, SolveTrajectory};

/// One independent read.
#[derive(Clone, Debug, PartialEq)]
pub struct Shot {
    pub energy: f64,
    pub config: Spins,
}

/// Final solution of each single-shot trajectory.
pub fn shots_from_trajectories(trajectories: &[SolveTrajectory]) -> Result<Vec<Shot>> {
    trajectories
        .iter()
        .enumerate()
        .map(|(k, t)| {
            t.best()
                .map(|b| Shot {
                    energy: b.energy,
                    config: b.config.clone(),
                })
                .ok_or_else(|| Error::InvalidArgument(format!("trajectory {k} holds no solution")))
        })
        .collect()
}

/// Best of the first `k` shots for every `k` in `reads_schedule`, stamped at
/// `k · per_read_time`. Gauge re-randomisation boundaries every
/// `gauge_period` reads are listed in the metadata.
pub fn qa_read_protocol(
    shots: &[Shot],
    reads_schedule: &[usize],
    per_read_time: f64,
    gauge_period: usize,
) -> Result<SolveTrajectory> {
    if shots.is_empty() {
        return Err(Error::InvalidArgument("no shots to aggregate".into()));
    }
    if reads_schedule.is_empty() || reads_schedule[0] == 0 || reads_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "reads schedule must be a non-empty, strictly increasing list of positive counts".into(),
        ));
    }
    let max_k = *reads_schedule.last().expect("non-empty");
    if max_k > shots.len() {
        return Err(Error::InvalidArgument(format!(
            "schedule asks for {max_k} reads but only {} shots are available",
            shots.len()
        )));
    }
    if !(per_read_time.is_finite() && per_read_time > 0.0) || gauge_period == 0 {
        return Err(Error::InvalidArgument(
            "per-read time and gauge period must be positive".into(),
        ));
    }

    let mut improvements: Vec<Improvement> = Vec::new();
    let mut curve = Vec::with_capacity(reads_schedule.len());
    let mut best: Option<&Shot> = None;
    let mut taken = 0;
    for &k in reads_schedule {
        for shot in &shots[taken..k] {
            if best.is_none_or(|b| shot.energy < b.energy) {
                best = Some(shot);
            }
        }
        taken = k;
        let b = best.expect("at least one shot taken");
        curve.push(b.energy);
        if improvements.last().is_none_or(|last| b.energy < last.energy) {
            improvements.push(Improvement {
                elapsed: k as f64 * per_read_time,
                energy: b.energy,
                config: b.config.clone(),
            });
        }
    }

    let boundaries: Vec<usize> = (1..).map(|m| m * gauge_period).take_while(|&b| b < max_k).collect();
    let mut metadata = Metadata::new();
    metadata.insert("reads_schedule".into(), json!(reads_schedule));
    metadata.insert("best_of_k".into(), json!(curve));
    metadata.insert("per_read_time".into(), json!(per_read_time));
    metadata.insert("gauge_period".into(), json!(gauge_period));
    metadata.insert("gauge_boundaries".into(), json!(boundaries));
    Ok(SolveTrajectory {
        solver: "reads".into(),
        seed: 0,
        time_limit: max_k as f64 * per_read_time,
        improvements,
        total_restarts: max_k as u64 - 1,
        metadata,
    })
}
