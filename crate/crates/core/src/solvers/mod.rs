//! Anytime heuristics and the trajectory they report.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chimera::ChimeraTopology;
use crate::error::{Error, Result};
use crate::exact;
use crate::ising::{IsingModel, Metadata, Spins};

pub mod glauber;
pub mod hfs;
pub mod min_sum;
pub mod scd;

/// How elapsed time is measured.
///
/// `Work` counts elementary solver operations and converts them to seconds
/// at a fixed rate, which makes time-limited runs bit-reproducible.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClockKind {
    #[default]
    Wall,
    Work { units_per_second: f64 },
}

impl ClockKind {
    pub const DEFAULT_WORK_RATE: f64 = 1e8;

    pub fn work() -> Self {
        ClockKind::Work {
            units_per_second: Self::DEFAULT_WORK_RATE,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClockKind::Wall => "wall",
            ClockKind::Work { .. } => "work",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Clock {
    kind: ClockKind,
    start: Instant,
    work: u64,
}

impl Clock {
    pub fn start(kind: ClockKind) -> Self {
        Clock {
            kind,
            start: Instant::now(),
            work: 0,
        }
    }

    #[inline]
    pub fn tick(&mut self, units: u64) {
        self.work = self.work.wrapping_add(units);
    }

    pub fn elapsed(&self) -> f64 {
        match self.kind {
            ClockKind::Wall => self.start.elapsed().as_secs_f64(),
            ClockKind::Work { units_per_second } => self.work as f64 / units_per_second,
        }
    }
}

/// Settings shared by every solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub time_limit: f64,
    pub seed: u64,
    pub clock: ClockKind,
    /// Stop as soon as a configuration at or below this energy is found.
    pub target_energy: Option<f64>,
    /// Min-Sum iterations per round before decoding.
    pub max_iters_per_round: usize,
}

impl SolveOptions {
    pub fn new(time_limit: f64, seed: u64) -> Self {
        SolveOptions {
            time_limit,
            seed,
            clock: ClockKind::Wall,
            target_energy: None,
            max_iters_per_round: min_sum::DEFAULT_MAX_ITERS,
        }
    }

    pub fn with_clock(mut self, clock: ClockKind) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_target(mut self, target: Option<f64>) -> Self {
        self.target_energy = target;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.time_limit > 0.0) || !self.time_limit.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time limit must be positive, got {}",
                self.time_limit
            )));
        }
        if let ClockKind::Work { units_per_second } = self.clock {
            if !(units_per_second > 0.0) {
                return Err(Error::InvalidArgument("work clock rate must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One strictly improving solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Improvement {
    pub elapsed: f64,
    pub energy: f64,
    pub config: Spins,
}

/// Improving solutions of one run, in discovery order.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveTrajectory {
    pub solver: String,
    pub seed: u64,
    pub time_limit: f64,
    pub improvements: Vec<Improvement>,
    pub total_restarts: u64,
    pub metadata: Metadata,
}

impl SolveTrajectory {
    pub fn best(&self) -> Option<&Improvement> {
        self.improvements.last()
    }

    /// Best solution found no later than `t`.
    pub fn best_at(&self, t: f64) -> Option<&Improvement> {
        let upto = self.improvements.partition_point(|imp| imp.elapsed <= t);
        upto.checked_sub(1).map(|k| &self.improvements[k])
    }

    /// Checks the documented invariants against `model`.
    pub fn validate(&self, model: &IsingModel) -> Result<()> {
        for w in self.improvements.windows(2) {
            if !(w[1].energy < w[0].energy) {
                return Err(Error::Contract(format!(
                    "{}: energies do not strictly decrease ({} then {})",
                    self.solver, w[0].energy, w[1].energy
                )));
            }
            if w[1].elapsed < w[0].elapsed {
                return Err(Error::Contract(format!("{}: time went backwards", self.solver)));
            }
        }
        for imp in &self.improvements {
            let e = model.energy(&imp.config)?;
            if e != imp.energy {
                return Err(Error::Contract(format!(
                    "{}: recorded energy {} recomputes to {}",
                    self.solver, imp.energy, e
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = TrajectoryFile {
            solver: self.solver.clone(),
            seed: self.seed,
            time_limit: self.time_limit,
            total_restarts: self.total_restarts,
            improvements: self
                .improvements
                .iter()
                .map(|imp| ImprovementRecord {
                    t: imp.elapsed,
                    energy: imp.energy,
                    config: encode_run_length(&imp.config),
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text)?;
        let improvements = file
            .improvements
            .into_iter()
            .map(|r| {
                Ok(Improvement {
                    elapsed: r.t,
                    energy: r.energy,
                    config: decode_run_length(&r.config)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(SolveTrajectory {
            solver: file.solver,
            seed: file.seed,
            time_limit: file.time_limit,
            improvements,
            total_restarts: file.total_restarts,
            metadata: file.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct ImprovementRecord {
    t: f64,
    energy: f64,
    config: String,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    solver: String,
    seed: u64,
    time_limit: f64,
    #[serde(default)]
    total_restarts: u64,
    improvements: Vec<ImprovementRecord>,
    #[serde(default, skip_serializing_if = "Metadata::is_empty")]
    metadata: Metadata,
}

/// `+3-2+1` for `(+1,+1,+1,-1,-1,+1)`.
pub fn encode_run_length(config: &Spins) -> String {
    let mut out = String::new();
    let s = config.as_slice();
    let mut start = 0;
    while start < s.len() {
        let end = start + s[start..].iter().take_while(|&&v| v == s[start]).count();
        out.push(match s[start] {
            1 => '+',
            -1 => '-',
            _ => '0',
        });
        out.push_str(&(end - start).to_string());
        start = end;
    }
    out
}

pub fn decode_run_length(text: &str) -> Result<Spins> {
    let bad = || Error::InvalidInstance(format!("malformed run-length config `{text}`"));
    let mut values = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        let spin = match c {
            '+' => 1,
            '-' => -1,
            _ => return Err(bad()),
        };
        let digits_start = pos + 1;
        let mut digits_end = digits_start;
        while let Some(&(p, d)) = chars.peek() {
            if !d.is_ascii_digit() {
                break;
            }
            digits_end = p + 1;
            chars.next();
        }
        let run: usize = text[digits_start..digits_end].parse().map_err(|_| bad())?;
        values.extend(std::iter::repeat_n(spin, run));
    }
    Spins::new(values)
}

/// Collects improvements for one run, timestamping each one on arrival.
pub(crate) struct Recorder<'a> {
    model: &'a IsingModel,
    pub clock: Clock,
    time_limit: f64,
    target: Option<f64>,
    best: f64,
    reached_target: bool,
    improvements: Vec<Improvement>,
}

impl<'a> Recorder<'a> {
    pub fn new(model: &'a IsingModel, opts: &SolveOptions) -> Self {
        Recorder {
            model,
            clock: Clock::start(opts.clock),
            time_limit: opts.time_limit,
            target: opts.target_energy,
            best: f64::INFINITY,
            reached_target: false,
            improvements: Vec::new(),
        }
    }

    #[inline]
    pub fn tick(&mut self, units: u64) {
        self.clock.tick(units);
    }

    /// True once the budget is spent or the target energy was reached.
    #[inline]
    pub fn done(&self) -> bool {
        self.reached_target || self.clock.elapsed() >= self.time_limit
    }

    /// Offers a complete configuration; returns its exact energy.
    ///
    /// Solutions arriving after the budget are dropped unless nothing was
    /// recorded yet.
    pub fn offer(&mut self, spins: &[i8]) -> f64 {
        self.clock.tick(self.model.edges().len() as u64 + spins.len() as u64);
        let energy = self.model.energy_of(spins);
        if energy < self.best {
            let elapsed = self.clock.elapsed();
            if elapsed <= self.time_limit || self.improvements.is_empty() {
                self.best = energy;
                self.improvements.push(Improvement {
                    elapsed,
                    energy,
                    config: Spins::from_vec_unchecked(spins.to_vec()),
                });
                if let Some(t) = self.target {
                    if energy <= t + 1e-9 * t.abs().max(1.0) {
                        self.reached_target = true;
                    }
                }
            }
        }
        energy
    }

    pub fn finish(self, solver: &str, seed: u64, total_restarts: u64) -> SolveTrajectory {
        SolveTrajectory {
            solver: solver.to_string(),
            seed,
            time_limit: self.time_limit,
            improvements: self.improvements,
            total_restarts,
            metadata: Metadata::new(),
        }
    }
}

/// Every solver reachable by name from the CLI and the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Scd,
    Glauber,
    MinSum,
    Hfs,
    BranchAndBound,
    BruteForce,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Scd,
        SolverKind::Glauber,
        SolverKind::MinSum,
        SolverKind::Hfs,
        SolverKind::BranchAndBound,
        SolverKind::BruteForce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Scd => "scd",
            SolverKind::Glauber => "gd",
            SolverKind::MinSum => "ms",
            SolverKind::Hfs => "hfs",
            SolverKind::BranchAndBound => "bnb",
            SolverKind::BruteForce => "brute",
        }
    }

    pub fn registered() -> String {
        Self::ALL.map(Self::name).join(", ")
    }

    pub fn needs_topology(self) -> bool {
        self == SolverKind::Hfs
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownSolver {
                name: s.to_string(),
                registered: Self::registered(),
            })
    }
}

/// Runs `kind` on `model`; `topology` is required for HFS only.
pub fn run_solver(
    kind: SolverKind,
    model: &IsingModel,
    topology: Option<&ChimeraTopology>,
    opts: &SolveOptions,
) -> Result<SolveTrajectory> {
    match kind {
        SolverKind::Scd => scd::solve(model, opts),
        SolverKind::Glauber => glauber::solve(model, opts),
        SolverKind::MinSum => min_sum::solve(model, opts),
        SolverKind::Hfs => {
            let topology = topology.ok_or_else(|| {
                Error::InvalidArgument("hfs needs the Chimera topology of the instance".into())
            })?;
            hfs::solve(model, topology, opts)
        }
        SolverKind::BranchAndBound => exact::bnb::solve(model, opts),
        SolverKind::BruteForce => exact::brute::solve(model, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_length_round_trip() {
        let s = Spins::new(vec![1, 1, 1, -1, -1, 1]).unwrap();
        assert_eq!(encode_run_length(&s), "+3-2+1");
        assert_eq!(decode_run_length("+3-2+1").unwrap(), s);
        assert_eq!(decode_run_length("").unwrap(), Spins::new(vec![]).unwrap());
        assert!(decode_run_length("+x").is_err());
        assert!(decode_run_length("3").is_err());
    }

    #[test]
    fn solver_names() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        let err = "sa".parse::<SolverKind>().unwrap_err();
        assert!(err.to_string().contains("scd, gd, ms, hfs, bnb, brute"));
    }

    #[test]
    fn best_at_reads_prefix() {
        let imp = |t: f64, e: f64| Improvement {
            elapsed: t,
            energy: e,
            config: Spins::uniform(1, 1),
        };
        let traj = SolveTrajectory {
            solver: "x".into(),
            seed: 0,
            time_limit: 1.0,
            improvements: vec![imp(0.1, 3.0), imp(0.5, 1.0)],
            total_restarts: 0,
            metadata: Metadata::new(),
        };
        assert!(traj.best_at(0.05).is_none());
        assert_eq!(traj.best_at(0.1).unwrap().energy, 3.0);
        assert_eq!(traj.best_at(0.7).unwrap().energy, 1.0);
    }

    #[test]
    fn options_reject_nonpositive_limits() {
        assert!(SolveOptions::new(0.0, 1).validate().is_err());
        assert!(SolveOptions::new(-1.0, 1).validate().is_err());
        assert!(SolveOptions::new(f64::NAN, 1).validate().is_err());
        assert!(SolveOptions::new(0.5, 1).validate().is_ok());
    }

    #[test]
    fn work_clock_is_deterministic() {
        let mut c = Clock::start(ClockKind::Work { units_per_second: 100.0 });
        c.tick(50);
        assert_eq!(c.elapsed(), 0.5);
    }
}
