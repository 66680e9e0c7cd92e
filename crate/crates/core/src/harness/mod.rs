//! Benchmark protocol: generate instances, run every solver once at the
//! largest budget, read each trajectory off at the ladder points, and
//! average optimality gap and distance to the nearest optimum.
//!
//! The gap is `(E − E_ref) / |E_ref|`, or `E − E_ref` when `|E_ref| < 1e-9`.
//! The distance is the minimum Hamming distance to any known optimum,
//! divided by `N`.

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exact;
use crate::generators::{generate, GroundTruth};
use crate::ising::{hamming_distance, IsingModel, Spins};
use crate::rng::mix_seed;
use crate::solvers::{run_solver, SolveOptions, SolveTrajectory};

pub mod plan;
pub mod reads;
pub mod report;

pub use plan::{ExperimentPlan, ReferencePolicy, ResolvedPlan, SolverSpec};
pub use reads::{qa_read_protocol, shots_from_trajectories, Shot};
pub use report::{read_report_csv, write_raw_csv, write_report_csv, BenchmarkReport, RawRow, ReportRow};

const REF_GUARD: f64 = 1e-9;

pub fn optimality_gap(energy: f64, reference: f64) -> f64 {
    if reference.abs() < REF_GUARD {
        energy - reference
    } else {
        (energy - reference) / reference.abs()
    }
}

fn energy_tol(reference: f64) -> f64 {
    1e-9 * reference.abs().max(1.0)
}

/// Minimum Hamming distance from `config` to any of `optima`, divided by `N`.
pub fn normalized_hamming(config: &Spins, optima: &[Spins]) -> Result<f64> {
    let n = config.len().max(1) as f64;
    let mut best = usize::MAX;
    for o in optima {
        best = best.min(hamming_distance(config, o)?);
    }
    if best == usize::MAX {
        return Err(Error::Contract("no reference optima".into()));
    }
    Ok(best as f64 / n)
}

/// Reference optimum of one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub energy: f64,
    pub optima: Vec<Spins>,
    pub kind: &'static str,
    /// True when no configuration can beat `energy`.
    pub proven: bool,
}

#[derive(Clone, Debug)]
pub struct PreparedInstance {
    pub index: usize,
    pub seed: u64,
    pub model: IsingModel,
    pub truth: GroundTruth,
    pub reference: Option<Reference>,
    pub warning: Option<String>,
}

fn planted_reference(model: &IsingModel, truth: &GroundTruth) -> Result<Reference> {
    Ok(Reference {
        energy: model.energy(&truth.planted())?,
        optima: truth.planted_optima(),
        kind: "planted",
        proven: false,
    })
}

fn prepare(plan: &ResolvedPlan, index: usize, seed: u64) -> Result<PreparedInstance> {
    let p = &plan.plan;
    let (model, mut truth) = generate(&plan.topology, &plan.family, p.random_gauge, seed)?;
    let mut warning = None;
    let reference = match p.reference {
        ReferencePolicy::BestFound => None,
        ReferencePolicy::Planted => Some(planted_reference(&model, &truth)?),
        ReferencePolicy::Certified | ReferencePolicy::Auto => {
            let cert = exact::certify_model(&model, p.certify_time_limit, Some(&truth.planted()))?;
            if cert.proof_complete {
                truth.attach_certificate(&model, &cert)?;
                Some(Reference {
                    energy: cert.optimal_energy,
                    optima: cert.optimal_configs,
                    kind: "certified",
                    proven: true,
                })
            } else if p.reference == ReferencePolicy::Certified {
                return Err(Error::InvalidArgument(format!(
                    "instance {index} (seed {seed}) could not be certified within {} s",
                    p.certify_time_limit
                )));
            } else {
                warning = Some(format!(
                    "instance {index} (seed {seed}): proof unfinished after {} s, using the planted reference",
                    p.certify_time_limit
                ));
                Some(planted_reference(&model, &truth)?)
            }
        }
    };
    Ok(PreparedInstance {
        index,
        seed,
        model,
        truth,
        reference,
        warning,
    })
}

fn push_unique(set: &mut Vec<Spins>, config: &Spins) {
    if !set.contains(config) {
        set.push(config.clone());
    }
}

/// Runs `plan`; `threads` overrides the plan's worker count.
pub fn run_experiment(plan: &ExperimentPlan, threads: Option<usize>) -> Result<BenchmarkReport> {
    let resolved = plan.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.or(plan.threads).unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(&resolved))
}

fn execute(plan: &ResolvedPlan) -> Result<BenchmarkReport> {
    let p = &plan.plan;
    let mut instances: Vec<PreparedInstance> = plan
        .seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| prepare(plan, k, seed))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..plan.solvers.len()).map(move |s| (i, s)))
        .collect();
    let budget = p.max_budget();
    let runs: Vec<SolveTrajectory> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let inst = &instances[i];
            let (kind, spec) = &plan.solvers[s];
            let mut opts = SolveOptions::new(budget, mix_seed(inst.seed, s as u64 + 1))
                .with_clock(p.clock)
                .with_target(inst.reference.as_ref().filter(|r| r.proven).map(|r| r.energy));
            if let Some(m) = spec.max_iters_per_round {
                opts.max_iters_per_round = m;
            }
            run_solver(*kind, &inst.model, Some(&plan.topology), &opts)
        })
        .collect::<Result<_>>()?;
    let run_of = |i: usize, s: usize| &runs[i * plan.solvers.len() + s];

    for inst in &mut instances {
        let i = inst.index;
        let finals = (0..plan.solvers.len()).filter_map(|s| run_of(i, s).best());
        match &mut inst.reference {
            None => {
                let mut best: Option<Reference> = None;
                for b in finals {
                    match &mut best {
                        Some(r) if b.energy > r.energy => {}
                        Some(r) if b.energy == r.energy => push_unique(&mut r.optima, &b.config),
                        _ => {
                            best = Some(Reference {
                                energy: b.energy,
                                optima: vec![b.config.clone()],
                                kind: "best_found",
                                proven: false,
                            })
                        }
                    }
                }
                inst.reference = best;
            }
            Some(r) if r.proven => {
                // any configuration at the proven optimum is itself an optimum
                let tol = energy_tol(r.energy);
                for b in finals {
                    if b.energy <= r.energy + tol {
                        push_unique(&mut r.optima, &b.config);
                    }
                }
            }
            Some(_) => {}
        }
    }

    let mut raw = Vec::with_capacity(jobs.len() * p.time_ladder.len());
    for (s, (_, spec)) in plan.solvers.iter().enumerate() {
        for &t in &p.time_ladder {
            for inst in &instances {
                let traj = run_of(inst.index, s);
                let point = traj.best_at(t);
                let mut row = RawRow {
                    family: plan.family.name.clone(),
                    instance: inst.index,
                    seed: inst.seed,
                    solver: spec.name.clone(),
                    time: t,
                    energy: point.map(|b| b.energy),
                    gap: None,
                    hamming: None,
                    optimal: false,
                };
                if let (Some(b), Some(r)) = (point, &inst.reference) {
                    let tol = energy_tol(r.energy);
                    if r.proven && b.energy < r.energy - tol {
                        return Err(Error::CertificateViolated {
                            instance: inst.index,
                            solver: spec.name.clone(),
                            found: b.energy,
                            certified: r.energy,
                        });
                    }
                    row.gap = Some(optimality_gap(b.energy, r.energy));
                    row.hamming = Some(normalized_hamming(&b.config, &r.optima)?);
                    row.optimal = b.energy <= r.energy + tol;
                }
                raw.push(row);
            }
        }
    }

    let mut report = BenchmarkReport {
        rows: BenchmarkReport::aggregate(&raw),
        raw,
        metadata: Default::default(),
    };
    let kinds: Vec<&str> = instances
        .iter()
        .map(|i| i.reference.as_ref().map_or("none", |r| r.kind))
        .collect();
    let warnings: Vec<&String> = instances.iter().filter_map(|i| i.warning.as_ref()).collect();
    let m = &mut report.metadata;
    m.insert("family".into(), json!(plan.family.name));
    m.insert("reference_policy".into(), json!(p.reference.name()));
    m.insert("instance_references".into(), json!(kinds));
    m.insert(
        "gap".into(),
        json!("(E - E_ref) / |E_ref|, absolute when |E_ref| < 1e-9"),
    );
    m.insert("hamming".into(), json!("min over known optima of distance / N"));
    m.insert("time_ladder".into(), json!(p.time_ladder));
    m.insert("clock".into(), json!(p.clock));
    m.insert("seeds".into(), json!(plan.seeds));
    m.insert("warnings".into(), json!(warnings));
    Ok(report)
}
