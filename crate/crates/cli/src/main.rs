use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use ising_bench::chimera::{ChimeraTopology, Omissions};
use ising_bench::error::Error;
use ising_bench::exact::{self, lp::LpForm};
use ising_bench::format::{load_ising, Instance};
use ising_bench::generators::{self, family, sidecar_path, CouplingDistribution, Family, FieldDistribution, GroundTruth};
use ising_bench::harness::{run_experiment, write_raw_csv, write_report_csv, ExperimentPlan};
use ising_bench::qa::{self, QaSimOptions};
use ising_bench::solvers::{run_solver, ClockKind, SolveOptions, SolveTrajectory, SolverKind};

const TOPOLOGY_ENV: &str = "ISINGBENCH_TOPOLOGY";

/// Flags spelled with a single dash, as in the original generator and solver scripts.
const SINGLE_DASH_LONG: [&str; 14] = [
    "rgt", "j1-val", "j1-pr", "j2-val", "j2-pr", "h1-val", "h1-pr", "h2-val", "h2-pr", "rtl", "ss", "nr", "at",
    "srtr",
];

#[derive(Parser, Debug)]
#[command(name = "ising-bench", version, about = "Planted-structure Ising benchmarks and solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a Chimera topology file.
    Topology(TopologyArgs),
    /// Draw a random instance and its ground-truth sidecar.
    Generate(GenerateArgs),
    /// Run one solver on an instance.
    Solve(SolveArgs),
    /// Prove the optimum of an instance and record it in the sidecar.
    Certify(CertifyArgs),
    /// Run an experiment plan and write the report CSV.
    Experiment(ExperimentArgs),
    /// Write an instance as an LP file.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct TopologyArgs {
    #[arg(long, default_value_t = 16)]
    rows: usize,
    #[arg(long, default_value_t = 16)]
    cols: usize,
    #[arg(long, default_value_t = 4)]
    cell_size: usize,
    /// Fraction of nodes to drop at random.
    #[arg(long, default_value_t = 0.0)]
    omit_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Preset family (bfm, fbfm, cbfm, bfm-u, fbfm-u, cbfm-u, ranf-1); omit to give every distribution flag.
    family: Option<String>,
    /// Apply a random gauge transformation.
    #[arg(long = "rgt")]
    random_gauge: bool,
    #[arg(long = "j1-val", allow_negative_numbers = true)]
    j1_val: Option<f64>,
    #[arg(long = "j1-pr")]
    j1_pr: Option<f64>,
    #[arg(long = "j2-val", allow_negative_numbers = true)]
    j2_val: Option<f64>,
    #[arg(long = "j2-pr")]
    j2_pr: Option<f64>,
    #[arg(long = "h1-val", allow_negative_numbers = true)]
    h1_val: Option<f64>,
    #[arg(long = "h1-pr")]
    h1_pr: Option<f64>,
    #[arg(long = "h2-val", allow_negative_numbers = true)]
    h2_val: Option<f64>,
    #[arg(long = "h2-pr")]
    h2_pr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Topology file; defaults to $ISINGBENCH_TOPOLOGY.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Certify the instance before writing the sidecar.
    #[arg(long)]
    certify: bool,
    #[arg(long, default_value_t = 60.0)]
    certify_time_limit: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// scd, gd, ms, hfs, bnb, brute or qa-sim.
    solver: String,
    /// Instance file.
    #[arg(short = 'f', long = "file")]
    file: PathBuf,
    /// Runtime limit in seconds.
    #[arg(long = "rtl", default_value_t = 10.0, allow_negative_numbers = true)]
    runtime_limit: f64,
    #[arg(short = 's', long = "seed", conflicts_with = "stochastic_seed")]
    seed: Option<u64>,
    /// Draw a fresh seed from system entropy; it is stamped into the outputs.
    #[arg(long = "ss")]
    stochastic_seed: bool,
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
    /// Measure time in counted work units instead of wall-clock seconds.
    #[arg(long)]
    work_clock: bool,
    #[arg(long)]
    max_iters_per_round: Option<usize>,
    /// Topology for hfs when the instance does not record one; defaults to $ISINGBENCH_TOPOLOGY.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// qa-sim: number of reads.
    #[arg(long = "nr", default_value_t = 100)]
    num_reads: usize,
    /// qa-sim: anneal time, also the per-read time in microseconds.
    #[arg(long = "at", default_value_t = 5.0)]
    anneal_time: f64,
    /// qa-sim: reads between gauge re-randomisations.
    #[arg(long = "srtr", default_value_t = 100)]
    gauge_period: usize,
    /// qa-sim: integration steps per anneal.
    #[arg(long, default_value_t = 200)]
    steps: usize,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(short = 'f', long = "file")]
    file: PathBuf,
    /// Limit for branch and bound when neither enumeration nor elimination applies.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    plan: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Per-instance rows.
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Reproducibility manifest; defaults to `<output>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// ilp or iqp.
    #[arg(long)]
    form: String,
    #[arg(short = 'f', long = "file")]
    file: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

/// Rewrites `-rtl` style flags as `--rtl` so clap can parse them.
fn normalize_args(args: impl IntoIterator<Item = OsString>) -> Vec<OsString> {
    args.into_iter()
        .map(|a| match a.to_str() {
            Some(s) if s.starts_with('-') && !s.starts_with("--") => {
                let (name, value) = match s[1..].split_once('=') {
                    Some((n, v)) => (n, Some(v)),
                    None => (&s[1..], None),
                };
                if SINGLE_DASH_LONG.contains(&name) {
                    match value {
                        Some(v) => OsString::from(format!("--{name}={v}")),
                        None => OsString::from(format!("--{name}")),
                    }
                } else {
                    a
                }
            }
            _ => a,
        })
        .collect()
}

enum Failure {
    Validation(String),
    Io(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            Error::CertificateViolated { .. } => Failure::Internal(e.to_string()),
            e if e.is_validation() => Failure::Validation(e.to_string()),
            e => Failure::Internal(e.to_string()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args_os())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Topology(a) => cmd_topology(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Export(a) => cmd_export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

fn cmd_topology(a: TopologyArgs) -> CmdResult {
    let mut topo = ChimeraTopology::build(a.rows, a.cols, a.cell_size, &Omissions::default())?;
    if a.omit_rate > 0.0 {
        topo = topo.with_random_omissions(a.omit_rate, a.seed)?;
    }
    topo.save(&a.output)?;
    println!(
        "topology, {} nodes, {} edges, path={}",
        topo.nodes().len(),
        topo.edges().len(),
        a.output.display()
    );
    Ok(())
}

fn topology_path(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(TOPOLOGY_ENV).map(PathBuf::from))
}

fn pair(flag: &str, value: Option<f64>, pr: Option<f64>, preset: Option<(f64, f64)>) -> Result<Option<(f64, f64)>, Failure> {
    match (value.or(preset.map(|p| p.0)), pr.or(preset.map(|p| p.1))) {
        (Some(v), Some(p)) => Ok(Some((v, p))),
        (None, None) => Ok(None),
        (Some(_), None) => Err(invalid(format!("-{flag}-val given without -{flag}-pr"))),
        (None, Some(_)) => Err(invalid(format!("-{flag}-pr given without -{flag}-val"))),
    }
}

fn check_sum(a: &str, b: &str, first: Option<(f64, f64)>, second: Option<(f64, f64)>) -> CmdResult {
    let (p1, p2) = (first.map_or(0.0, |x| x.1), second.map_or(0.0, |x| x.1));
    if p1 + p2 > 1.0 + 1e-12 {
        return Err(invalid(format!(
            "probabilities -{a}-pr {p1} and -{b}-pr {p2} sum to {} > 1",
            p1 + p2
        )));
    }
    Ok(())
}

fn build_family(a: &GenerateArgs) -> Result<Family, Failure> {
    let preset = a.family.as_deref().map(family).transpose()?;
    let nth = |entries: Option<&[(f64, f64)]>, k: usize| entries.and_then(|e| e.get(k).copied());
    let pc = preset.as_ref().map(|f| f.couplings.entries());
    let ph = preset.as_ref().map(|f| f.fields.entries());
    let j1 = pair("j1", a.j1_val, a.j1_pr, nth(pc, 0))?;
    let j2 = pair("j2", a.j2_val, a.j2_pr, nth(pc, 1))?;
    let h1 = pair("h1", a.h1_val, a.h1_pr, nth(ph, 0))?;
    let h2 = pair("h2", a.h2_val, a.h2_pr, nth(ph, 1))?;
    check_sum("j1", "j2", j1, j2)?;
    check_sum("h1", "h2", h1, h2)?;
    if j1.is_none() {
        return Err(invalid("no coupling distribution: name a family or pass -j1-val and -j1-pr"));
    }
    let couplings: Vec<(f64, f64)> = [j1, j2].into_iter().flatten().collect();
    let fields: Vec<(f64, f64)> = [h1, h2].into_iter().flatten().collect();
    let name = preset.map_or_else(|| "custom".to_string(), |f| f.name);
    Ok(Family::custom(
        name,
        CouplingDistribution::new(couplings)?,
        FieldDistribution::new(fields)?,
    ))
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let fam = build_family(&a)?;
    let path = topology_path(a.topology.clone())
        .ok_or_else(|| invalid(format!("no topology: pass --topology or set {TOPOLOGY_ENV}")))?;
    let topo = ChimeraTopology::load(&path)?;
    let (model, mut truth) = generators::generate(&topo, &fam, a.random_gauge, a.seed)?;
    let mut note = String::new();
    if a.certify {
        let cert = generators::certify(&model, &mut truth, a.certify_time_limit)?;
        note = format!(
            ", certified={}, method={}",
            cert.proof_complete,
            cert.method.name()
        );
    }
    Instance::spin(model.clone()).save(&a.output)?;
    let sidecar = sidecar_path(&a.output);
    truth.save(&sidecar)?;
    println!(
        "generate, {}, {} nodes, {} edges, seed={}{note}, path={}, truth={}",
        fam.name,
        model.node_count(),
        model.edges().len(),
        a.seed,
        a.output.display(),
        sidecar.display()
    );
    Ok(())
}

fn hfs_topology(model: &ising_bench::IsingModel, flag: Option<PathBuf>) -> Result<ChimeraTopology, Failure> {
    if let Some(value) = model.metadata().get("topology") {
        return Ok(ChimeraTopology::from_json_value(value)?);
    }
    let path = topology_path(flag).ok_or_else(|| {
        invalid(format!(
            "hfs needs a topology: the instance records none; pass --topology or set {TOPOLOGY_ENV}"
        ))
    })?;
    Ok(ChimeraTopology::load(path)?)
}

fn default_trajectory_path(instance: &Path, solver: &str) -> PathBuf {
    let stem = instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    instance.with_file_name(format!("{stem}.{solver}.trajectory.json"))
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let name = a.solver.to_ascii_lowercase();
    let kind = if name == "qa-sim" {
        None
    } else {
        Some(name.parse::<SolverKind>().map_err(|_| {
            invalid(format!(
                "unknown solver `{}` (registered: {}, qa-sim)",
                a.solver,
                SolverKind::registered()
            ))
        })?)
    };
    if !(a.runtime_limit.is_finite() && a.runtime_limit > 0.0) {
        return Err(invalid(format!("runtime limit must be positive, got {}", a.runtime_limit)));
    }
    let seed = if a.stochastic_seed {
        rand::random::<u64>()
    } else {
        a.seed.unwrap_or(0)
    };
    let instance = Instance::load(&a.file)?;
    let (model, offset) = instance.into_ising();

    let start = Instant::now();
    let traj: SolveTrajectory = match kind {
        None => qa::solve(
            &model,
            &QaSimOptions {
                num_reads: a.num_reads,
                anneal_time: a.anneal_time,
                steps: a.steps,
                gauge_period: a.gauge_period,
                seed,
            },
        )?,
        Some(kind) => {
            let topo = match kind {
                SolverKind::Hfs => Some(hfs_topology(&model, a.topology.clone())?),
                _ => None,
            };
            let mut opts = SolveOptions::new(a.runtime_limit, seed);
            if a.work_clock {
                opts = opts.with_clock(ClockKind::work());
            }
            if let Some(m) = a.max_iters_per_round {
                if m == 0 {
                    return Err(invalid("--max-iters-per-round must be positive"));
                }
                opts.max_iters_per_round = m;
            }
            run_solver(kind, &model, topo.as_ref(), &opts)?
        }
    };
    let wall = start.elapsed().as_secs_f64();

    let out = a
        .trajectory_out
        .clone()
        .unwrap_or_else(|| default_trajectory_path(&a.file, &traj.solver));
    traj.save(&out)?;

    let mut line = match traj.best() {
        Some(b) => format!("{}, {}, {}", traj.solver, b.energy + offset, wall),
        None => format!("{}, none, {}", traj.solver, wall),
    };
    if let Some(b) = traj.best() {
        line.push_str(&format!(", best_at={}", b.elapsed));
    }
    line.push_str(&format!(", restarts={}, seed={seed}", traj.total_restarts));
    if let Some(proof) = traj.metadata.get("proof").and_then(|p| p.as_str()) {
        line.push_str(&format!(", proof={proof}"));
    }
    if offset != 0.0 {
        line.push_str(&format!(", offset={offset}"));
    }
    println!("{line}");
    Ok(())
}

fn cmd_certify(a: CertifyArgs) -> CmdResult {
    let model = load_ising(&a.file)?;
    let sidecar = sidecar_path(&a.file);
    let start = Instant::now();
    let (cert, line_tail) = if sidecar.exists() {
        let mut truth = GroundTruth::load(&sidecar)?;
        let cert = generators::certify(&model, &mut truth, a.time_limit)?;
        truth.save(&sidecar)?;
        (cert, format!(", truth={}", sidecar.display()))
    } else {
        (exact::certify_model(&model, a.time_limit, None)?, String::new())
    };
    println!(
        "{}, {}, {}, proof={}, optima={}{line_tail}",
        cert.method.name(),
        cert.optimal_energy,
        start.elapsed().as_secs_f64(),
        if cert.proof_complete { "complete" } else { "incomplete" },
        cert.optimal_configs.len()
    );
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_experiment(a: ExperimentArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.plan).map_err(|e| Failure::Io(format!("i/o error on {}: {e}", a.plan.display())))?;
    let plan = ExperimentPlan::from_json_str(&text)?;
    let resolved = plan.resolve()?;
    let report = run_experiment(&plan, a.threads)?;
    write_report_csv(&report, &a.output)?;
    if let Some(raw) = &a.raw {
        write_raw_csv(&report, raw)?;
    }
    let csv_bytes = std::fs::read(&a.output).map_err(|e| Failure::Io(format!("i/o error on {}: {e}", a.output.display())))?;
    let manifest_path = a.manifest.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    let manifest = json!({
        "tool": "ising-bench",
        "version": env!("CARGO_PKG_VERSION"),
        "plan": a.plan.display().to_string(),
        "plan_sha256": sha256_hex(text.as_bytes()),
        "report_sha256": sha256_hex(&csv_bytes),
        "seeds": resolved.seeds,
        "solvers": plan.solvers.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "metadata": report.metadata,
    });
    let mut body = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
    body.push('\n');
    std::fs::write(&manifest_path, body).map_err(|e| Failure::Io(format!("i/o error on {}: {e}", manifest_path.display())))?;
    for w in report.metadata.get("warnings").and_then(|w| w.as_array()).into_iter().flatten() {
        eprintln!("warning: {}", w.as_str().unwrap_or_default());
    }
    println!(
        "experiment, {} rows, {} instances, report={}, manifest={}",
        report.rows.len(),
        resolved.seeds.len(),
        a.output.display(),
        manifest_path.display()
    );
    Ok(())
}

fn cmd_export(a: ExportArgs) -> CmdResult {
    let form: LpForm = a.form.parse()?;
    let model = Instance::load(&a.file)?.into_boolean();
    exact::lp::export(&model, form, &a.output)?;
    println!("export, {}, offset={}, path={}", a.form.to_ascii_lowercase(), model.offset(), a.output.display());
    Ok(())
}
