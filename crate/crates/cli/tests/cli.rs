use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ising-bench"));
    c.env_remove("ISINGBENCH_TOPOLOGY");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn topology(dir: &Path, name: &str, rows: usize) {
    let r = rows.to_string();
    ok(dir, &["topology", "--rows", &r, "--cols", &r, "-o", name]);
}

const TEN_SPINS: &str = r#"{
  "variable_ids": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
  "linear_terms": [{"id": 0, "coeff": -0.5}, {"id": 7, "coeff": 0.25}],
  "quadratic_terms": [
    {"id_head": 0, "id_tail": 1, "coeff": -1.0}, {"id_head": 1, "id_tail": 2, "coeff": 1.0},
    {"id_head": 2, "id_tail": 3, "coeff": -1.0}, {"id_head": 3, "id_tail": 4, "coeff": 0.5},
    {"id_head": 4, "id_tail": 5, "coeff": -1.0}, {"id_head": 5, "id_tail": 6, "coeff": 1.0},
    {"id_head": 6, "id_tail": 7, "coeff": -1.0}, {"id_head": 7, "id_tail": 8, "coeff": -0.75},
    {"id_head": 8, "id_tail": 9, "coeff": 1.0}, {"id_head": 0, "id_tail": 9, "coeff": -1.0}
  ],
  "variable_domain": "spin"
}"#;

#[test]
fn generate_cbfm_with_gauge_writes_instance_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    topology(d.path(), "c4.json", 4);
    let line = ok(d.path(), &["generate", "cbfm", "-rgt", "--seed", "7", "--topology", "c4.json", "-o", "inst.json"]);
    assert!(line.starts_with("generate, CBFM, 128 nodes"), "{line}");
    let inst: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("inst.json")).unwrap()).unwrap();
    assert_eq!(inst["metadata"]["couplings"], serde_json::json!([[-1.0, 0.625], [0.2, 0.375]]));
    assert_eq!(inst["metadata"]["fields"], serde_json::json!([[-1.0, 0.02], [1.0, 0.01]]));
    assert_eq!(inst["metadata"]["random_gauge"], true);
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("inst.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["gauge"].as_array().unwrap().len(), 128);
}

#[test]
fn explicit_flags_reproduce_bfm_preset() {
    let d = tempfile::tempdir().unwrap();
    topology(d.path(), "c2.json", 2);
    ok(d.path(), &["generate", "bfm", "--seed", "3", "--topology", "c2.json", "-o", "preset.json"]);
    ok(
        d.path(),
        &[
            "generate", "bfm", "-j1-val", "-1.00", "-j1-pr", "1.000", "-h1-val", "-1.00", "-h1-pr", "0.010", "--seed",
            "3", "--topology", "c2.json", "-o", "flags.json",
        ],
    );
    let a = std::fs::read(d.path().join("preset.json")).unwrap();
    let b = std::fs::read(d.path().join("flags.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn probabilities_over_one_name_the_pair() {
    let d = tempfile::tempdir().unwrap();
    topology(d.path(), "c2.json", 2);
    let o = run(
        d.path(),
        &["generate", "fbfm", "-h1-pr", "0.7", "-h2-pr", "0.5", "--topology", "c2.json", "-o", "x.json"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("-h1-pr 0.7") && err.contains("-h2-pr 0.5") && err.contains("1.2"), "{err}");
}

#[test]
fn unknown_family_and_missing_topology_are_validation_errors() {
    let d = tempfile::tempdir().unwrap();
    topology(d.path(), "c2.json", 2);
    assert_eq!(run(d.path(), &["generate", "xyz", "--topology", "c2.json", "-o", "x.json"]).status.code(), Some(1));
    let o = run(d.path(), &["generate", "bfm", "-o", "x.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ISINGBENCH_TOPOLOGY"));
}

#[test]
fn topology_from_environment() {
    let d = tempfile::tempdir().unwrap();
    topology(d.path(), "c2.json", 2);
    let o = bin()
        .current_dir(d.path())
        .env("ISINGBENCH_TOPOLOGY", "c2.json")
        .args(["generate", "bfm", "-o", "x.json"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("32 nodes"));
}

#[test]
fn solve_writes_trajectory_and_summary() {
    let d = tempfile::tempdir().unwrap();
    topology(d.path(), "c2.json", 2);
    ok(d.path(), &["generate", "bfm", "--topology", "c2.json", "-o", "inst.json"]);
    let line = ok(d.path(), &["solve", "scd", "-rtl", "0.05", "-f", "inst.json", "-s", "5"]);
    let fields: Vec<&str> = line.trim().split(", ").collect();
    assert_eq!(fields[0], "scd");
    assert!(fields[1].parse::<f64>().is_ok() && fields[2].parse::<f64>().is_ok(), "{line}");
    assert!(fields.contains(&"seed=5"));
    let traj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("inst.scd.trajectory.json")).unwrap()).unwrap();
    assert_eq!(traj["solver"], "scd");
    assert_eq!(traj["seed"], 5);
}

#[test]
fn hfs_reads_topology_from_instance() {
    let d = tempfile::tempdir().unwrap();
    topology(d.path(), "c2.json", 2);
    ok(d.path(), &["generate", "cbfm", "-rgt", "--topology", "c2.json", "-o", "inst.json"]);
    let line = ok(d.path(), &["solve", "hfs", "-rtl", "0.05", "-f", "inst.json", "--trajectory-out", "t.json"]);
    assert!(line.starts_with("hfs, "));
    assert!(d.path().join("t.json").exists());
}

#[test]
fn brute_force_reports_complete_proof() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("small.json"), TEN_SPINS).unwrap();
    let line = ok(d.path(), &["solve", "brute", "-f", "small.json"]);
    assert!(line.starts_with("brute, ") && line.contains("proof=complete"), "{line}");
    let certified = ok(d.path(), &["certify", "-f", "small.json"]);
    let e_brute = line.split(", ").nth(1).unwrap();
    assert_eq!(certified.split(", ").nth(1).unwrap(), e_brute);
    assert!(certified.starts_with("brute_force, "));
}

#[test]
fn stochastic_seed_is_stamped() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("small.json"), TEN_SPINS).unwrap();
    let line = ok(d.path(), &["solve", "gd", "-ss", "-rtl", "0.01", "-f", "small.json", "--trajectory-out", "t.json"]);
    let seed = line
        .trim()
        .split(", ")
        .find_map(|f| f.strip_prefix("seed="))
        .unwrap()
        .to_string();
    let traj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(traj["seed"].to_string(), seed);
}

#[test]
fn solve_validation_and_io_errors() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("small.json"), TEN_SPINS).unwrap();
    let o = run(d.path(), &["solve", "ms", "-rtl", "0", "-f", "small.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("runtime limit"));
    let o = run(d.path(), &["solve", "sa", "-f", "small.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("scd, gd, ms, hfs, bnb, brute, qa-sim"));
    assert_eq!(run(d.path(), &["solve", "scd", "-f", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["solve"]).status.code(), Some(1));
}

#[test]
fn qa_sim_accepts_read_flags() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("small.json"), TEN_SPINS).unwrap();
    let line = ok(
        d.path(),
        &["solve", "qa-sim", "-nr", "20", "-at", "5", "-srtr", "10", "--steps", "50", "-f", "small.json", "-s", "1"],
    );
    assert!(line.starts_with("qa-sim, "), "{line}");
    let traj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("small.qa-sim.trajectory.json")).unwrap()).unwrap();
    assert_eq!(traj["metadata"]["num_reads"], 20);
    assert!((traj["time_limit"].as_f64().unwrap() - 1e-4).abs() < 1e-15);
}

#[test]
fn export_both_forms() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("small.json"), TEN_SPINS).unwrap();
    ok(d.path(), &["export", "--form", "ilp", "-f", "small.json", "-o", "ilp.lp"]);
    ok(d.path(), &["export", "--form", "iqp", "-f", "small.json", "-o", "iqp.lp"]);
    let ilp = std::fs::read_to_string(d.path().join("ilp.lp")).unwrap();
    let iqp = std::fs::read_to_string(d.path().join("iqp.lp")).unwrap();
    assert!(ilp.contains("\\ offset:") && ilp.contains("Subject To") && ilp.contains("Binary"));
    assert!(iqp.contains("] / 2"));
    let o = run(d.path(), &["export", "--form", "mps", "-f", "small.json", "-o", "x.lp"]);
    assert_eq!(o.status.code(), Some(1));
}

const PLAN: &str = r#"{
  "family": "CBFM",
  "topology": {"rows": 2, "cols": 2, "cell_size": 4},
  "instance_count": 3,
  "base_seed": 11,
  "solvers": [{"name": "scd"}, {"name": "hfs"}],
  "time_ladder": [0.0001, 0.001, 0.01],
  "clock": {"kind": "work", "units_per_second": 100000000.0}
}"#;

#[test]
fn miniature_experiment_is_fast_and_reproducible() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("plan.json"), PLAN).unwrap();
    let start = Instant::now();
    ok(d.path(), &["experiment", "plan.json", "-o", "a.csv", "--raw", "a_raw.csv", "--threads", "1"]);
    assert!(start.elapsed().as_secs_f64() < 30.0);
    ok(d.path(), &["experiment", "plan.json", "-o", "b.csv", "--threads", "1"]);
    let a = std::fs::read(d.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("family,solver,time,mean_gap,mean_hamming,frac_optimal,n_instances\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([11, 12, 13]));
    assert_eq!(manifest["plan_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn plan_errors_are_listed_together() {
    let d = tempfile::tempdir().unwrap();
    let bad = PLAN.replace(r#"{"name": "hfs"}"#, r#"{"name": "tabu"}"#).replace("[0.0001, 0.001, 0.01]", "[]");
    std::fs::write(d.path().join("plan.json"), bad).unwrap();
    let o = run(d.path(), &["experiment", "plan.json", "-o", "a.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("tabu") && err.contains("scd, gd, ms, hfs, bnb, brute") && err.contains("time_ladder"), "{err}");
}
