//! End-to-end runs of the `residual-solve` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use residual_core::model::{Activation, ModelParams};
use residual_core::oracle::build_table;
use residual_core::problem::Family;
use residual_solve::formats::instance::read_instances;
use residual_solve::formats::report::{BoundRecord, GapReportRecord, OracleRecord, SolveRecord};
use residual_solve::formats::{metrics, Checkpoint, RunManifest};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_residual-solve"));
    cmd.env_remove("RESIDUAL_SOLVE_THREADS");
    cmd
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn jsonl<T: serde::de::DeserializeOwned>(text: &str) -> Vec<T> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn gen_is_deterministic_and_counts_lines() {
    let dir = TempDir::new().unwrap();
    let args = |out| ["gen", "--family", "knapsack_guarded", "--n", "10", "--count", "100", "--seed", "1", "--out", out];
    ok(dir.path(), &args("a.jsonl"));
    ok(dir.path(), &args("b.jsonl"));
    let a = read(dir.path().join("a.jsonl"));
    assert_eq!(a.lines().count(), 100);
    assert_eq!(a, read(dir.path().join("b.jsonl")));
    assert_eq!(read_instances(&dir.path().join("a.jsonl")).unwrap().len(), 100);

    ok(dir.path(), &["gen", "--family", "max_cut", "--n", "4", "--count", "3", "--format", "csv", "--out", "c.csv"]);
    assert_eq!(read(dir.path().join("c.csv")).lines().count(), 4);
}

#[test]
fn gen_with_zero_count_writes_empty_file_and_manifest() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--family", "mwis", "--n", "5", "--count", "0", "--out", "e.jsonl"]);
    assert_eq!(read(dir.path().join("e.jsonl")), "");
    let manifest = RunManifest::load(&dir.path().join("e.jsonl.manifest.json")).unwrap();
    assert_eq!(manifest.command, "gen");
    assert_eq!(manifest.seed, Some(0));
    assert_eq!(manifest.config["count"], 0);
    assert_eq!(manifest.config["generator"]["edge_prob"], 0.3);
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["gen", "--n", "3"])), 1);
    assert_eq!(code(&run(dir.path(), &["gen", "--family", "nope", "--n", "3", "--out", "x"])), 1);
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["--version"])), 0);
    std::fs::write(dir.path().join("bad.toml"), "stepz = 3\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["train", "--config", "bad.toml", "--out", "m.json"])), 1);
    assert_eq!(code(&run(dir.path(), &["solve", "--instances", "missing.jsonl"])), 1);
}

#[test]
fn oracle_table_lists_every_key_of_unconstrained_instance() {
    let dir = TempDir::new().unwrap();
    for family in ["black_box", "max_sat", "max_cut", "knapsack_penalty"] {
        ok(dir.path(), &["gen", "--family", family, "--n", "3", "--count", "2", "--out", "i.jsonl"]);
        let out = ok(dir.path(), &["oracle", "--instances", "i.jsonl", "--table"]);
        let records: Vec<OracleRecord> = jsonl(&String::from_utf8(out.stdout).unwrap());
        assert_eq!(records.len(), 2);
        for r in records {
            assert_eq!(r.entries.unwrap().len(), 15, "{family}");
        }
    }
    let out = ok(dir.path(), &["oracle", "--instances", "i.jsonl"]);
    let records: Vec<OracleRecord> = jsonl(&String::from_utf8(out.stdout).unwrap());
    assert!(records.iter().all(|r| r.entries.is_none() && r.root_value.is_some()));
}

#[test]
fn oversized_instance_is_a_guard_error() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--family", "knapsack_guarded", "--n", "25", "--out", "big.jsonl"]);
    for cmd in ["verify-bound", "oracle", "eval"] {
        let out = run(dir.path(), &[cmd, "--instances", "big.jsonl"]);
        assert_eq!(code(&out), 2, "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
    }
}

#[test]
fn oracle_values_have_zero_error_and_zero_residual() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--family", "knapsack_artificial", "--n", "6", "--count", "10", "--out", "i.jsonl"]);
    let out = ok(dir.path(), &["verify-bound", "--instances", "i.jsonl", "--values", "oracle", "--out", "b.jsonl"]);
    assert!(out.stdout.is_empty());
    let records: Vec<BoundRecord> = jsonl(&read(dir.path().join("b.jsonl")));
    assert_eq!(records.len(), 10);
    for r in records {
        assert!(r.holds);
        assert_eq!((r.phi, r.psi), (0.0, 0.0));
    }
    assert!(dir.path().join("b.jsonl.manifest.json").exists());
}

#[test]
fn zero_values_satisfy_the_bound_on_every_family() {
    let dir = TempDir::new().unwrap();
    let families = ["knapsack_guarded", "knapsack_artificial", "knapsack_penalty", "max_sat", "mwis", "max_cut", "black_box"];
    let mut checked = 0;
    for (i, family) in families.iter().enumerate() {
        for n in [2, 5, 8, 10] {
            let file = format!("{family}{n}.jsonl");
            let seed = (10 * i + n).to_string();
            let count = if n == 10 { "6" } else { "3" };
            ok(dir.path(), &["gen", "--family", family, "--n", &n.to_string(), "--count", count, "--seed", &seed, "--out", &file]);
            let out = ok(dir.path(), &["verify-bound", "--instances", &file, "--values", "zero"]);
            let records: Vec<BoundRecord> = jsonl(&String::from_utf8(out.stdout).unwrap());
            for r in &records {
                assert!(r.holds && r.violations.is_empty(), "{family} n={n}: {r:?}");
                assert!(r.phi <= r.psi + 1e-9 * (1.0 + r.psi));
            }
            checked += records.len();
        }
    }
    assert!(checked >= 100, "{checked}");
}

#[test]
fn solve_with_oracle_values_is_optimal() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--family", "mwis", "--n", "8", "--count", "20", "--seed", "3", "--out", "i.jsonl"]);
    let out = ok(dir.path(), &["solve", "--instances", "i.jsonl", "--values", "oracle", "--trace"]);
    let records: Vec<SolveRecord> = jsonl(&String::from_utf8(out.stdout).unwrap());
    let instances = read_instances(&dir.path().join("i.jsonl")).unwrap();
    for (r, inst) in records.iter().zip(&instances) {
        let optimum = build_table(inst).unwrap().root_value().unwrap();
        assert!((r.objective - optimum).abs() <= 1e-12 * (1.0 + optimum.abs()));
        assert!(r.feasible);
        assert_eq!(r.trace.as_ref().unwrap().len(), 8);
        assert_eq!(r.assignment.len(), 8);
    }
}

#[test]
fn eval_of_empty_file_is_an_empty_report() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = ok(dir.path(), &["eval", "--instances", "empty.jsonl", "--values", "zero"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "index,optimum,objective,gap,random_objective,random_gap\n");
    let out = ok(dir.path(), &["eval", "--instances", "empty.jsonl", "--format", "json"]);
    let report: GapReportRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.count, 0);
    assert!(report.rows.is_empty());
}

#[test]
fn eval_is_reproducible_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--family", "knapsack_guarded", "--n", "8", "--count", "30", "--out", "i.jsonl"]);
    let one = ok(dir.path(), &["eval", "--instances", "i.jsonl", "--values", "zero", "--seed", "5", "--threads", "1"]);
    let many = bin()
        .current_dir(dir.path())
        .env("RESIDUAL_SOLVE_THREADS", "4")
        .args(["eval", "--instances", "i.jsonl", "--values", "zero", "--seed", "5"])
        .output()
        .unwrap();
    assert!(many.status.success());
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(String::from_utf8(one.stdout).unwrap().lines().count(), 31);
}

const SMALL: &str = "batch_size = 8\nhidden = [8, 8]\neval_size = 4\neval_interval = 25\n\
                     [generator]\nfamily = \"knapsack_guarded\"\nn = 5\n";

#[test]
fn zero_steps_checkpoint_is_the_initialization() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    ok(dir.path(), &["train", "--config", "c.toml", "--steps", "0", "--seed", "9", "--out", "m.json"]);
    let ckpt = Checkpoint::load(&dir.path().join("m.json")).unwrap();
    let init = ModelParams::init(Family::KnapsackGuarded, vec![8, 8], Activation::Tanh, 9).unwrap();
    assert_eq!(ckpt.params.theta, init.theta);
    assert_eq!(ckpt.seed, 9);
    assert_eq!(ckpt.state.unwrap().step, 0);
    let rows = metrics::read_metrics(&dir.path().join("m.metrics.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].loss_ma.is_nan());
}

#[test]
fn resumed_training_matches_uninterrupted_training() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.toml"), format!("steps = 100\noptimizer = \"adam\"\n{SMALL}")).unwrap();
    ok(dir.path(), &["train", "--config", "c.toml", "--out", "full.json"]);
    ok(dir.path(), &["train", "--config", "c.toml", "--out", "part.json", "--stop-after", "37"]);
    let half = Checkpoint::load(&dir.path().join("part.json")).unwrap();
    assert_eq!(half.state.unwrap().step, 37);
    ok(dir.path(), &["train", "--resume", "part.json", "--out", "part.json", "--metrics", "part.metrics.csv"]);
    assert_eq!(
        std::fs::read(dir.path().join("full.json")).unwrap(),
        std::fs::read(dir.path().join("part.json")).unwrap()
    );
    assert_eq!(read(dir.path().join("full.metrics.csv")), read(dir.path().join("part.metrics.csv")));

    // Rerunning the recorded arguments reproduces the checkpoint.
    let manifest = RunManifest::load(&dir.path().join("full.json.manifest.json")).unwrap();
    let args: Vec<String> = manifest.args.iter().map(|a| a.replace("full.json", "again.json")).collect();
    ok(dir.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(read(dir.path().join("full.json")), read(dir.path().join("again.json")));

    let out = run(dir.path(), &["train", "--resume", "part.json", "--seed", "3", "--out", "x.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_config_fields_are_defaulted_in_manifest() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    ok(dir.path(), &["train", "--config", "c.toml", "--steps", "3", "--out", "m.json"]);
    let manifest = RunManifest::load(&dir.path().join("m.json.manifest.json")).unwrap();
    assert_eq!(manifest.command, "train");
    assert_eq!(manifest.seed, Some(0));
    assert_eq!(manifest.config["steps"], 3);
    assert_eq!(manifest.config["batch_size"], 8);
    assert_eq!(manifest.config["decode_mix"], 0.5);
    assert_eq!(manifest.config["lr"]["initial"], 0.01);
    assert_eq!(manifest.config["generator"]["capacity_ratio"], 0.5);
    assert_eq!(manifest.outputs.len(), 2);
}

#[test]
fn trained_checkpoint_drives_solve_and_eval() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    ok(dir.path(), &["train", "--config", "c.toml", "--steps", "5", "--out", "m.json"]);
    ok(dir.path(), &["gen", "--family", "knapsack_guarded", "--n", "7", "--count", "5", "--out", "i.jsonl"]);
    let out = ok(dir.path(), &["solve", "--instances", "i.jsonl", "--values", "m.json"]);
    let records: Vec<SolveRecord> = jsonl(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r.feasible && r.trace.is_none()));
    ok(dir.path(), &["eval", "--instances", "i.jsonl", "--values", "m.json", "--out", "gap.csv"]);
    let manifest = RunManifest::load(&dir.path().join("gap.csv.manifest.json")).unwrap();
    assert_eq!(manifest.inputs.len(), 2);
    ok(dir.path(), &["verify-bound", "--instances", "i.jsonl", "--values", "m.json"]);

    // A model trained on one family refuses another.
    ok(dir.path(), &["gen", "--family", "mwis", "--n", "4", "--out", "w.jsonl"]);
    assert_eq!(code(&run(dir.path(), &["solve", "--instances", "w.jsonl", "--values", "m.json"])), 1);
}
