use std::path::Path;
use std::process::{Command, Output};

fn mfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfb"))
        .args(args)
        .env_remove("MFB_JOBS")
        .output()
        .expect("spawn mfb")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: &str = r#"
preset = "set-a"
environment.arms = 6
budget.total = 3000.0
budget.checkpoints = [1500.0, 3000.0]
run.seeds = "0..10"
run.methods = ["tacc", "dnc", "mf-ucb", "ucb"]
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn run_writes_one_row_per_seed_checkpoint_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("a");
    let table = ok(&mfb(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]));
    assert!(table.contains("tacc"));

    let runs = read(&out.join("runs.csv"));
    let mut lines = runs.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run_id,seed,method,budget,regret,lf_calls,hf_calls,continuation_calls,coverage_held"
    );
    assert_eq!(lines.count(), 10 * 2 * 4);
    assert!(!runs.contains('\r'));
    assert_eq!(read(&out.join("summary.csv")).lines().next().unwrap(), "method,budget,mean,se");
    assert_eq!(
        read(&out.join("paired.csv")).lines().next().unwrap(),
        "method_a,method_b,budget,mean_diff,ci_lo,ci_hi"
    );

    // Reruns, with a different thread count, reproduce every file byte for byte.
    let again = dir.path().join("b");
    ok(&mfb(&["run", "--config", &cfg, "--out", again.to_str().unwrap(), "--jobs", "1"]));
    for f in ["runs.csv", "summary.csv", "paired.csv"] {
        assert_eq!(read(&out.join(f)), read(&again.join(f)), "{}", f);
    }

    // Summaries recomputed from runs.csv alone match the originals exactly.
    let resum = dir.path().join("c");
    ok(&mfb(&["summarize", "--in", out.join("runs.csv").to_str().unwrap(), "--out", resum.to_str().unwrap()]));
    for f in ["summary.csv", "paired.csv"] {
        assert_eq!(read(&out.join(f)), read(&resum.join(f)), "{}", f);
    }
}

#[test]
fn command_line_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    ok(&mfb(&[
        "run", "--config", &cfg, "--seeds", "3..5", "--methods", "tacc,rdfe", "--out", out.to_str().unwrap(),
    ]));
    let runs = read(&out.join("runs.csv"));
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);
    assert!(runs.contains(",rdfe,"));
    assert!(!runs.contains(",ucb,"));
}

#[test]
fn oversized_continuation_block_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = \"set-a\"\nalgorithm.s0 = 11\n");
    let out = mfb(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("algorithm.s0"), "{}", err);
}

#[test]
fn unknown_method_is_rejected() {
    let out = mfb(&["run", "--preset", "set-a", "--methods", "tacc,lucb"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lucb"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = \"set-a\"\nalgorithm.gama = 0.1\n");
    assert!(!mfb(&["run", "--config", &cfg]).status.success());
}

#[test]
fn preset_print_round_trips() {
    let listing = ok(&mfb(&["preset"]));
    assert!(listing.lines().any(|l| l.trim() == "residual-500"));
    let text = ok(&mfb(&["preset", "set-b", "--print"]));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &text);
    let parsed = mfbandit::ExperimentConfig::load(&cfg).unwrap();
    assert_eq!(parsed, mfbandit::Preset::SetB.config());
    assert!(!mfb(&["preset", "set-z"]).status.success());
}

#[test]
fn diagnose_reports_classes() {
    let report = ok(&mfb(&["diagnose", "--preset", "residual-500", "--seed", "2"]));
    assert!(report.contains("N_gamma"));
}

#[test]
fn diagnose_single_arm_has_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[environment]
kind = "explicit"
noise = { kind = "gaussian", sigma = 1.0 }
[[environment.arms]]
mu_high = 0.5
envelope = { kind = "constant", zeta = 0.1 }
trajectory = { kind = "constant", offset = 0.05 }

[costs]
low = 1.0
high = 10.0

[algorithm]
gamma = 0.1
s0 = 5

[budget]
total = 1000.0
"#,
    );
    let report = ok(&mfb(&["diagnose", "--config", &cfg]));
    assert!(report.contains("suboptimal arms: 0"), "{}", report);
}
