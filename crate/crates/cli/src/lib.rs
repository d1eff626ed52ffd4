//! CSV emission, re-summarisation and diagnostics for the `mfb` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use mfbandit::harness::theory::{
    cert_cost_table, dyadic_ratio, partition_arms, static_vs_adaptive_margin, theorem_bound, ArmClass,
};
use mfbandit::harness::{summarize_samples, RegretSample, RunRecord, SummaryStats};
use mfbandit::{ExperimentConfig, Method};

/// One row of `runs.csv`: a record at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: String,
    pub seed: u64,
    pub method: Method,
    pub budget: f64,
    pub regret: f64,
    pub lf_calls: u64,
    pub hf_calls: u64,
    pub continuation_calls: u64,
    pub coverage_held: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub budget: f64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub method_a: Method,
    pub method_b: Method,
    pub budget: f64,
    pub mean_diff: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn run_rows(records: &[RunRecord]) -> Vec<RunRow> {
    records
        .iter()
        .flat_map(|r| {
            r.checkpoints.iter().map(move |c| RunRow {
                run_id: r.run_id.clone(),
                seed: r.seed,
                method: r.method,
                budget: c.budget,
                regret: c.regret,
                lf_calls: c.low_calls,
                hf_calls: c.high_calls,
                continuation_calls: c.continuation_calls,
                coverage_held: r.coverage_held,
            })
        })
        .collect()
}

pub fn summarize_rows(rows: &[RunRow]) -> SummaryStats {
    let samples: Vec<RegretSample> = rows
        .iter()
        .map(|r| RegretSample { method: r.method, seed: r.seed, budget: r.budget, regret: r.regret })
        .collect();
    summarize_samples(&samples)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<RunRow>, _>>()
        .with_context(|| format!("malformed runs file {}", path.display()))
}

pub fn write_runs(path: &Path, rows: &[RunRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_summary(path: &Path, stats: &SummaryStats) -> Result<()> {
    let rows: Vec<SummaryRow> = stats
        .methods
        .iter()
        .map(|s| SummaryRow { method: s.method, budget: s.budget, mean: s.mean, se: s.se })
        .collect();
    write_csv(path, &rows)
}

pub fn write_paired(path: &Path, stats: &SummaryStats) -> Result<()> {
    let rows: Vec<PairedRow> = stats
        .paired
        .iter()
        .map(|p| PairedRow {
            method_a: p.method_a,
            method_b: p.method_b,
            budget: p.budget,
            mean_diff: p.mean_diff,
            ci_lo: p.ci_lo,
            ci_hi: p.ci_hi,
        })
        .collect();
    write_csv(path, &rows)
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub runs: PathBuf,
    pub summary: PathBuf,
    pub paired: PathBuf,
}

/// Writes `runs.csv`, `summary.csv` and `paired.csv` into `dir`.
pub fn write_outputs(dir: &Path, rows: &[RunRow], stats: &SummaryStats) -> Result<OutputFiles> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let files = OutputFiles {
        runs: dir.join("runs.csv"),
        summary: dir.join("summary.csv"),
        paired: dir.join("paired.csv"),
    };
    write_runs(&files.runs, rows)?;
    write_summary(&files.summary, stats)?;
    write_paired(&files.paired, stats)?;
    Ok(files)
}

/// Final-budget table: one line per method with mean ± SE, then paired
/// differences against the first method.
pub fn final_table(stats: &SummaryStats) -> String {
    let Some(budget) = stats.methods.iter().map(|s| s.budget).reduce(f64::max) else {
        return String::from("no records\n");
    };
    let mut out = String::new();
    let _ = writeln!(out, "final budget {}", budget);
    let _ = writeln!(out, "{:<12} {:>14} {:>12} {:>6}", "method", "mean regret", "se", "n");
    for s in stats.methods.iter().filter(|s| s.budget == budget) {
        let _ = writeln!(out, "{:<12} {:>14.2} {:>12.2} {:>6}", s.method, s.mean, s.se, s.n);
    }
    let first = stats.methods.first().map(|s| s.method);
    let pairs: Vec<_> = stats
        .paired
        .iter()
        .filter(|p| p.budget == budget && Some(p.method_a) == first)
        .collect();
    if !pairs.is_empty() {
        let _ = writeln!(out, "\n{:<22} {:>12} {:>24}", "paired difference", "mean", "95% interval");
        for p in pairs {
            let label = format!("{} - {}", p.method_a, p.method_b);
            let ci = format!("[{:.1}, {:.1}]", p.ci_lo, p.ci_hi);
            let _ = writeln!(out, "{:<22} {:>12.1} {:>24}", label, p.mean_diff, ci);
        }
    }
    out
}

fn fmt_cost(x: f64) -> String {
    if x.is_finite() {
        format!("{}", x)
    } else {
        String::from("inf")
    }
}

/// Per-instance theory report for one seed.
pub fn diagnose(config: &ExperimentConfig, seed: u64, phases: u32) -> Result<String> {
    let instance = config.build_instance(seed)?;
    let cfg = config.confidence()?;
    let params = config.tacc_params()?;
    let partition = partition_arms(&instance, &cfg, params.gamma, params.s0)?;

    let mut out = String::new();
    let _ = writeln!(out, "seed {}  arms {}  horizon {}", seed, instance.num_arms(), cfg.horizon);
    let _ = writeln!(out, "log term {:.6}  N_gamma {}  S0 {}", cfg.log_term(), partition.n_gamma, params.s0);
    let _ = writeln!(
        out,
        "classes  A {}  B {}  C {}",
        partition.count(ArmClass::A),
        partition.count(ArmClass::B),
        partition.count(ArmClass::C)
    );
    let suboptimal = partition.classes.iter().filter(|c| c.is_some()).count();
    let _ = writeln!(out, "suboptimal arms: {}", suboptimal);
    // No run has been observed, so no arm counts as detected here.
    let _ = writeln!(out, "regret bound (no detections) {:.3}", theorem_bound(&instance, &cfg, &params, &partition));

    let _ = writeln!(out, "\n{:>5} {:>9} {:>10} {:>5} {:>12} {:>10}", "arm", "gap", "tau", "class", "margin", "dyadic");
    let mut flagged = 0;
    for (k, class) in partition.classes.iter().enumerate() {
        let Some(class) = class else { continue };
        let gap = instance.gap(k);
        let tau = partition.tau[k].map_or_else(|| String::from("inf"), |t| t.to_string());
        let margin = static_vs_adaptive_margin(gap, &cfg, &instance.costs, params.s0);
        let ratio = dyadic_ratio(&cfg, &instance.costs, &instance.arms[k], gap)?;
        let ratio_s = ratio.map_or_else(|| String::from("inf"), |r| format!("{:.3}", r));
        if ratio.is_none_or(|r| r > config.algorithm.dyadic_limit) {
            flagged += 1;
        }
        let _ = writeln!(out, "{:>5} {:>9.4} {:>10} {:>5?} {:>12.1} {:>10}", k, gap, tau, class, margin, ratio_s);
    }
    let _ = writeln!(out, "arms above dyadic limit {}: {}", config.algorithm.dyadic_limit, flagged);

    let _ = writeln!(out, "\ncertification costs (arm, r, eps, c_L, c_H, c*)");
    for (k, arm) in instance.arms.iter().enumerate() {
        for row in cert_cost_table(&cfg, &instance.costs, arm, phases)? {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                k,
                row.phase,
                row.epsilon,
                fmt_cost(row.low),
                fmt_cost(row.high),
                fmt_cost(row.best())
            );
        }
    }
    Ok(out)
}
