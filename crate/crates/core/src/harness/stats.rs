use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::policy::Method;

use super::simulate::RunRecord;

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// One regret observation: `(method, seed, checkpoint budget, regret)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretSample {
    pub method: Method,
    pub seed: u64,
    pub budget: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub budget: f64,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSummary {
    pub method_a: Method,
    pub method_b: Method,
    pub budget: f64,
    pub n: usize,
    /// Mean of `regret_a − regret_b` over common seeds.
    pub mean_diff: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryStats {
    pub methods: Vec<MethodSummary>,
    pub paired: Vec<PairedSummary>,
}

impl SummaryStats {
    pub fn method(&self, method: Method, budget: f64) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method && s.budget == budget)
    }

    pub fn pair(&self, a: Method, b: Method, budget: f64) -> Option<&PairedSummary> {
        self.paired
            .iter()
            .find(|s| s.method_a == a && s.method_b == b && s.budget == budget)
    }
}

/// Mean and standard error (sample standard deviation over `√n`; 0 for `n < 2`).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `(lo, hi)` of the normal-approximation 95% interval `mean ± 1.96·se`.
pub fn normal_ci(mean: f64, se: f64) -> (f64, f64) {
    (mean - Z_95 * se, mean + Z_95 * se)
}

pub fn samples_from_records(records: &[RunRecord]) -> Vec<RegretSample> {
    records
        .iter()
        .flat_map(|r| {
            r.checkpoints.iter().map(move |c| RegretSample {
                method: r.method,
                seed: r.seed,
                budget: c.budget,
                regret: c.regret,
            })
        })
        .collect()
}

pub fn summarize(records: &[RunRecord]) -> SummaryStats {
    summarize_samples(&samples_from_records(records))
}

/// Per-method means and all pairwise differences, in the order methods first
/// appear. Pairs `(a, b)` with `a` before `b`; budgets ascending.
pub fn summarize_samples(samples: &[RegretSample]) -> SummaryStats {
    let mut order: Vec<Method> = Vec::new();
    for s in samples {
        if !order.contains(&s.method) {
            order.push(s.method);
        }
    }
    // (method, budget bits) -> seed -> regret; f64 budgets are nonnegative so
    // their bit patterns sort numerically.
    let mut table: BTreeMap<(usize, u64), BTreeMap<u64, f64>> = BTreeMap::new();
    let mut budgets: Vec<u64> = Vec::new();
    for s in samples {
        let m = order.iter().position(|&m| m == s.method).unwrap_or(0);
        table.entry((m, s.budget.to_bits())).or_default().insert(s.seed, s.regret);
        budgets.push(s.budget.to_bits());
    }
    budgets.sort_unstable();
    budgets.dedup();

    let mut out = SummaryStats::default();
    for (m, &method) in order.iter().enumerate() {
        for &b in &budgets {
            let Some(by_seed) = table.get(&(m, b)) else { continue };
            let xs: Vec<f64> = by_seed.values().copied().collect();
            let (mean, se) = mean_se(&xs);
            out.methods.push(MethodSummary { method, budget: f64::from_bits(b), n: xs.len(), mean, se });
        }
    }
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            for &b in &budgets {
                let (Some(a), Some(c)) = (table.get(&(i, b)), table.get(&(j, b))) else { continue };
                let diffs: Vec<f64> = a
                    .iter()
                    .filter_map(|(seed, x)| c.get(seed).map(|y| x - y))
                    .collect();
                if diffs.is_empty() {
                    continue;
                }
                let (mean_diff, se) = mean_se(&diffs);
                let (ci_lo, ci_hi) = normal_ci(mean_diff, se);
                out.paired.push(PairedSummary {
                    method_a: order[i],
                    method_b: order[j],
                    budget: f64::from_bits(b),
                    n: diffs.len(),
                    mean_diff,
                    se,
                    ci_lo,
                    ci_hi,
                });
            }
        }
    }
    out
}
