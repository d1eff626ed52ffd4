//! Oracle-side diagnostics: effective low-fidelity gaps, certification times,
//! arm classes, the TACC regret bound and the pull-count caps. These use the
//! true means and trajectories, which policies never see.

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceConfig;
use crate::env::{instantaneous_low_mean, ArmSpec, BanditInstance, CostModel, Fidelity};
use crate::error::{Error, Result};
use crate::policy::{rdfe_cert_cost, TaccParams};

use super::simulate::TraceEntry;

/// `Δ^(L)(n) = μ* − μ̄^(L)(n) − B(n)` for `n = 1..=horizon`.
pub fn effective_low_gap_profile(mu_star: f64, arm: &ArmSpec, clip: bool, horizon: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(horizon as usize);
    let mut sum = 0.0;
    for n in 1..=horizon {
        sum += instantaneous_low_mean(arm, n, clip);
        out.push(mu_star - sum / n as f64 - arm.envelope.bound_clamped(n));
    }
    out
}

/// `Δ^(L)(n)` for a single `n ≥ 1`.
pub fn effective_low_gap(mu_star: f64, arm: &ArmSpec, clip: bool, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("effective low gap needs n >= 1"));
    }
    let sum: f64 = (1..=n).map(|t| instantaneous_low_mean(arm, t, clip)).sum();
    Ok(mu_star - sum / n as f64 - arm.envelope.bound_clamped(n))
}

/// `τ(γ) = min{n ≤ horizon : Δ^(L)(n) ≥ 2γ}`.
pub fn certification_time(mu_star: f64, arm: &ArmSpec, clip: bool, gamma: f64, horizon: u64) -> Result<Option<u64>> {
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma must be > 0"));
    }
    let mut sum = 0.0;
    for n in 1..=horizon {
        sum += instantaneous_low_mean(arm, n, clip);
        if mu_star - sum / n as f64 - arm.envelope.bound_clamped(n) >= 2.0 * gamma {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmClass {
    /// Certified by low fidelity before the threshold: `τ ≤ N_γ`.
    A,
    /// Not certified within the continuation window: `τ > N_γ + S0`.
    B,
    /// Certified inside the window: `N_γ < τ ≤ N_γ + S0`.
    C,
}

impl ArmClass {
    pub fn of(tau: Option<u64>, n_gamma: u64, s0: u64) -> ArmClass {
        match tau {
            Some(t) if t <= n_gamma => ArmClass::A,
            Some(t) if t <= n_gamma + s0 => ArmClass::C,
            _ => ArmClass::B,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmPartition {
    pub n_gamma: u64,
    pub s0: u64,
    pub tau: Vec<Option<u64>>,
    /// `None` for arms with zero gap.
    pub classes: Vec<Option<ArmClass>>,
    /// Pathwise-detected C-class arms; empty until [`classify_detected`].
    pub detected: Vec<bool>,
}

impl ArmPartition {
    pub fn count(&self, class: ArmClass) -> usize {
        self.classes.iter().filter(|c| **c == Some(class)).count()
    }
}

/// Static part of the partition; certification times are searched over the
/// whole query horizon.
pub fn partition_arms(instance: &BanditInstance, cfg: &ConfidenceConfig, gamma: f64, s0: u64) -> Result<ArmPartition> {
    let n_gamma = cfg.n_gamma(gamma)?;
    let mu_star = instance.mu_star();
    let mut tau = Vec::with_capacity(instance.num_arms());
    let mut classes = Vec::with_capacity(instance.num_arms());
    for (k, arm) in instance.arms.iter().enumerate() {
        if instance.gap(k) <= 0.0 {
            tau.push(None);
            classes.push(None);
            continue;
        }
        let t = certification_time(mu_star, arm, instance.clip_means, gamma, cfg.horizon)?;
        tau.push(t);
        classes.push(Some(ArmClass::of(t, n_gamma, s0)));
    }
    let detected = vec![false; instance.num_arms()];
    Ok(ArmPartition { n_gamma, s0, tau, classes, detected })
}

/// Marks C-class arms whose low count reached `τ` in the run with no
/// high-fidelity pull while `N_γ ≤ N^(L) < τ`.
pub fn classify_detected(partition: &ArmPartition, actions: &[TraceEntry], final_low_counts: &[u64]) -> ArmPartition {
    let mut out = partition.clone();
    for (k, class) in partition.classes.iter().enumerate() {
        out.detected[k] = false;
        let (Some(ArmClass::C), Some(tau)) = (class, partition.tau[k]) else { continue };
        if final_low_counts[k] < tau {
            continue;
        }
        let escalated = actions.iter().any(|e| {
            e.action.arm == k
                && e.action.fidelity == Fidelity::High
                && e.low_count_before >= partition.n_gamma
                && e.low_count_before < tau
        });
        out.detected[k] = !escalated;
    }
    out
}

/// Right side of the TACC regret bound for a partition with detection flags.
pub fn theorem_bound(instance: &BanditInstance, cfg: &ConfidenceConfig, params: &TaccParams, partition: &ArmPartition) -> f64 {
    let CostModel { low, high } = instance.costs;
    let ng = partition.n_gamma as f64;
    let s0 = params.s0 as f64;
    let mut total = 0.0;
    for (k, class) in partition.classes.iter().enumerate() {
        let Some(class) = class else { continue };
        let gap = instance.gap(k);
        total += match (class, partition.detected[k]) {
            (ArmClass::A, _) => gap * (low * (ng + 1.0) + high),
            (ArmClass::C, true) => gap * (low * (ng + s0 + 1.0) + high),
            _ => gap * (low * (ng + s0 + 1.0) + high * cfg.high_pull_cap(gap)),
        };
    }
    total
}

/// `Δ[λ^(H)⌈4ℓ/Δ²⌉ − λ^(L)S0]`: regret saved on an arm certified by continuation
/// instead of high-fidelity confirmation.
pub fn static_vs_adaptive_margin(gap: f64, cfg: &ConfidenceConfig, costs: &CostModel, s0: u64) -> f64 {
    gap * (costs.high * (4.0 * cfg.log_term() / (gap * gap)).ceil() - costs.low * s0 as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullCapViolation {
    pub arm: usize,
    pub fidelity: Fidelity,
    pub count: u64,
    pub cap: f64,
}

/// Suboptimal arms exceeding `N^(L) ≤ N_γ + S0 + 1` or `N^(H) ≤ 1 + ⌈4ℓ/Δ²⌉`.
pub fn pull_cap_violations(
    instance: &BanditInstance,
    cfg: &ConfidenceConfig,
    params: &TaccParams,
    low_counts: &[u64],
    high_counts: &[u64],
) -> Result<Vec<PullCapViolation>> {
    let low_cap = (cfg.n_gamma(params.gamma)? + params.s0 + 1) as f64;
    let mut out = Vec::new();
    for k in 0..instance.num_arms() {
        let gap = instance.gap(k);
        if gap <= 0.0 {
            continue;
        }
        if low_counts[k] as f64 > low_cap {
            out.push(PullCapViolation { arm: k, fidelity: Fidelity::Low, count: low_counts[k], cap: low_cap });
        }
        let high_cap = cfg.high_pull_cap(gap);
        if high_counts[k] as f64 > high_cap {
            out.push(PullCapViolation { arm: k, fidelity: Fidelity::High, count: high_counts[k], cap: high_cap });
        }
    }
    Ok(out)
}

/// Post-warm-start rounds where a suboptimal arm was selected although
/// `2G(N^(L)) < Δ^(L)(N^(L))`. Returns the offending trace indices.
pub fn selection_certificate_violations(
    instance: &BanditInstance,
    cfg: &ConfidenceConfig,
    actions: &[TraceEntry],
) -> Vec<usize> {
    let mu_star = instance.mu_star();
    let max_n = actions.iter().map(|e| e.low_count_before).max().unwrap_or(0);
    let profiles: Vec<Option<Vec<f64>>> = (0..instance.num_arms())
        .map(|k| {
            (instance.gap(k) > 0.0)
                .then(|| effective_low_gap_profile(mu_star, &instance.arms[k], instance.clip_means, max_n.max(1)))
        })
        .collect();
    actions
        .iter()
        .enumerate()
        .filter(|(_, e)| e.action.reason != crate::policy::Reason::Initialization)
        .filter_map(|(i, e)| {
            let profile = profiles[e.action.arm].as_ref()?;
            let n = e.low_count_before;
            (n >= 1 && 2.0 * cfg.radius_unchecked(n) < profile[(n - 1) as usize]).then_some(i)
        })
        .collect()
}

/// Certification costs of one arm over a dyadic grid `ε_r = 2^{-r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertCostRow {
    pub phase: u32,
    pub epsilon: f64,
    pub low: f64,
    pub high: f64,
}

impl CertCostRow {
    pub fn best(&self) -> f64 {
        self.low.min(self.high)
    }
}

pub fn cert_cost_table(
    cfg: &ConfidenceConfig,
    costs: &CostModel,
    arm: &ArmSpec,
    phases: u32,
) -> Result<Vec<CertCostRow>> {
    (1..=phases)
        .map(|r| {
            let epsilon = 0.5f64.powi(r as i32);
            Ok(CertCostRow {
                phase: r,
                epsilon,
                low: rdfe_cert_cost(cfg, costs, &arm.envelope, epsilon, Fidelity::Low)?,
                high: rdfe_cert_cost(cfg, costs, &arm.envelope, epsilon, Fidelity::High)?,
            })
        })
        .collect()
}

/// `Σ_{r ≤ r_k} c*(ε_r) / c*(ε_{r_k})` with `r_k = min{r : ε_r ≤ Δ/2}`.
/// `None` for zero gaps or uncertifiable resolutions.
pub fn dyadic_ratio(cfg: &ConfidenceConfig, costs: &CostModel, arm: &ArmSpec, gap: f64) -> Result<Option<f64>> {
    if !(gap > 0.0) {
        return Ok(None);
    }
    let r_k = (1u32..64).find(|&r| 0.5f64.powi(r as i32) <= gap / 2.0).unwrap_or(64);
    let table = cert_cost_table(cfg, costs, arm, r_k)?;
    let last = table.last().map(CertCostRow::best).unwrap_or(f64::INFINITY);
    if !last.is_finite() {
        return Ok(None);
    }
    Ok(Some(table.iter().map(CertCostRow::best).sum::<f64>() / last))
}
