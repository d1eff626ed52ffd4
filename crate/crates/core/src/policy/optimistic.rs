//! Optimistic index policies: TACC, its no-continuation ablation, MF-UCB and
//! high-only UCB. All pick the arm maximising `min(UCB^L, UCB^H)` and differ in
//! the low-fidelity bias term and the fidelity rule.

use crate::confidence::{
    aggregate_ucb, high_bounds, low_bounds, low_bounds_fixed, ConfidenceConfig, FidelityStats,
};
use crate::env::{Fidelity, MismatchEnvelope};
use crate::error::{Error, Result};

use super::{Action, Method, Policy, PolicyContext, PolicyState, Reason, TaccParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRule {
    /// Time-varying bias `B(N^L)` with the continuation test.
    Tacc,
    /// Time-varying bias, switches to high fidelity as soon as `G(N^L) < γ`.
    Dnc,
    /// Fixed per-arm bias, switches like `Dnc`.
    MfUcb,
    /// High fidelity only.
    Ucb,
}

/// `B(n) − B(n+s)`: how much the mismatch bound shrinks over `s` more low pulls.
pub fn continuation_gain(envelope: &MismatchEnvelope, n: u64, s: u64) -> Result<f64> {
    if n == 0 || s == 0 {
        return Err(Error::domain("continuation gain needs n >= 1 and s >= 1"));
    }
    Ok(envelope.bound_clamped(n) - envelope.bound_clamped(n + s))
}

fn optimistic_ucb(low: Option<f64>, high: Option<f64>) -> f64 {
    aggregate_ucb(low.unwrap_or(f64::INFINITY), high.unwrap_or(f64::INFINITY))
}

fn tacc_score(cfg: &ConfidenceConfig, low: &FidelityStats, high: &FidelityStats, env: &MismatchEnvelope) -> f64 {
    optimistic_ucb(
        low_bounds(cfg, low, env).ok().map(|i| i.ucb),
        high_bounds(cfg, high).ok().map(|i| i.ucb),
    )
}

fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (k, s) in scores.enumerate() {
        if s > best_score || k == 0 {
            best = k;
            best_score = s;
        }
    }
    best
}

/// TACC arm choice computed from scratch: argmax of the aggregate UCB, ties to
/// the lowest index.
pub fn tacc_select_arm(state: &PolicyState, cfg: &ConfidenceConfig, envelopes: &[impl AsRef<MismatchEnvelope>]) -> usize {
    argmax((0..state.num_arms()).map(|k| tacc_score(cfg, &state.low[k], &state.high[k], envelopes[k].as_ref())))
}

/// TACC fidelity rule for `arm`.
pub fn tacc_select_fidelity(
    state: &PolicyState,
    params: &TaccParams,
    cfg: &ConfidenceConfig,
    envelope: &MismatchEnvelope,
    arm: usize,
) -> (Fidelity, Reason) {
    let n = state.low[arm].count;
    if cfg.radius_unchecked(n) >= params.gamma {
        return (Fidelity::Low, Reason::PreThresholdLow);
    }
    let spent = state.continuation[arm];
    if spent < params.s0 {
        let gain = continuation_gain(envelope, n, params.s0 - spent).unwrap_or(0.0);
        if gain >= 2.0 * params.eta * params.gamma {
            return (Fidelity::Low, Reason::ContinuationLow);
        }
    }
    (Fidelity::High, Reason::Escalate)
}

/// An index policy with cached per-arm scores; only the queried arm's score
/// changes after each observation.
#[derive(Debug, Clone)]
pub struct OptimisticPolicy {
    rule: IndexRule,
    ctx: PolicyContext,
    params: TaccParams,
    fixed_bias: Vec<f64>,
    scores: Vec<f64>,
}

impl OptimisticPolicy {
    pub fn new(rule: IndexRule, ctx: PolicyContext, params: TaccParams) -> Self {
        let k = ctx.num_arms();
        let fixed_bias = ctx.envelopes.iter().map(|e| e.bound_clamped(1)).collect();
        OptimisticPolicy {
            rule,
            ctx,
            params,
            fixed_bias,
            scores: vec![f64::INFINITY; k],
        }
    }

    pub fn with_fixed_bias(ctx: PolicyContext, params: TaccParams, fixed_bias: Vec<f64>) -> Self {
        let mut p = Self::new(IndexRule::MfUcb, ctx, params);
        p.fixed_bias = fixed_bias;
        p
    }

    pub fn rule(&self) -> IndexRule {
        self.rule
    }

    pub fn params(&self) -> &TaccParams {
        &self.params
    }

    pub fn score(&self, state: &PolicyState, arm: usize) -> f64 {
        let cfg = &self.ctx.confidence;
        let (low, high) = (&state.low[arm], &state.high[arm]);
        match self.rule {
            IndexRule::Tacc | IndexRule::Dnc => tacc_score(cfg, low, high, &self.ctx.envelopes[arm]),
            IndexRule::MfUcb => optimistic_ucb(
                low_bounds_fixed(cfg, low, self.fixed_bias[arm]).ok().map(|i| i.ucb),
                high_bounds(cfg, high).ok().map(|i| i.ucb),
            ),
            IndexRule::Ucb => optimistic_ucb(None, high_bounds(cfg, high).ok().map(|i| i.ucb)),
        }
    }

    pub fn select_arm(&self) -> usize {
        argmax(self.scores.iter().copied())
    }

    pub fn select_fidelity(&self, state: &PolicyState, arm: usize) -> (Fidelity, Reason) {
        match self.rule {
            IndexRule::Tacc => {
                tacc_select_fidelity(state, &self.params, &self.ctx.confidence, &self.ctx.envelopes[arm], arm)
            }
            IndexRule::Dnc | IndexRule::MfUcb => {
                if self.ctx.confidence.radius_unchecked(state.low[arm].count) >= self.params.gamma {
                    (Fidelity::Low, Reason::PreThresholdLow)
                } else {
                    (Fidelity::High, Reason::Escalate)
                }
            }
            IndexRule::Ucb => (Fidelity::High, Reason::Escalate),
        }
    }
}

impl Policy for OptimisticPolicy {
    fn method(&self) -> Method {
        match self.rule {
            IndexRule::Tacc => Method::Tacc,
            IndexRule::Dnc => Method::Dnc,
            IndexRule::MfUcb => Method::MfUcb,
            IndexRule::Ucb => Method::Ucb,
        }
    }

    fn propose(&mut self, state: &PolicyState) -> Option<Action> {
        let arm = self.select_arm();
        let (fidelity, reason) = self.select_fidelity(state, arm);
        Some(Action { arm, fidelity, reason })
    }

    fn observe(&mut self, state: &PolicyState, action: &Action) {
        self.scores[action.arm] = self.score(state, action.arm);
    }
}
