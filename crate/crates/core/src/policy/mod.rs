//! Decision rules. Every policy proposes `(arm, fidelity)` queries from the
//! shared [`PolicyState`]; [`step`] pays for them, samples and updates the state.
//!
//! Policies never see high-fidelity means. They are built from a
//! [`PolicyContext`] holding only what the learner is allowed to know: costs,
//! the confidence configuration and each arm's mismatch envelope.

mod elimination;
mod optimistic;
mod rdfe;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use elimination::StaticElimination;
pub use optimistic::{
    continuation_gain, tacc_select_arm, tacc_select_fidelity, IndexRule, OptimisticPolicy,
};
pub use rdfe::{rdfe_cert_cost, rdfe_cert_samples, PhaseArm, PhaseRecord, Rdfe};

use crate::confidence::{ConfidenceConfig, FidelityStats};
use crate::env::{BanditInstance, CostModel, Fidelity, MismatchEnvelope, ObservationStreams};
use crate::error::{Error, Result};

/// Why a query was issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    Initialization,
    /// Low fidelity while its radius is still `≥ γ`.
    PreThresholdLow,
    /// Low fidelity past the threshold, granted by the continuation test.
    ContinuationLow,
    /// High fidelity.
    Escalate,
    /// Query scheduled by a phase or elimination routine.
    Scheduled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub arm: usize,
    pub fidelity: Fidelity,
    pub reason: Reason,
}

/// TACC parameters `γ`, `η`, `S0` and the budget `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaccParams {
    pub gamma: f64,
    pub eta: f64,
    pub s0: u64,
    pub budget: f64,
}

impl TaccParams {
    pub fn new(gamma: f64, eta: f64, s0: u64, budget: f64, costs: &CostModel) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config("algorithm.gamma", "must be finite and > 0"));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::config("algorithm.eta", "must lie in (0, 1)"));
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::config("budget.total", "must be finite and > 0"));
        }
        if s0 as f64 * costs.low > costs.high {
            return Err(Error::config(
                "algorithm.s0",
                format!(
                    "continuation block S0*lambda_low = {} exceeds one high-fidelity query ({})",
                    s0 as f64 * costs.low,
                    costs.high
                ),
            ));
        }
        Ok(TaccParams { gamma, eta, s0, budget })
    }
}

/// Per-arm counts, means, continuation counters and the cumulative cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub low: Vec<FidelityStats>,
    pub high: Vec<FidelityStats>,
    /// `A_k`, continuation pulls spent per arm.
    pub continuation: Vec<u64>,
    pub cost: f64,
    pub round: u64,
}

impl PolicyState {
    pub fn new(arms: usize) -> Self {
        PolicyState {
            low: vec![FidelityStats::default(); arms],
            high: vec![FidelityStats::default(); arms],
            continuation: vec![0; arms],
            cost: 0.0,
            round: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.low.len()
    }

    pub fn stats(&self, arm: usize, fidelity: Fidelity) -> &FidelityStats {
        match fidelity {
            Fidelity::Low => &self.low[arm],
            Fidelity::High => &self.high[arm],
        }
    }

    pub fn record(&mut self, action: &Action, reward: f64, costs: &CostModel) {
        match action.fidelity {
            Fidelity::Low => self.low[action.arm].push(reward),
            Fidelity::High => self.high[action.arm].push(reward),
        }
        if action.reason == Reason::ContinuationLow {
            self.continuation[action.arm] += 1;
        }
        self.cost += costs.of(action.fidelity);
        self.round += 1;
    }

    pub fn total_calls(&self, fidelity: Fidelity) -> u64 {
        match fidelity {
            Fidelity::Low => self.low.iter().map(|s| s.count).sum(),
            Fidelity::High => self.high.iter().map(|s| s.count).sum(),
        }
    }
}

/// What a policy is allowed to know about the instance.
#[derive(Debug, Clone)]
pub struct PolicyContext {
    pub envelopes: Vec<Arc<MismatchEnvelope>>,
    pub costs: CostModel,
    pub confidence: ConfidenceConfig,
}

impl PolicyContext {
    pub fn from_instance(instance: &BanditInstance, confidence: ConfidenceConfig) -> Self {
        PolicyContext {
            envelopes: instance.envelopes(),
            costs: instance.costs,
            confidence,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.envelopes.len()
    }
}

pub trait Policy: Send {
    fn method(&self) -> Method;

    /// Next query, or `None` once the policy has nothing left to do.
    fn propose(&mut self, state: &PolicyState) -> Option<Action>;

    /// Called after `action` has been paid for and recorded in `state`.
    fn observe(&mut self, _state: &PolicyState, _action: &Action) {}

    /// Arm the policy would return if stopped now, when it identifies one.
    fn recommendation(&self, _state: &PolicyState) -> Option<usize> {
        None
    }

    /// Phase bookkeeping of phase-based policies.
    fn phase_log(&self) -> &[PhaseRecord] {
        &[]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "tacc")]
    Tacc,
    #[serde(rename = "dnc")]
    Dnc,
    #[serde(rename = "mf-ucb")]
    MfUcb,
    #[serde(rename = "ucb")]
    Ucb,
    #[serde(rename = "static-elim")]
    StaticElimination,
    #[serde(rename = "rdfe")]
    Rdfe,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Tacc,
        Method::Dnc,
        Method::MfUcb,
        Method::Ucb,
        Method::StaticElimination,
        Method::Rdfe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tacc => "tacc",
            Method::Dnc => "dnc",
            Method::MfUcb => "mf-ucb",
            Method::Ucb => "ucb",
            Method::StaticElimination => "static-elim",
            Method::Rdfe => "rdfe",
        }
    }

    /// Instantiates the policy. `fixed_bias` overrides the per-arm static bias of
    /// MF-UCB and static elimination (default `B_k(1)`).
    pub fn build(
        self,
        ctx: PolicyContext,
        params: &TaccParams,
        fixed_bias: Option<Vec<f64>>,
    ) -> Result<Box<dyn Policy>> {
        let fixed = match fixed_bias {
            Some(b) if b.len() != ctx.num_arms() => {
                return Err(Error::config(
                    "algorithm.fixed_bias",
                    format!("expected {} values, got {}", ctx.num_arms(), b.len()),
                ))
            }
            Some(b) => b,
            None => ctx.envelopes.iter().map(|e| e.bound_clamped(1)).collect(),
        };
        Ok(match self {
            Method::Tacc => Box::new(OptimisticPolicy::new(IndexRule::Tacc, ctx, *params)),
            Method::Dnc => Box::new(OptimisticPolicy::new(IndexRule::Dnc, ctx, *params)),
            Method::MfUcb => Box::new(OptimisticPolicy::with_fixed_bias(ctx, *params, fixed)),
            Method::Ucb => Box::new(OptimisticPolicy::new(IndexRule::Ucb, ctx, *params)),
            Method::StaticElimination => Box::new(StaticElimination::new(ctx, params.gamma, fixed)),
            Method::Rdfe => Box::new(Rdfe::new(ctx)),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::config(
                    "methods",
                    format!(
                        "unknown method `{}` (expected one of: {})",
                        s,
                        Method::ALL.map(Method::name).join(", ")
                    ),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    /// The proposed query would overrun the budget.
    Budget,
    /// The policy finished (a single surviving arm).
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Queried { action: Action, reward: f64 },
    Halted(HaltReason),
}

/// Queries every arm once at each fidelity (low first). Requires
/// `K(λ^(L)+λ^(H)) ≤ budget`.
pub fn initialize(
    policy: &mut dyn Policy,
    state: &mut PolicyState,
    instance: &BanditInstance,
    streams: &mut ObservationStreams,
    budget: f64,
) -> Result<Vec<(Action, f64)>> {
    let warm = instance.costs.warm_start(instance.num_arms());
    if warm > budget {
        return Err(Error::config(
            "budget.total",
            format!("budget {} does not cover the warm start cost {}", budget, warm),
        ));
    }
    let mut out = Vec::with_capacity(2 * instance.num_arms());
    for arm in 0..instance.num_arms() {
        for fidelity in [Fidelity::Low, Fidelity::High] {
            let action = Action { arm, fidelity, reason: Reason::Initialization };
            let reward = streams.sample(instance, arm, fidelity, state.low[arm].count)?;
            state.record(&action, reward, &instance.costs);
            policy.observe(state, &action);
            out.push((action, reward));
        }
    }
    Ok(out)
}

/// One round: propose, check `C + λ^(m) ≤ Λ`, sample, update.
pub fn step(
    policy: &mut dyn Policy,
    state: &mut PolicyState,
    instance: &BanditInstance,
    streams: &mut ObservationStreams,
    budget: f64,
) -> Result<StepOutcome> {
    let Some(action) = policy.propose(state) else {
        return Ok(StepOutcome::Halted(HaltReason::Finished));
    };
    if state.cost + instance.costs.of(action.fidelity) > budget {
        return Ok(StepOutcome::Halted(HaltReason::Budget));
    }
    let reward = streams.sample(instance, action.arm, action.fidelity, state.low[action.arm].count)?;
    state.record(&action, reward, &instance.costs);
    policy.observe(state, &action);
    Ok(StepOutcome::Queried { action, reward })
}

/// [`step`] with a TACC policy.
pub fn tacc_step(
    policy: &mut OptimisticPolicy,
    state: &mut PolicyState,
    instance: &BanditInstance,
    streams: &mut ObservationStreams,
) -> Result<StepOutcome> {
    let budget = policy.params().budget;
    step(policy, state, instance, streams, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lucb".parse::<Method>().is_err());
    }

    #[test]
    fn continuation_block_must_fit_one_high_query() {
        let costs = CostModel::new(1.0, 10.0).unwrap();
        assert!(TaccParams::new(0.063, 1e-4, 10, 1000.0, &costs).is_ok());
        let err = TaccParams::new(0.063, 1e-4, 11, 1000.0, &costs).unwrap_err();
        assert!(err.to_string().contains("continuation block"), "{}", err);
        assert!(TaccParams::new(0.0, 1e-4, 1, 1000.0, &costs).is_err());
        assert!(TaccParams::new(0.1, 1.0, 1, 1000.0, &costs).is_err());
    }

    #[test]
    fn cost_accounting() {
        let costs = CostModel::new(1.0, 10.0).unwrap();
        let mut s = PolicyState::new(2);
        s.record(&Action { arm: 0, fidelity: Fidelity::Low, reason: Reason::ContinuationLow }, 0.1, &costs);
        s.record(&Action { arm: 1, fidelity: Fidelity::High, reason: Reason::Escalate }, 0.1, &costs);
        s.record(&Action { arm: 1, fidelity: Fidelity::Low, reason: Reason::PreThresholdLow }, 0.1, &costs);
        assert_eq!(s.cost, 12.0);
        assert_eq!(s.continuation, vec![1, 0]);
        assert_eq!(s.total_calls(Fidelity::Low), 2);
        assert_eq!(s.total_calls(Fidelity::High), 1);
    }
}
