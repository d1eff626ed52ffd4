use serde::{Deserialize, Serialize};

use crate::confidence::{high_bounds, low_bounds, ConfidenceConfig};
use crate::env::{BanditInstance, Fidelity, ObservationStreams};
use crate::error::{Error, Result};
use crate::policy::{
    initialize, step, Action, HaltReason, Method, PhaseRecord, Policy, PolicyContext, PolicyState,
    StepOutcome, TaccParams,
};

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    /// Cost levels at which regret and call counts are snapshotted.
    pub checkpoints: Vec<f64>,
    /// Keep the full action log in the trace.
    pub record_actions: bool,
    /// Per-arm static bias for MF-UCB and static elimination.
    pub fixed_bias: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub action: Action,
    pub reward: f64,
    /// Low-fidelity count of the queried arm before this query.
    pub low_count_before: u64,
    pub cost_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub budget: f64,
    pub regret: f64,
    pub low_calls: u64,
    pub high_calls: u64,
    pub continuation_calls: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmCounts {
    pub low: u64,
    pub high: u64,
    pub continuation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub seed: u64,
    pub method: Method,
    pub budget: f64,
    pub cost: f64,
    /// Cost-weighted pseudo-regret at the end of the run.
    pub regret: f64,
    pub checkpoints: Vec<CheckpointRecord>,
    pub arms: Vec<ArmCounts>,
    /// Every interval contained `μ^(H)` after every update.
    pub coverage_held: bool,
    /// Every empirical mean stayed within `G(n)` of its sampled mean
    /// (`μ^(H)` or the selected-average low mean).
    pub concentration_held: bool,
    pub recommended: Option<usize>,
}

impl RunRecord {
    pub fn low_calls(&self) -> u64 {
        self.arms.iter().map(|a| a.low).sum()
    }

    pub fn high_calls(&self) -> u64 {
        self.arms.iter().map(|a| a.high).sum()
    }

    pub fn continuation_calls(&self) -> u64 {
        self.arms.iter().map(|a| a.continuation).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub record: RunRecord,
    pub state: PolicyState,
    pub actions: Vec<TraceEntry>,
    pub phases: Vec<PhaseRecord>,
    pub halt: HaltReason,
}

struct Tracker<'a> {
    instance: &'a BanditInstance,
    cfg: &'a ConfidenceConfig,
    gaps: Vec<f64>,
    low_mean_sum: Vec<f64>,
    regret: f64,
    calls: [u64; 2],
    continuation_calls: u64,
    coverage: bool,
    concentration: bool,
    checkpoints: &'a [f64],
    next_checkpoint: usize,
    snapshots: Vec<CheckpointRecord>,
    record_actions: bool,
    actions: Vec<TraceEntry>,
}

impl<'a> Tracker<'a> {
    fn snapshot(&self, budget: f64) -> CheckpointRecord {
        CheckpointRecord {
            budget,
            regret: self.regret,
            low_calls: self.calls[0],
            high_calls: self.calls[1],
            continuation_calls: self.continuation_calls,
        }
    }

    /// Flushes checkpoints below `cost`; called before applying a query that
    /// brings the cumulative cost to `cost`.
    fn flush_below(&mut self, cost: f64) {
        while self.next_checkpoint < self.checkpoints.len() && cost > self.checkpoints[self.next_checkpoint] {
            let snap = self.snapshot(self.checkpoints[self.next_checkpoint]);
            self.snapshots.push(snap);
            self.next_checkpoint += 1;
        }
    }

    fn after(&mut self, state: &PolicyState, action: &Action, reward: f64) {
        let k = action.arm;
        let mu = self.instance.arms[k].mu_high;
        self.flush_below(state.cost);
        self.regret += self.instance.costs.of(action.fidelity) * self.gaps[k];
        self.calls[action.fidelity.index()] += 1;
        if action.reason == crate::policy::Reason::ContinuationLow {
            self.continuation_calls += 1;
        }
        let low_count_before = match action.fidelity {
            Fidelity::Low => {
                let n = state.low[k].count - 1;
                self.low_mean_sum[k] += self.instance.mean_of(k, Fidelity::Low, n);
                n
            }
            Fidelity::High => state.low[k].count,
        };
        let low = low_bounds(self.cfg, &state.low[k], &self.instance.arms[k].envelope).ok();
        let high = high_bounds(self.cfg, &state.high[k]).ok();
        if low.is_some_and(|i| !i.contains(mu)) || high.is_some_and(|i| !i.contains(mu)) {
            self.coverage = false;
        }
        let stats = state.stats(k, action.fidelity);
        let target = match action.fidelity {
            Fidelity::Low => self.low_mean_sum[k] / stats.count as f64,
            Fidelity::High => mu,
        };
        if (stats.mean().unwrap_or(target) - target).abs() > self.cfg.radius_unchecked(stats.count) {
            self.concentration = false;
        }
        if self.record_actions {
            self.actions.push(TraceEntry { action: *action, reward, low_count_before, cost_after: state.cost });
        }
    }
}

/// Runs one policy on one instance until it halts.
pub fn simulate(
    instance: &BanditInstance,
    method: Method,
    params: &TaccParams,
    cfg: &ConfidenceConfig,
    seed: u64,
    options: &SimulationOptions,
) -> Result<RunTrace> {
    if cfg.arms != instance.num_arms() {
        return Err(Error::config(
            "algorithm",
            format!("confidence config built for {} arms, instance has {}", cfg.arms, instance.num_arms()),
        ));
    }
    let budget = params.budget;
    let mut checkpoints = options.checkpoints.clone();
    if checkpoints.is_empty() {
        checkpoints.push(budget);
    }
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("budget.checkpoints", "must be sorted ascending"));
    }

    let ctx = PolicyContext::from_instance(instance, *cfg);
    let mut policy: Box<dyn Policy> = method.build(ctx, params, options.fixed_bias.clone())?;
    let mut state = PolicyState::new(instance.num_arms());
    let mut streams = ObservationStreams::new(seed, instance.num_arms());
    let mut tracker = Tracker {
        instance,
        cfg,
        gaps: instance.gaps(),
        low_mean_sum: vec![0.0; instance.num_arms()],
        regret: 0.0,
        calls: [0, 0],
        continuation_calls: 0,
        coverage: true,
        concentration: true,
        checkpoints: &checkpoints,
        next_checkpoint: 0,
        snapshots: Vec::with_capacity(checkpoints.len()),
        record_actions: options.record_actions,
        actions: Vec::new(),
    };

    // Warm start, replayed through the tracker one query at a time.
    let mut warm_state = PolicyState::new(instance.num_arms());
    for (action, reward) in initialize(policy.as_mut(), &mut state, instance, &mut streams, budget)? {
        warm_state.record(&action, reward, &instance.costs);
        tracker.after(&warm_state, &action, reward);
    }
    debug_assert_eq!(warm_state, state);

    let halt = loop {
        match step(policy.as_mut(), &mut state, instance, &mut streams, budget)? {
            StepOutcome::Queried { action, reward } => {
                tracker.after(&state, &action, reward);
            }
            StepOutcome::Halted(reason) => break reason,
        }
    };

    while tracker.next_checkpoint < checkpoints.len() {
        let snap = tracker.snapshot(checkpoints[tracker.next_checkpoint]);
        tracker.snapshots.push(snap);
        tracker.next_checkpoint += 1;
    }

    let arms = (0..instance.num_arms())
        .map(|k| ArmCounts {
            low: state.low[k].count,
            high: state.high[k].count,
            continuation: state.continuation[k],
        })
        .collect();
    let record = RunRecord {
        run_id: format!("{}-{}", method, seed),
        seed,
        method,
        budget,
        cost: state.cost,
        regret: tracker.regret,
        checkpoints: tracker.snapshots,
        arms,
        coverage_held: tracker.coverage,
        concentration_held: tracker.concentration,
        recommended: policy.recommendation(&state),
    };
    Ok(RunTrace {
        record,
        actions: tracker.actions,
        phases: policy.phase_log().to_vec(),
        halt,
        state,
    })
}
