//! LUCB-style elimination with a fixed bias allowance. Samples the two leaders
//! by aggregate UCB, drops arms whose UCB falls below the best LCB, and stops
//! once a single arm remains.

use std::collections::VecDeque;

use crate::confidence::{aggregate_ucb, high_bounds, low_bounds_fixed};
use crate::env::Fidelity;

use super::{Action, Method, Policy, PolicyContext, PolicyState, Reason};

#[derive(Debug, Clone)]
pub struct StaticElimination {
    ctx: PolicyContext,
    gamma: f64,
    fixed_bias: Vec<f64>,
    active: Vec<bool>,
    queue: VecDeque<usize>,
}

impl StaticElimination {
    pub fn new(ctx: PolicyContext, gamma: f64, fixed_bias: Vec<f64>) -> Self {
        let k = ctx.num_arms();
        StaticElimination {
            ctx,
            gamma,
            fixed_bias,
            active: vec![true; k],
            queue: VecDeque::new(),
        }
    }

    pub fn active_arms(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&k| self.active[k]).collect()
    }

    fn bounds(&self, state: &PolicyState, arm: usize) -> (f64, f64) {
        let cfg = &self.ctx.confidence;
        let low = low_bounds_fixed(cfg, &state.low[arm], self.fixed_bias[arm]).ok();
        let high = high_bounds(cfg, &state.high[arm]).ok();
        let ucb = aggregate_ucb(
            low.map_or(f64::INFINITY, |i| i.ucb),
            high.map_or(f64::INFINITY, |i| i.ucb),
        );
        let lcb = low
            .map_or(f64::NEG_INFINITY, |i| i.lcb)
            .max(high.map_or(f64::NEG_INFINITY, |i| i.lcb));
        (lcb, ucb)
    }

    fn eliminate(&mut self, state: &PolicyState) {
        let bounds: Vec<_> = (0..self.active.len()).map(|k| self.bounds(state, k)).collect();
        let best_lcb = self
            .active_arms()
            .into_iter()
            .map(|k| bounds[k].0)
            .fold(f64::NEG_INFINITY, f64::max);
        for (k, &(_, ucb)) in bounds.iter().enumerate() {
            if self.active[k] && ucb < best_lcb {
                self.active[k] = false;
            }
        }
    }

    fn leaders(&self, state: &PolicyState) -> Vec<usize> {
        let mut arms: Vec<(usize, f64)> = self.active_arms().into_iter().map(|k| (k, self.bounds(state, k).1)).collect();
        // Stable sort keeps the lower index first on ties.
        arms.sort_by(|a, b| b.1.total_cmp(&a.1));
        arms.into_iter().take(2).map(|(k, _)| k).collect()
    }

    fn action_for(&self, state: &PolicyState, arm: usize) -> Action {
        if self.ctx.confidence.radius_unchecked(state.low[arm].count) >= self.gamma {
            Action { arm, fidelity: Fidelity::Low, reason: Reason::PreThresholdLow }
        } else {
            Action { arm, fidelity: Fidelity::High, reason: Reason::Escalate }
        }
    }
}

impl Policy for StaticElimination {
    fn method(&self) -> Method {
        Method::StaticElimination
    }

    fn propose(&mut self, state: &PolicyState) -> Option<Action> {
        loop {
            if let Some(arm) = self.queue.pop_front() {
                if self.active[arm] {
                    return Some(self.action_for(state, arm));
                }
                continue;
            }
            self.eliminate(state);
            if self.active_arms().len() <= 1 {
                return None;
            }
            self.queue.extend(self.leaders(state));
        }
    }

    fn recommendation(&self, state: &PolicyState) -> Option<usize> {
        self.active_arms()
            .into_iter()
            .map(|k| (k, self.bounds(state, k).0))
            .fold(None, |best: Option<(usize, f64)>, (k, l)| match best {
                Some((_, bl)) if bl >= l => best,
                _ => Some((k, l)),
            })
            .map(|(k, _)| k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confidence::ConfidenceConfig;
    use crate::env::{CostModel, EnvelopeKind, MismatchEnvelope};
    use std::sync::Arc;

    fn policy(k: usize) -> StaticElimination {
        let ctx = PolicyContext {
            envelopes: vec![Arc::new(MismatchEnvelope::new(EnvelopeKind::Constant { zeta: 0.0 }, 100).unwrap()); k],
            costs: CostModel::new(1.0, 10.0).unwrap(),
            confidence: ConfidenceConfig::from_log_term(0.01).unwrap(),
        };
        StaticElimination::new(ctx, 0.05, vec![0.0; k])
    }

    fn state(means: &[f64], n: u64) -> PolicyState {
        let mut s = PolicyState::new(means.len());
        for (k, &m) in means.iter().enumerate() {
            for _ in 0..n {
                s.low[k].push(m);
                s.high[k].push(m);
            }
        }
        s
    }

    #[test]
    fn separated_arms_are_eliminated() {
        let mut p = policy(3);
        let s = state(&[0.9, 0.1, 0.5], 4);
        // G(4) = 0.05, all intervals disjoint.
        assert!(p.propose(&s).is_none());
        assert_eq!(p.active_arms(), vec![0]);
        assert_eq!(p.recommendation(&s), Some(0));
    }

    #[test]
    fn overlapping_arms_sample_two_leaders() {
        let mut p = policy(3);
        let s = state(&[0.50, 0.52, 0.1], 1);
        let a = p.propose(&s).unwrap();
        let b = p.propose(&s).unwrap();
        assert_eq!((a.arm, b.arm), (1, 0));
        assert_eq!(p.active_arms(), vec![0, 1]);
    }
}
