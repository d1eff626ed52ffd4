//! Resolution-doubling fidelity elimination. Phase `r` targets accuracy
//! `ε_r = 2^{-r}`: each active arm is certified at whichever fidelity reaches
//! `ε_r/8` more cheaply, then arms whose UCB falls more than `ε_r/4` below the
//! leader's LCB are dropped.

use crate::confidence::{high_bounds, low_bounds, ConfidenceConfig, Interval};
use crate::env::{CostModel, Fidelity, MismatchEnvelope};
use crate::error::{Error, Result};

use super::{Action, Method, Policy, PolicyContext, PolicyState, Reason};

/// Smallest sample count certifying `ε` at `fidelity`: `G(n) + B(n) ≤ ε/8` at
/// low fidelity, `G(n) ≤ ε/8` at high. `None` if no `n` within the horizon works.
pub fn rdfe_cert_samples(
    cfg: &ConfidenceConfig,
    envelope: &MismatchEnvelope,
    epsilon: f64,
    fidelity: Fidelity,
) -> Result<Option<u64>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain("certification accuracy must be finite and > 0"));
    }
    let target = epsilon / 8.0;
    match fidelity {
        Fidelity::Low => {
            let horizon = cfg.horizon.min(envelope.horizon());
            let ok = |n: u64| cfg.radius_unchecked(n) + envelope.bound_clamped(n) <= target;
            if !ok(horizon) {
                return Ok(None);
            }
            // Both terms are nonincreasing in n, so the predicate is monotone.
            let (mut lo, mut hi) = (1u64, horizon);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Ok(Some(lo))
        }
        Fidelity::High => {
            let ok = |n: u64| cfg.radius_unchecked(n) <= target;
            let mut n = (cfg.log_term() / (target * target)).ceil().max(1.0) as u64;
            while n > 1 && ok(n - 1) {
                n -= 1;
            }
            while !ok(n) {
                n += 1;
            }
            Ok((n <= cfg.horizon).then_some(n))
        }
    }
}

/// `c_m(ε) = λ^(m)·n_m(ε)`, `+∞` when uncertifiable.
pub fn rdfe_cert_cost(
    cfg: &ConfidenceConfig,
    costs: &CostModel,
    envelope: &MismatchEnvelope,
    epsilon: f64,
    fidelity: Fidelity,
) -> Result<f64> {
    Ok(rdfe_cert_samples(cfg, envelope, epsilon, fidelity)?
        .map_or(f64::INFINITY, |n| n as f64 * costs.of(fidelity)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseArm {
    pub arm: usize,
    pub fidelity: Fidelity,
    /// Cost actually spent on this arm during the phase.
    pub spent: f64,
    /// `c*_k(ε_r) = min(c_L, c_H)`.
    pub cert_cost: f64,
    pub interval: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub phase: u32,
    pub epsilon: f64,
    pub active: Vec<usize>,
    pub arms: Vec<PhaseArm>,
    /// `S_{r+1}`; empty when the budget ran out mid-phase.
    pub survivors: Vec<usize>,
    pub completed: bool,
}

#[derive(Debug, Clone)]
struct Task {
    arm: usize,
    fidelity: Fidelity,
    start_count: u64,
    cert_cost: f64,
}

#[derive(Debug, Clone)]
pub struct Rdfe {
    ctx: PolicyContext,
    started: bool,
    finished: bool,
    phase: u32,
    active: Vec<usize>,
    cursor: usize,
    task: Option<Task>,
    k_out: usize,
    log: Vec<PhaseRecord>,
}

impl Rdfe {
    pub fn new(ctx: PolicyContext) -> Self {
        Rdfe {
            ctx,
            started: false,
            finished: false,
            phase: 0,
            active: Vec::new(),
            cursor: 0,
            task: None,
            k_out: 0,
            log: Vec::new(),
        }
    }

    pub fn epsilon(phase: u32) -> f64 {
        0.5f64.powi(phase as i32)
    }

    pub fn active_arms(&self) -> &[usize] {
        &self.active
    }

    fn interval(&self, state: &PolicyState, arm: usize, fidelity: Fidelity) -> Option<Interval> {
        let cfg = &self.ctx.confidence;
        match fidelity {
            Fidelity::Low => low_bounds(cfg, &state.low[arm], &self.ctx.envelopes[arm]).ok(),
            Fidelity::High => high_bounds(cfg, &state.high[arm]).ok(),
        }
    }

    fn certified(&self, state: &PolicyState, arm: usize, fidelity: Fidelity, epsilon: f64) -> bool {
        let n = state.stats(arm, fidelity).count;
        if n == 0 {
            return false;
        }
        let cfg = &self.ctx.confidence;
        let width = match fidelity {
            Fidelity::Low => cfg.radius_unchecked(n) + self.ctx.envelopes[arm].bound_clamped(n),
            Fidelity::High => cfg.radius_unchecked(n),
        };
        width <= epsilon / 8.0
    }

    fn start(&mut self, state: &PolicyState) {
        self.started = true;
        let k = self.ctx.num_arms();
        self.k_out = argmax_by(0..k, |a| {
            let l = self.interval(state, *a, Fidelity::Low).map_or(f64::NEG_INFINITY, |i| i.lcb);
            let h = self.interval(state, *a, Fidelity::High).map_or(f64::NEG_INFINITY, |i| i.lcb);
            l.max(h)
        });
        self.active = (0..k).collect();
        self.begin_phase(1);
    }

    fn begin_phase(&mut self, phase: u32) {
        self.phase = phase;
        self.cursor = 0;
        if self.active.len() <= 1 {
            if let Some(&only) = self.active.first() {
                self.k_out = only;
            }
            self.finished = true;
            return;
        }
        self.log.push(PhaseRecord {
            phase,
            epsilon: Self::epsilon(phase),
            active: self.active.clone(),
            arms: Vec::new(),
            survivors: Vec::new(),
            completed: false,
        });
    }

    fn begin_task(&mut self, state: &PolicyState, arm: usize) {
        let eps = Self::epsilon(self.phase);
        let cost = |f| {
            rdfe_cert_cost(&self.ctx.confidence, &self.ctx.costs, &self.ctx.envelopes[arm], eps, f)
                .unwrap_or(f64::INFINITY)
        };
        let (cl, ch) = (cost(Fidelity::Low), cost(Fidelity::High));
        let fidelity = if cl <= ch { Fidelity::Low } else { Fidelity::High };
        self.task = Some(Task {
            arm,
            fidelity,
            start_count: state.stats(arm, fidelity).count,
            cert_cost: cl.min(ch),
        });
    }

    fn finish_task(&mut self, state: &PolicyState) {
        let Some(task) = self.task.take() else { return };
        let n = state.stats(task.arm, task.fidelity).count;
        let spent = (n - task.start_count) as f64 * self.ctx.costs.of(task.fidelity);
        let interval = self.interval(state, task.arm, task.fidelity);
        if let Some(rec) = self.log.last_mut() {
            rec.arms.push(PhaseArm {
                arm: task.arm,
                fidelity: task.fidelity,
                spent,
                cert_cost: task.cert_cost,
                interval,
            });
        }
    }

    fn end_phase(&mut self) {
        let eps = Self::epsilon(self.phase);
        let rec = self.log.last_mut().expect("phase record exists while active");
        let lcb = |i: &Option<Interval>| i.map_or(f64::NEG_INFINITY, |i| i.lcb);
        let leader = argmax_by(0..rec.arms.len(), |j| lcb(&rec.arms[*j].interval));
        let threshold = lcb(&rec.arms[leader].interval) - eps / 4.0;
        let survivors: Vec<usize> = rec
            .arms
            .iter()
            .filter(|a| a.interval.map_or(true, |i| i.ucb >= threshold))
            .map(|a| a.arm)
            .collect();
        let best = argmax_by(
            rec.arms.iter().filter(|a| survivors.contains(&a.arm)),
            |a| lcb(&a.interval),
        );
        self.k_out = best.arm;
        rec.survivors = survivors.clone();
        rec.completed = true;
        self.active = survivors;
        self.begin_phase(self.phase + 1);
    }
}

fn argmax_by<T, I: IntoIterator<Item = T>>(items: I, mut score: impl FnMut(&T) -> f64) -> T {
    let mut best: Option<(T, f64)> = None;
    for item in items {
        let s = score(&item);
        if best.as_ref().map_or(true, |(_, b)| s > *b) {
            best = Some((item, s));
        }
    }
    best.expect("argmax over an empty set").0
}

impl Policy for Rdfe {
    fn method(&self) -> Method {
        Method::Rdfe
    }

    fn propose(&mut self, state: &PolicyState) -> Option<Action> {
        if !self.started {
            self.start(state);
        }
        loop {
            if self.finished {
                return None;
            }
            if let Some(task) = &self.task {
                let (arm, fidelity) = (task.arm, task.fidelity);
                if self.certified(state, arm, fidelity, Self::epsilon(self.phase)) {
                    self.finish_task(state);
                    self.cursor += 1;
                    continue;
                }
                return Some(Action { arm, fidelity, reason: Reason::Scheduled });
            }
            if self.cursor < self.active.len() {
                let arm = self.active[self.cursor];
                self.begin_task(state, arm);
                continue;
            }
            self.end_phase();
        }
    }

    fn recommendation(&self, _state: &PolicyState) -> Option<usize> {
        Some(self.k_out)
    }

    fn phase_log(&self) -> &[PhaseRecord] {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvelopeKind;
    use std::sync::Arc;

    fn env(kind: EnvelopeKind) -> MismatchEnvelope {
        MismatchEnvelope::new(kind, 1_000_000).unwrap()
    }

    #[test]
    fn high_cert_samples_closed_form() {
        let cfg = ConfidenceConfig::new(1.0, 0.05, 2, 1_000_000).unwrap();
        let e = env(EnvelopeKind::Constant { zeta: 0.0 });
        let n = rdfe_cert_samples(&cfg, &e, 0.5, Fidelity::High).unwrap().unwrap();
        let target = 0.5 / 8.0;
        assert!(cfg.radius(n).unwrap() <= target);
        assert!(cfg.radius(n - 1).unwrap() > target);
    }

    #[test]
    fn low_cert_is_infinite_above_bias_floor() {
        let cfg = ConfidenceConfig::new(1.0, 0.05, 2, 1_000_000).unwrap();
        let e = env(EnvelopeKind::Constant { zeta: 0.1 });
        // ε/8 = 0.0625 < 0.1 can never be reached.
        assert_eq!(rdfe_cert_samples(&cfg, &e, 0.5, Fidelity::Low).unwrap(), None);
        let costs = CostModel::new(1.0, 10.0).unwrap();
        assert_eq!(rdfe_cert_cost(&cfg, &costs, &e, 0.5, Fidelity::Low).unwrap(), f64::INFINITY);
    }

    #[test]
    fn low_cert_matches_scan() {
        let cfg = ConfidenceConfig::new(0.5, 0.05, 4, 100_000).unwrap();
        let e = MismatchEnvelope::new(EnvelopeKind::PowerLaw { zeta: 0.2, r: 0.5 }, 100_000).unwrap();
        for eps in [1.0, 0.5, 0.25] {
            let got = rdfe_cert_samples(&cfg, &e, eps, Fidelity::Low).unwrap();
            let scan = (1..=100_000u64).find(|&n| cfg.radius(n).unwrap() + e.bound(n).unwrap() <= eps / 8.0);
            assert_eq!(got, scan, "eps = {}", eps);
        }
    }

    #[test]
    fn single_arm_finishes_immediately() {
        let ctx = PolicyContext {
            envelopes: vec![Arc::new(env(EnvelopeKind::Constant { zeta: 0.0 }))],
            costs: CostModel::new(1.0, 10.0).unwrap(),
            confidence: ConfidenceConfig::from_log_term(1.0).unwrap(),
        };
        let mut p = Rdfe::new(ctx);
        let mut s = PolicyState::new(1);
        s.low[0].push(0.3);
        s.high[0].push(0.3);
        assert!(p.propose(&s).is_none());
        assert_eq!(p.recommendation(&s), Some(0));
        assert!(p.phase_log().is_empty());
    }
}
