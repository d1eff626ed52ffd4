use std::sync::Arc;

use proptest::prelude::*;

use mfbandit::env::{ArmSpec, BiasProfile, EnvelopeKind, MismatchEnvelope, NoiseModel};
use mfbandit::harness::{simulate, SimulationOptions};
use mfbandit::policy::{initialize, step, tacc_select_arm, IndexRule, OptimisticPolicy, PolicyContext, StepOutcome};
use mfbandit::{BanditInstance, ConfidenceConfig, CostModel, Fidelity, Method, PolicyState, Reason, TaccParams};

fn envelope_kind() -> impl Strategy<Value = EnvelopeKind> {
    prop_oneof![
        (0.0..1.0f64, 0.1..1.5f64).prop_map(|(zeta, r)| EnvelopeKind::PowerLaw { zeta, r }),
        (-0.1..0.1f64, -0.5..0.5f64, 0..20u64, 0.2..1.2f64)
            .prop_map(|(b, a, n0, r)| EnvelopeKind::Residual { b, a, n0, r }),
        (0.0..0.3f64).prop_map(|zeta| EnvelopeKind::Constant { zeta }),
    ]
}

fn trajectory(kind: &EnvelopeKind, sign: f64) -> BiasProfile {
    match *kind {
        EnvelopeKind::PowerLaw { zeta, r } => BiasProfile::PowerLaw { sign, zeta, r },
        EnvelopeKind::Residual { b, a, n0, r } => BiasProfile::Residual { b, a, n0, r },
        EnvelopeKind::Constant { zeta } => BiasProfile::Constant { offset: sign * zeta },
        EnvelopeKind::TabulatedPrefix { .. } => unreachable!(),
    }
}

#[derive(Debug, Clone)]
struct Setup {
    arms: Vec<(f64, EnvelopeKind, f64)>,
    high_cost: f64,
    gamma: f64,
    s0: u64,
    rho: f64,
    budget: f64,
    seed: u64,
}

fn setup() -> impl Strategy<Value = Setup> {
    (
        prop::collection::vec((0.1..0.9f64, envelope_kind(), prop::bool::ANY), 1..6),
        2.0..40.0f64,
        0.05..0.4f64,
        0.02..1.0f64,
        200.0..4000.0f64,
        any::<u64>(),
    )
        .prop_flat_map(|(arms, high_cost, gamma, rho, budget, seed)| {
            let max_s0 = (high_cost.floor() as u64).max(1);
            (1..=max_s0).prop_map(move |s0| Setup {
                arms: arms
                    .iter()
                    .map(|(mu, k, neg)| (*mu, k.clone(), if *neg { -1.0 } else { 1.0 }))
                    .collect(),
                high_cost,
                gamma,
                s0,
                rho,
                budget,
                seed,
            })
        })
}

struct Built {
    instance: BanditInstance,
    cfg: ConfidenceConfig,
    params: TaccParams,
}

fn build(s: &Setup) -> Option<Built> {
    let costs = CostModel::new(1.0, s.high_cost).unwrap();
    if costs.warm_start(s.arms.len()) > s.budget {
        return None;
    }
    let horizon = costs.query_horizon(s.budget);
    let arms = s
        .arms
        .iter()
        .map(|(mu, kind, sign)| {
            let env = Arc::new(MismatchEnvelope::new(kind.clone(), horizon).unwrap());
            ArmSpec::new(*mu, env, trajectory(kind, *sign))
        })
        .collect();
    let instance = BanditInstance::new(arms, costs, NoiseModel::Gaussian { sigma: 0.5 }, false).unwrap();
    let cfg = ConfidenceConfig::for_budget(s.rho, 0.05, s.arms.len(), &costs, s.budget).unwrap();
    let params = TaccParams::new(s.gamma, 1e-4, s.s0, s.budget, &costs).unwrap();
    Some(Built { instance, cfg, params })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_is_nonincreasing_and_dominates_averages(kind in envelope_kind(), h in 1..3000u64) {
        let env = MismatchEnvelope::new(kind, h).unwrap();
        for n in 1..h {
            prop_assert!(env.bound(n + 1).unwrap() <= env.bound(n).unwrap());
        }
        for n in 1..=h {
            prop_assert!(env.bound(n).unwrap() >= env.cumulative(n).unwrap() / n as f64);
        }
    }

    #[test]
    fn n_gamma_matches_scan(rho in 0.01..3.0f64, arms in 1..50usize, horizon in 1..50_000u64, gamma in 0.05..1.5f64) {
        let cfg = ConfidenceConfig::new(rho, 0.05, arms, horizon).unwrap();
        let scan = (1u64..).find(|&n| cfg.radius(n).unwrap() < gamma).unwrap();
        prop_assert_eq!(cfg.n_gamma(gamma).unwrap(), scan);
    }

    #[test]
    fn run_invariants(s in setup(), method in prop::sample::select(Method::ALL.to_vec())) {
        let Some(b) = build(&s) else { return Ok(()) };
        let opts = SimulationOptions { record_actions: true, checkpoints: vec![s.budget / 4.0, s.budget / 2.0, s.budget], ..Default::default() };
        let t = simulate(&b.instance, method, &b.params, &b.cfg, s.seed, &opts).unwrap();
        let costs = b.instance.costs;
        let rec = &t.record;

        // Budget and cost conservation.
        prop_assert!(rec.cost <= s.budget + 1e-9);
        let paid = costs.low * rec.low_calls() as f64 + costs.high * rec.high_calls() as f64;
        prop_assert!((paid - rec.cost).abs() <= 1e-9 * (1.0 + rec.cost));

        // Regret replayed from the action log.
        let gaps = b.instance.gaps();
        let replay: f64 = t.actions.iter().map(|e| costs.of(e.action.fidelity) * gaps[e.action.arm]).sum();
        prop_assert!((replay - rec.regret).abs() <= 1e-9 * (1.0 + rec.regret));

        // Continuation block size.
        for a in &rec.arms {
            prop_assert!(a.continuation <= s.s0);
        }

        // Checkpoints are monotone and end at the final state.
        for w in rec.checkpoints.windows(2) {
            prop_assert!(w[0].regret <= w[1].regret);
            prop_assert!(w[0].low_calls <= w[1].low_calls);
            prop_assert!(w[0].high_calls <= w[1].high_calls);
        }
        let last = rec.checkpoints.last().unwrap();
        prop_assert_eq!(last.regret, rec.regret);
        prop_assert_eq!(last.low_calls, rec.low_calls());

        // Reason labels agree with the fidelity rule.
        let n_gamma = b.cfg.n_gamma(s.gamma).unwrap();
        for e in &t.actions {
            match e.action.reason {
                Reason::PreThresholdLow => {
                    prop_assert_eq!(e.action.fidelity, Fidelity::Low);
                    prop_assert!(e.low_count_before < n_gamma);
                }
                Reason::ContinuationLow => {
                    prop_assert_eq!(e.action.fidelity, Fidelity::Low);
                    prop_assert!(e.low_count_before >= n_gamma);
                    prop_assert_eq!(method, Method::Tacc);
                }
                Reason::Escalate => {
                    prop_assert_eq!(e.action.fidelity, Fidelity::High);
                }
                Reason::Initialization | Reason::Scheduled => {}
            }
            if method == Method::Ucb && e.action.reason != Reason::Initialization {
                prop_assert_eq!(e.action.fidelity, Fidelity::High);
            }
        }
    }

    #[test]
    fn cached_arm_choice_matches_scratch(s in setup()) {
        let Some(b) = build(&s) else { return Ok(()) };
        let ctx = PolicyContext::from_instance(&b.instance, b.cfg);
        let envelopes = ctx.envelopes.clone();
        let mut policy = OptimisticPolicy::new(IndexRule::Tacc, ctx, b.params);
        let mut state = PolicyState::new(b.instance.num_arms());
        let mut streams = mfbandit::env::ObservationStreams::new(s.seed, b.instance.num_arms());
        initialize(&mut policy, &mut state, &b.instance, &mut streams, s.budget).unwrap();
        loop {
            prop_assert_eq!(policy.select_arm(), tacc_select_arm(&state, &b.cfg, &envelopes));
            match step(&mut policy, &mut state, &b.instance, &mut streams, s.budget).unwrap() {
                StepOutcome::Queried { .. } => {}
                StepOutcome::Halted(_) => break,
            }
        }
    }
}
