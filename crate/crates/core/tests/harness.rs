use mfbandit::config::EnvironmentSpec;
use mfbandit::harness::{run_experiment, simulate, summarize, SimulationOptions};
use mfbandit::{ExperimentConfig, Fidelity, Method, Preset};

fn small(preset: Preset) -> ExperimentConfig {
    let mut c = preset.config();
    if let EnvironmentSpec::Synthetic { arms, .. } = &mut c.environment {
        *arms = 8;
    }
    c.budget.total = 4000.0;
    c.budget.checkpoints = vec![1000.0, 2000.0, 4000.0];
    c.run.seeds = "0..6".parse().unwrap();
    c
}

#[test]
fn instances_are_bit_identical_per_seed() {
    for preset in [Preset::SetA, Preset::Residual500] {
        let c = small(preset);
        for seed in 0..4 {
            let a = c.build_instance(seed).unwrap();
            let b = c.build_instance(seed).unwrap();
            for (x, y) in a.arms.iter().zip(&b.arms) {
                assert_eq!(x.mu_high.to_bits(), y.mu_high.to_bits());
                assert_eq!(x.trajectory, y.trajectory);
                assert_eq!(x.envelope.kind(), y.envelope.kind());
            }
        }
    }
}

#[test]
fn methods_share_observation_noise() {
    // The first warm-start draws of every arm are identical across methods.
    let c = small(Preset::SetA);
    let cfg = c.confidence().unwrap();
    let params = c.tacc_params().unwrap();
    let inst = c.build_instance(3).unwrap();
    let opts = SimulationOptions { record_actions: true, ..Default::default() };
    let runs: Vec<_> = Method::ALL
        .iter()
        .map(|&m| simulate(&inst, m, &params, &cfg, 3, &opts).unwrap())
        .collect();
    let warm = 2 * inst.num_arms();
    for r in &runs[1..] {
        let a: Vec<_> = runs[0].actions[..warm].iter().map(|e| e.reward.to_bits()).collect();
        let b: Vec<_> = r.actions[..warm].iter().map(|e| e.reward.to_bits()).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn experiment_is_reproducible_and_thread_independent() {
    let mut c = small(Preset::SetA);
    c.run.jobs = 1;
    let one = run_experiment(&c).unwrap();
    c.run.jobs = 4;
    let four = run_experiment(&c).unwrap();
    assert_eq!(one, four);
    assert_eq!(one.len(), 6 * c.run.methods.len());
    assert!(one.iter().all(|r| r.checkpoints.len() == 3));
}

#[test]
fn summaries_pair_on_common_seeds() {
    let c = small(Preset::SetA);
    let stats = summarize(&run_experiment(&c).unwrap());
    for &b in &[1000.0, 2000.0, 4000.0] {
        let p = stats.pair(Method::Tacc, Method::Ucb, b).unwrap();
        assert_eq!(p.n, 6);
        assert!(p.ci_lo <= p.mean_diff && p.mean_diff <= p.ci_hi);
    }
}

#[test]
fn ucb_never_queries_low_after_warm_start() {
    let c = small(Preset::SetB);
    let cfg = c.confidence().unwrap();
    let params = c.tacc_params().unwrap();
    let inst = c.build_instance(1).unwrap();
    let t = simulate(&inst, Method::Ucb, &params, &cfg, 1, &SimulationOptions::default()).unwrap();
    assert_eq!(t.record.low_calls(), inst.num_arms() as u64);
    assert!(t.record.arms.iter().all(|a| a.continuation == 0));
    assert_eq!(t.state.total_calls(Fidelity::Low), inst.num_arms() as u64);
}

#[test]
fn too_small_budget_is_rejected() {
    let mut c = small(Preset::SetA);
    c.budget.total = 10.0;
    c.budget.checkpoints = vec![];
    assert!(run_experiment(&c).is_err());
}
