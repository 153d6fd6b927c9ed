use nscascade::environment::build_lower_bound_instance;
use nscascade::harness::{aggregate, derive_seed, per_epoch_regret, run_experiment, run_single};
use nscascade::{AttractionSchedule, AttractionVector, ExperimentConfig, PolicySpec};
use proptest::prelude::*;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn worker_count_does_not_change_results() {
    let c = config(
        r#"{"L": 8, "K": 3, "n": 3000, "runs_per_query": 4, "master_seed": 99, "trace_stride": 300,
            "environment": {"kind": "synthetic", "base": "linear",
                "perturbation": {"m1": 500, "m2": 1000, "num_cycles": 2}}}"#,
    );
    let a = run_experiment(&c, 1).unwrap();
    let b = run_experiment(&c, 3).unwrap();
    for (x, y) in a.policies.iter().zip(&b.policies) {
        assert_eq!(x.aggregate, y.aggregate);
        assert_eq!(x.spec, y.spec);
    }
}

#[test]
fn single_cell_has_zero_stderr() {
    let c = config(
        r#"{"L": 4, "K": 2, "n": 500, "runs_per_query": 1, "trace_stride": 50,
            "policies": [{"name": "cascade_kl_ucb"}],
            "environment": {"kind": "stationary", "base": {"vectors": [[0.5, 0.1, 0.4, 0.2]]}}}"#,
    );
    let r = run_experiment(&c, 1).unwrap();
    let p = &r.policies[0];
    assert!(p.aggregate.stderr.iter().all(|&s| s == 0.0));
    assert_eq!(p.aggregate.mean, p.traces[0].trace.cumulative);
    assert_eq!(p.aggregate.final_mean, p.traces[0].trace.final_regret);
}

#[test]
fn policies_share_the_schedule_within_a_cell() {
    // A random policy seed would change Exp3 but never the schedule; the
    // environment stream is separate from the policy and feedback streams.
    let seeds: Vec<u64> = (0..3).map(|s| derive_seed(7, 0, 0, s)).collect();
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
    let c = config(
        r#"{"L": 10, "K": 3, "n": 2000, "runs_per_query": 2, "master_seed": 7,
            "policies": [{"name": "cascade_ucb1"}, {"name": "cascade_ucb1"}],
            "environment": {"kind": "synthetic", "base": "linear",
                "perturbation": {"m1": 500, "m2": 500, "num_cycles": 2}}}"#,
    );
    let r = run_experiment(&c, 2).unwrap();
    // Identical policies on identical schedules and click streams give identical traces.
    assert_eq!(r.policies[0].aggregate, r.policies[1].aggregate);
}

#[test]
fn lower_bound_environment_runs() {
    let c = config(
        r#"{"L": 4, "K": 2, "n": 1000, "runs_per_query": 2, "trace_stride": 100,
            "policies": [{"name": "cascade_swucb", "tau": 100}],
            "environment": {"kind": "lower_bound", "p": 0.5, "delta": 0.2, "flip_steps": [300, 700]}}"#,
    );
    let r = run_experiment(&c, 1).unwrap();
    let epochs = r.policies[0].aggregate.epochs.as_ref().unwrap();
    assert_eq!(epochs.starts, vec![1, 300, 700]);
}

#[test]
fn aggregate_example() {
    let s =
        AttractionSchedule::constant(AttractionVector::new(vec![0.9, 0.1]).unwrap(), 10).unwrap();
    let mut fixed = PolicySpec::CascadeUcb1 {}.build(2, 1, 10, 0).unwrap();
    let mut t = run_single(&s, fixed.as_mut(), 1, 10, 0, 10).unwrap();
    let mut u = t.clone();
    t.cumulative = vec![10.0];
    t.final_regret = 10.0;
    u.cumulative = vec![20.0];
    u.final_regret = 20.0;
    let a = aggregate(&[t, u]).unwrap();
    assert_eq!(a.mean, vec![15.0]);
    assert!((a.stderr[0] - 5.0).abs() < 1e-12);
}

fn policy_strategy() -> impl Strategy<Value = PolicySpec> {
    prop_oneof![
        (0.6f64..1.0).prop_map(|g| PolicySpec::CascadeDucb {
            gamma: Some(g),
            epsilon: 0.5
        }),
        (1u64..200).prop_map(|t| PolicySpec::CascadeSwucb {
            tau: Some(t),
            epsilon: 0.5
        }),
        Just(PolicySpec::CascadeUcb1 {}),
        Just(PolicySpec::CascadeKlUcb {}),
        (0.0f64..=1.0).prop_map(|e| PolicySpec::RankedExp3 {
            exploration: Some(e)
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traces_are_monotone_and_epochs_fold_to_final(
        policy in policy_strategy(),
        half in 1usize..4,
        k_off in 0usize..3,
        p in 0.3f64..0.95,
        delta_frac in 0.05f64..1.0,
        flips in proptest::collection::btree_set(2u64..400, 0..4),
        seed in any::<u64>(),
        stride in 1u64..60,
    ) {
        let l = 2 * half;
        let k = (l - k_off.min(l - 1)).min(l);
        let flips: Vec<u64> = flips.into_iter().collect();
        let s = build_lower_bound_instance(l, p, p * delta_frac, &flips, 400).unwrap();
        let mut policy = policy.build(l, k, 400, seed).unwrap();
        let trace = run_single(&s, policy.as_mut(), k, 400, seed, stride).unwrap();
        prop_assert!(trace.cumulative.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*trace.steps.last().unwrap(), 400);
        prop_assert_eq!(*trace.cumulative.last().unwrap(), trace.final_regret);
        let epochs = per_epoch_regret(&trace, &s).unwrap();
        prop_assert_eq!(epochs.len(), flips.len() + 1);
        prop_assert!(epochs.iter().all(|&e| e >= 0.0));
        prop_assert_eq!(epochs.iter().fold(0.0, |a, e| a + e), trace.final_regret);
        // Per-step regret never exceeds the best reward, which is at most 1.
        prop_assert!(trace.final_regret <= 400.0);
    }
}
