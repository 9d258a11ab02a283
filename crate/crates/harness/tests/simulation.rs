use modelcert::analysis::{performance, Context};
use modelcert::{builtin, simulate_closed_loop};
use modelcert_core::mdp::SolverSettings;

fn swamp5() -> Context {
    Context::new(builtin("swamp5").unwrap(), SolverSettings::default()).unwrap()
}

#[test]
fn zero_cost_absorbing_start_gives_exactly_zero() {
    let ctx = swamp5();
    let mdp = ctx.mdp.clone().with_initial_distribution(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    let est = simulate_closed_loop(&mdp, &ctx.truth.policy.canonical_total(), 200, 1000, 7);
    assert_eq!(est.mean, 0.0);
    assert_eq!(est.standard_error, 0.0);
}

#[test]
fn same_seed_is_bit_identical_across_thread_counts() {
    let ctx = swamp5();
    let policy = ctx.truth.policy.canonical_total();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_closed_loop(&ctx.mdp, &policy, 200, 20_000, 42))
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.standard_error.to_bits(), b.standard_error.to_bits());
    let c = simulate_closed_loop(&ctx.mdp, &policy, 200, 20_000, 43);
    assert_ne!(a.mean.to_bits(), c.mean.to_bits());
}

#[test]
fn truncation_bound_comes_from_the_scenario() {
    let ctx = swamp5();
    let est = simulate_closed_loop(&ctx.mdp, &ctx.truth.policy.canonical_total(), 10, 10, 1);
    // max finite cost 5, gamma 0.9
    assert!((est.truncation_bound - 0.9_f64.powi(10) * 5.0 / 0.1).abs() <= 1e-12);
    assert_eq!(est.truncation, 10);
    assert_eq!(est.episodes, 10);
    assert_eq!(est.seed, 1);
}

#[test]
fn estimates_are_consistent_in_repeated_seeds() {
    let ctx = swamp5();
    let mut consistent = 0;
    for (policy, name) in [
        (ctx.truth.policy.canonical_total(), "optimal"),
        (vec![0; 5], "all safe"),
    ] {
        let exact = performance(&ctx.mdp, &policy).unwrap();
        for seed in 0..50 {
            let est = simulate_closed_loop(&ctx.mdp, &policy, 200, 2_000, seed);
            if est.consistent_with(exact) {
                consistent += 1;
            } else {
                eprintln!("{name} seed {seed}: {} vs {exact}", est.mean);
            }
        }
    }
    assert!(consistent >= 99, "{consistent} of 100");
}

#[test]
fn short_truncation_stays_within_its_bound() {
    let ctx = swamp5();
    let policy = vec![0; 5];
    let exact = performance(&ctx.mdp, &policy).unwrap();
    let est = simulate_closed_loop(&ctx.mdp, &policy, 3, 5_000, 9);
    assert!(est.mean < exact);
    assert!(est.consistent_with(exact));
}
