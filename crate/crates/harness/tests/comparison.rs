mod common;

use common::argmin_sets;
use modelcert::analysis::{compare_models, Context};
use modelcert::builtins::{cliff_forbidden, cliff_move, CLIFF_SIDE};
use modelcert::{builtin, run_builtin, ModelSpec, Report, BUILTIN_NAMES};
use modelcert_core::mdp::SolverSettings;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn settings() -> SolverSettings<f64> {
    SolverSettings::default()
}

#[test]
fn swamp5_gaps_match_the_exact_oracle() {
    let report = run_builtin("swamp5", settings()).unwrap();
    let names: Vec<&str> = report.models.iter().map(|r| r.model.as_str()).collect();
    assert_eq!(names, ["perfect", "synthesized-kernel", "expectation-fit", "mle-fit"]);
    assert!((report.optimal.performance - 2.090_909_090_9).abs() <= 1e-4);
    let gap = |m: &str| report.row(m).unwrap().gap;
    assert!(gap("perfect").abs() <= 1e-9);
    assert!(gap("synthesized-kernel").abs() <= 1e-8);
    assert!((gap("expectation-fit") - 0.9147).abs() <= 1e-3);
    assert!((gap("mle-fit") - 1.8869).abs() <= 1e-3);
    let expfit = report.row("expectation-fit").unwrap();
    assert_eq!(expfit.verdict, "refuted");
    assert!(expfit
        .witnesses
        .iter()
        .any(|w| w.state == "1" && w.action == "safe"));
    assert_eq!(
        report.optimal.policy,
        vec![vec!["risky"], vec!["risky"], vec!["risky"], vec!["safe"], vec!["safe", "risky"]]
    );
}

#[test]
fn perfect2_is_certified_everywhere() {
    let report = run_builtin("perfect2", settings()).unwrap();
    assert_eq!(report.models.len(), 4);
    for row in &report.models {
        assert_eq!(row.verdict, "certified", "{}", row.model);
        assert!(row.gap.abs() <= 1e-9);
        assert!(row.delta.constant);
    }
}

#[test]
fn deterministic_synthesis_on_swamp5_reports_its_witness() {
    let ctx = Context::new(builtin("swamp5").unwrap(), settings()).unwrap();
    let report = compare_models(&ctx, &[ModelSpec::SynthesizedDeterministic]).unwrap();
    let row = &report.models[0];
    assert_eq!(row.synthesis_verified, Some(false));
    assert_eq!(row.verdict, "refuted");
    let pairs: Vec<(String, String)> = row
        .witnesses
        .iter()
        .map(|w| (w.state.clone(), w.action.clone()))
        .collect();
    assert_eq!(pairs, vec![("2".to_string(), "safe".to_string())]);
    assert!(row.gap >= -1e-9);
}

#[test]
fn gaps_are_never_negative() {
    let all = [
        ModelSpec::Perfect,
        ModelSpec::Expectation,
        ModelSpec::Mle,
        ModelSpec::SynthesizedKernel,
        ModelSpec::SynthesizedDeterministic,
    ];
    for name in BUILTIN_NAMES {
        let ctx = Context::new(builtin(name).unwrap(), settings()).unwrap();
        let report = compare_models(&ctx, &all).unwrap();
        for row in &report.models {
            assert!(row.gap >= -1e-9, "{name}/{}: {}", row.model, row.gap);
        }
        let gaps: Vec<f64> = report.models.iter().map(|r| r.gap).collect();
        assert!(gaps.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn verdicts_agree_with_argmin_sets() {
    for name in BUILTIN_NAMES {
        let ctx = Context::new(builtin(name).unwrap(), settings()).unwrap();
        for spec in [ModelSpec::Expectation, ModelSpec::Mle, ModelSpec::SynthesizedDeterministic] {
            let model = ctx.build(&spec).unwrap();
            let cert = ctx.certify(&model).unwrap();
            let truth = argmin_sets(&ctx.truth.q_values, 1e-9);
            let hat = argmin_sets(&cert.model_solution.q_values, 1e-9);
            let equal = cert.compared_states.iter().all(|&s| truth[s] == hat[s]);
            assert_eq!(cert.verdict.as_str() == "certified", equal, "{name}/{spec}");
        }
    }
}

#[test]
fn cliffgrid_trajectories_avoid_masked_pairs() {
    let ctx = Context::new(builtin("cliffgrid").unwrap(), settings()).unwrap();
    let policy = ctx.truth.policy.canonical_total();
    let mask = ctx.scenario.constraint_mask.clone().unwrap();
    // every finite-value state uses an unmasked action
    for s in 0..ctx.mdp.n_states() {
        assert!(ctx.truth.values[s].is_finite());
        for &a in ctx.truth.policy.set(s) {
            assert!(!mask[s][a], "masked optimal pair ({s},{a})");
        }
    }
    // sampled closed-loop runs from the start never hit a masked pair
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let mut s = (CLIFF_SIDE - 1) * CLIFF_SIDE;
        for _ in 0..100 {
            let a = policy[s];
            assert!(!mask[s][a]);
            let (r, c) = (s / CLIFF_SIDE, s % CLIFF_SIDE);
            let (nr, nc) = cliff_move(r, c, a);
            assert!(!cliff_forbidden(nr, nc) || (nr, nc) == (r, c));
            if s != CLIFF_SIDE * CLIFF_SIDE - 1 && rng.gen_bool(0.9) {
                s = nr * CLIFF_SIDE + nc;
            }
        }
    }
    let report = run_builtin("cliffgrid", settings()).unwrap();
    for row in &report.models {
        assert!(row.performance.is_finite(), "{}", row.model);
    }
}

#[test]
fn reports_are_byte_identical() {
    for name in BUILTIN_NAMES {
        let a = run_builtin(name, settings()).unwrap().json();
        let b = run_builtin(name, settings()).unwrap().json();
        assert_eq!(a, b);
    }
}

#[test]
fn risky2_shows_the_fit_failure() {
    let report = run_builtin("risky2", settings()).unwrap();
    let expfit = report.row("expectation-fit").unwrap();
    assert_eq!(expfit.verdict, "refuted");
    assert_eq!(expfit.witnesses[0].state, "s0");
    assert_eq!(expfit.witnesses[0].action, "safe");
    // V*(s0) = 1 / (1 - 0.9 * 0.6)
    assert!((report.optimal.values[0] - 1.0 / 0.46).abs() <= 1e-8);
    assert_eq!(report.row("synthesized-kernel").unwrap().verdict, "certified");
}

#[test]
fn certified_model_need_not_have_constant_delta() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("optimist.json");
    // risky always succeeds in this model
    std::fs::write(&path, r#"{"kind":"deterministic","successor":[[0,1],[1,1]]}"#).unwrap();
    let ctx = Context::new(builtin("risky2").unwrap(), settings()).unwrap();
    let report = compare_models(&ctx, &[ModelSpec::File(path)]).unwrap();
    let row = &report.models[0];
    assert_eq!(row.verdict, "certified");
    assert!(!row.delta.constant);
    assert!(row.gap.abs() <= 1e-9);
}
