mod common;

use common::{swamp5, RISKY, SAFE, SWAMP5_V_STAR};
use modelcert_core::certificates::{
    certify_argmin_equivalence, check_sufficient_delta, gap_function, lambda_value_matching,
    modified_bellman_residual, DeltaCheck, Verdict, WitnessKind,
};
use modelcert_core::mdp::{evaluate_policy, value_iteration, ActionTable, PolicySet, SolverSettings};
use modelcert_core::models::{
    as_dirac_kernel, check_assumption_omega, expectation_fit, mle_fit, solve_model_mdp,
    synthesize_value_matched_deterministic, synthesize_value_matched_kernel, DeterministicModel,
    StochasticModel,
};
use modelcert_core::mpc::{
    build_mpc_tables, mpc_equals_model_mdp_check, mpc_modified_bellman_residual, open_loop_solve,
    MpcError, MpcScheme, TailReading,
};

fn settings() -> SolverSettings<f64> {
    SolverSettings::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn assert_vec(found: &[f64], expected: &[f64], tol: f64) {
    assert_eq!(found.len(), expected.len());
    for (i, (x, y)) in found.iter().zip(expected).enumerate() {
        assert!(close(*x, *y, tol), "entry {i}: {x} vs {y}");
    }
}

// Frozen from an exhaustive policy search with an independent linear solver.
const Q_STAR: [[f64; 2]; 5] = [
    [2.636_363_64, 1.818_181_82],
    [6.236_363_64, 1.818_181_82],
    [5.9, 5.818_181_82],
    [1.0, 1.818_181_82],
    [0.0, 0.0],
];
const V_HAT_EXPFIT: [f64; 5] = [6.31, 6.31, 5.9, 1.0, 0.0];
const Q_HAT_EXPFIT: [[f64; 2]; 5] = [
    [6.679, 6.31],
    [6.31, 6.31],
    [5.9, 10.31],
    [1.0, 6.31],
    [0.0, 0.0],
];
const J_STAR: f64 = 2.090_909_090_9;
const J_EXPFIT: f64 = 3.005_636_36;
const J_MLE_GAP: f64 = 1.886_890_91;

#[test]
fn optimal_values_and_policy() {
    let mdp = swamp5();
    let sol = value_iteration(&mdp, &settings()).unwrap();
    assert_vec(&sol.values, &SWAMP5_V_STAR, 1e-4);
    for s in 0..5 {
        assert_vec(sol.q_values.row(s), &Q_STAR[s], 1e-4);
    }
    assert!(sol.bellman_residual <= 1e-10);
    assert_eq!(
        sol.policy,
        PolicySet::from_sets(vec![vec![RISKY], vec![RISKY], vec![RISKY], vec![SAFE], vec![SAFE, RISKY]])
    );
    let brute = common::brute_force_values(&mdp, &mdp.kernel);
    assert_vec(&sol.values, &brute, 1e-8);
}

#[test]
fn optimal_performance() {
    let mdp = swamp5();
    let sol = value_iteration(&mdp, &settings()).unwrap();
    let eval = evaluate_policy(&mdp, &sol.policy.canonical_total(), &mdp.initial_distribution).unwrap();
    assert!(close(eval.performance, J_STAR, 1e-4));
    let all_safe = evaluate_policy(&mdp, &[SAFE; 5], &mdp.initial_distribution).unwrap();
    assert!(close(all_safe.performance, 3.977_8, 1e-3));
    assert!(close(all_safe.values[0], 6.679, 1e-3));
}

#[test]
fn expectation_fit_successors() {
    let mdp = swamp5();
    let fit = expectation_fit(&mdp).unwrap();
    let expected = DeterministicModel::from_rows(vec![
        vec![1, 2],
        vec![2, 2],
        vec![3, 2],
        vec![4, 2],
        vec![4, 4],
    ])
    .unwrap();
    assert_eq!(fit, expected);
}

#[test]
fn mle_fit_breaks_ties_by_lowest_index() {
    let mdp = swamp5();
    let fit = mle_fit(&mdp);
    // risky splits 0.5/0.5 between states 0 and 4
    for s in 0..4 {
        assert_eq!(fit.next(s, RISKY), 0);
        assert_eq!(fit.next(s, SAFE), s + 1);
    }
    assert_eq!(fit.next(4, SAFE), 4);
}

#[test]
fn expectation_fit_model_values() {
    let mdp = swamp5();
    let model = as_dirac_kernel::<f64>(&expectation_fit(&mdp).unwrap());
    let sol = solve_model_mdp(&model, &mdp.stage_cost, mdp.gamma, &settings()).unwrap();
    assert_vec(&sol.values, &V_HAT_EXPFIT, 1e-4);
    for s in 0..5 {
        assert_vec(sol.q_values.row(s), &Q_HAT_EXPFIT[s], 1e-4);
    }
    let eval = evaluate_policy(&mdp, &sol.policy.canonical_total(), &mdp.initial_distribution).unwrap();
    assert!(close(eval.performance - J_STAR, J_EXPFIT - J_STAR, 1e-4));
    assert!(close(eval.performance - J_STAR, 0.914_727_27, 1e-4));
}

#[test]
fn mle_fit_gap() {
    let mdp = swamp5();
    let model = as_dirac_kernel::<f64>(&mle_fit(&mdp));
    let sol = solve_model_mdp(&model, &mdp.stage_cost, mdp.gamma, &settings()).unwrap();
    let eval = evaluate_policy(&mdp, &sol.policy.canonical_total(), &mdp.initial_distribution).unwrap();
    assert!(close(eval.performance - J_STAR, J_MLE_GAP, 1e-4));
}

#[test]
fn expectation_fit_is_refuted_with_witness() {
    let mdp = swamp5();
    let model = as_dirac_kernel::<f64>(&expectation_fit(&mdp).unwrap());
    let report = certify_argmin_equivalence(&mdp, &model, &settings()).unwrap();
    assert_eq!(report.verdict, Verdict::Refuted);
    assert!(!report.argmin_sets_equal);
    let w = report
        .witnesses
        .iter()
        .find(|w| (w.s, w.a) == (1, SAFE))
        .expect("witness at state 1, safe");
    assert_eq!(w.kind, WitnessKind::ModelZeroTruePositive);
    assert!(close(w.a_star, 4.418_181_82, 1e-4));
    assert_eq!(w.a_hat, 0.0);

    let lambda = report.lambda.as_ref().unwrap();
    assert_vec(
        &lambda.values,
        &[-4.491_818_18, -4.491_818_18, -0.081_818_18, 0.0, 0.0],
        1e-4,
    );
    let gap = report.gap.as_ref().unwrap();
    assert!(close(gap.get(0, SAFE), -0.449_181_82, 1e-4));
}

#[test]
fn perfect_model_is_certified() {
    let mdp = swamp5();
    let report = certify_argmin_equivalence(&mdp, &StochasticModel::perfect(&mdp), &settings()).unwrap();
    assert_eq!(report.verdict, Verdict::Certified);
    assert!(report.argmin_sets_equal);
    assert!(report.witnesses.is_empty());
    let lambda = report.lambda.unwrap();
    assert!(lambda.values.iter().all(|x| x.abs() <= 1e-9));
    assert!(report.sandwich_slack.unwrap() >= 0.0);
    assert!(report.alpha.unwrap().is_well_formed());
    assert!(report.beta.unwrap().is_well_formed());
}

#[test]
fn modified_bellman_identity_and_negative_control() {
    let mdp = swamp5();
    let model = as_dirac_kernel::<f64>(&expectation_fit(&mdp).unwrap());
    let v_star = value_iteration(&mdp, &settings()).unwrap();
    let v_hat = solve_model_mdp(&model, &mdp.stage_cost, mdp.gamma, &settings()).unwrap();
    let lambda = lambda_value_matching(&v_star.values, &v_hat.values).unwrap();
    let q_l = lambda.shift_q(&v_hat.q_values);
    let v_l = lambda.shift_values(&v_hat.values);

    let gap = gap_function(&lambda.values, model.kernel(), mdp.gamma).unwrap();
    let r = modified_bellman_residual(model.kernel(), &mdp.stage_cost, mdp.gamma, &gap, &v_l, &q_l);
    assert!(r <= 1e-9, "residual {r}");

    let wrong_gap = gap_function(&lambda.values, &mdp.kernel, mdp.gamma).unwrap();
    let wrong =
        modified_bellman_residual(model.kernel(), &mdp.stage_cost, mdp.gamma, &wrong_gap, &v_l, &q_l);
    assert!(close(wrong, 1.947_68, 1e-4), "negative control {wrong}");
}

#[test]
fn delta_check_on_expectation_fit() {
    let mdp = swamp5();
    let model = as_dirac_kernel::<f64>(&expectation_fit(&mdp).unwrap());
    let v_star = value_iteration(&mdp, &settings()).unwrap().values;
    match check_sufficient_delta(&mdp, &model, &v_star, 1e-9).unwrap() {
        DeltaCheck::NotConstant { min_pair, min_value, .. } => {
            assert_eq!(min_pair, (0, RISKY));
            assert!(close(min_value, -4.909_090_91, 1e-4));
        }
        other => panic!("expected a varying difference, got {other:?}"),
    }
    let perfect = check_sufficient_delta(&mdp, &StochasticModel::perfect(&mdp), &v_star, 1e-9).unwrap();
    assert!(perfect.delta().unwrap().abs() <= 1e-9);
}

#[test]
fn synthesized_kernel_matches_and_verifies() {
    let mdp = swamp5();
    let v_star = value_iteration(&mdp, &settings()).unwrap().values;
    let report = synthesize_value_matched_kernel(&mdp, &v_star, &settings()).unwrap();
    assert!(report.verified);
    assert!(report.witnesses.is_empty());
    assert!(report.matching_error.as_slice().iter().all(|&e| e <= 1e-10));
    let kernel = report.model.to_stochastic();
    let row = kernel.kernel().row(0, RISKY);
    assert!(close(row[3], 10.0 / 11.0, 1e-4));
    assert!(close(row[4], 1.0 / 11.0, 1e-4));
    assert_eq!(kernel.kernel().row(0, SAFE), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    let cert = certify_argmin_equivalence(&mdp, &kernel, &settings()).unwrap();
    assert_eq!(cert.verdict, Verdict::Certified);
}

#[test]
fn synthesized_deterministic_misses_one_pair() {
    let mdp = swamp5();
    let v_star = value_iteration(&mdp, &settings()).unwrap().values;
    let report = synthesize_value_matched_deterministic(&mdp, &v_star, &settings()).unwrap();
    assert!(!report.verified);
    assert_eq!(report.witnesses, vec![(2, SAFE)]);
    assert_vec(&report.model_solution.values, &[1.9, 1.9, 5.9, 1.0, 0.0], 1e-4);
}

#[test]
fn omega_holds_for_fitted_models() {
    let mdp = swamp5();
    let policy = value_iteration(&mdp, &settings()).unwrap().policy.canonical();
    let model = as_dirac_kernel::<f64>(&expectation_fit(&mdp).unwrap());
    let v_hat = solve_model_mdp(&model, &mdp.stage_cost, mdp.gamma, &settings()).unwrap().values;
    assert_eq!(check_assumption_omega(&model, &v_hat, &policy, 5), vec![0, 1, 2, 3, 4]);
}

fn expfit_scheme(horizon: usize, terminal: Vec<f64>) -> MpcScheme<f64> {
    let mdp = swamp5();
    MpcScheme::new(expectation_fit(&mdp).unwrap(), mdp.stage_cost, terminal, None, horizon, 0.9).unwrap()
}

fn expfit_q() -> ActionTable<f64> {
    let mdp = swamp5();
    let model = as_dirac_kernel::<f64>(&expectation_fit(&mdp).unwrap());
    solve_model_mdp(&model, &mdp.stage_cost, mdp.gamma, &settings()).unwrap().q_values
}

#[test]
fn mpc_with_stationary_terminal_matches_model_mdp() {
    let q = expfit_q();
    let v_hat: Vec<f64> = q.rows().map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    for n in [1, 3, 7] {
        let scheme = expfit_scheme(n, v_hat.clone());
        let tables = build_mpc_tables(&scheme, 1e-9);
        let eq = mpc_equals_model_mdp_check(&tables, &q);
        assert!(eq.equal, "N={n}: {}", eq.max_deviation);
        assert!(eq.max_deviation <= 1e-8);
        assert_eq!(
            tables.policy.canonical(),
            vec![Some(RISKY), Some(SAFE), Some(SAFE), Some(SAFE), Some(SAFE)]
        );
    }
}

#[test]
fn mpc_zero_terminal_deviation() {
    let q = expfit_q();
    let v_hat: Vec<f64> = q.rows().map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    let fit = expectation_fit(&swamp5()).unwrap();
    let scheme = expfit_scheme(1, vec![0.0; 5]);
    let tables = build_mpc_tables(&scheme, 1e-9);
    let eq = mpc_equals_model_mdp_check(&tables, &q);
    let mut expected = 0.0_f64;
    for s in 0..5 {
        for a in 0..2 {
            expected = expected.max(0.9 * v_hat[fit.next(s, a)].abs());
        }
    }
    assert!(close(eq.max_deviation, expected, 1e-9));
    assert!(!eq.equal);
}

#[test]
fn mpc_terminal_set_unreachable() {
    let mdp = swamp5();
    let all_safe = DeterministicModel::from_rows(vec![
        vec![1, 1],
        vec![2, 2],
        vec![3, 3],
        vec![4, 4],
        vec![4, 4],
    ])
    .unwrap();
    let set = [false, false, false, false, true];
    let scheme = MpcScheme::new(all_safe, mdp.stage_cost, vec![0.0; 5], Some(&set), 2, 0.9).unwrap();
    let tables = build_mpc_tables(&scheme, 1e-9);
    assert_eq!(tables.value()[1], f64::INFINITY);
    assert!(tables.policy.is_infeasible(1));
    assert!(tables.value()[2].is_finite());
    assert_eq!(open_loop_solve(&scheme, &tables, 1, 1e-9).unwrap_err(), MpcError::Infeasible(1));
}

#[test]
fn open_loop_from_state_three() {
    let q = expfit_q();
    let v_hat: Vec<f64> = q.rows().map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    let scheme = expfit_scheme(2, v_hat);
    let tables = build_mpc_tables(&scheme, 1e-9);
    let ol = open_loop_solve(&scheme, &tables, 3, 1e-9).unwrap();
    assert_eq!(ol.states, vec![3, 4, 4]);
    assert_eq!(ol.inputs, vec![SAFE, SAFE]);
    assert!(close(ol.objective, 1.0, 1e-12));
}

#[test]
fn mpc_shifted_residual_for_several_offsets() {
    let mdp = swamp5();
    let v_star = value_iteration(&mdp, &settings()).unwrap().values;
    let q = expfit_q();
    let v_hat: Vec<f64> = q.rows().map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    let matching: Vec<f64> = v_star.iter().zip(&v_hat).map(|(a, b)| a - b).collect();
    for n in [1, 2, 5] {
        let scheme = expfit_scheme(n, vec![0.0; 5]);
        let tables = build_mpc_tables(&scheme, 1e-9);
        for lambda in [vec![0.0; 5], vec![3.5; 5], matching.clone()] {
            let r = mpc_modified_bellman_residual(&scheme, &tables, &lambda, TailReading::Continuation)
                .unwrap();
            assert!(r <= 1e-9, "N={n}: {r}");
        }
    }
    // The stationary reading is exact once the terminal cost is the model value.
    let scheme = expfit_scheme(4, v_hat);
    let tables = build_mpc_tables(&scheme, 1e-9);
    let r = mpc_modified_bellman_residual(&scheme, &tables, &matching, TailReading::Stationary).unwrap();
    assert!(r <= 1e-9);
}
