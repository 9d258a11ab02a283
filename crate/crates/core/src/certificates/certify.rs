use crate::mdp::{greedy_policy_set, value_iteration, ActionTable, Mdp, SolveReport, SolverSettings};
use crate::models::{check_assumption_omega, solve_model_mdp, StochasticModel};
use crate::scalar::Real;

use super::envelope::{
    construct_alpha, construct_beta, AdvantagePairs, KFunctionEnvelope, Witness,
};
use super::shift::{gap_function, lambda_value_matching, shifted_advantage, LambdaShift};
use super::CertError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Model argmin sets equal the true ones on every compared state.
    Certified,
    /// Some zero-set inclusion fails; witnesses name the pairs.
    Refuted,
    /// No state keeps both value functions finite along model trajectories.
    Inapplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::Refuted => "refuted",
            Verdict::Inapplicable => "inapplicable",
        }
    }
}

/// Everything the certification pipeline computed.
#[derive(Clone, Debug)]
pub struct CertificateReport<T> {
    pub verdict: Verdict,
    pub lambda: Option<LambdaShift<T>>,
    pub gap: Option<ActionTable<T>>,
    pub alpha: Option<KFunctionEnvelope<T>>,
    pub beta: Option<KFunctionEnvelope<T>>,
    pub witnesses: Vec<Witness<T>>,
    pub omega: Vec<usize>,
    /// States where both `V*` and `V_hat*` are finite.
    pub compared_states: Vec<usize>,
    pub true_solution: SolveReport<T>,
    pub model_solution: SolveReport<T>,
    pub true_advantage: ActionTable<T>,
    pub model_advantage: Option<ActionTable<T>>,
    /// Direct comparison of the tolerance-argmin sets on `compared_states`.
    pub argmin_sets_equal: bool,
    /// Smallest sandwich slack over finite pairs, when both envelopes exist.
    pub sandwich_slack: Option<T>,
}

/// Solves both MDPs and decides whether the model-based policy set equals
/// the optimal one, producing envelopes or zero-set witnesses.
///
/// The Assumption set is computed for trajectories of length `n_states`.
pub fn certify_argmin_equivalence<T: Real>(
    mdp: &Mdp<T>,
    model: &StochasticModel<T>,
    settings: &SolverSettings<T>,
) -> Result<CertificateReport<T>, CertError> {
    let true_solution = value_iteration(mdp, settings)?;
    certify_with_solution(mdp, model, true_solution, settings)
}

/// As [`certify_argmin_equivalence`], reusing an existing true solution.
pub fn certify_with_solution<T: Real>(
    mdp: &Mdp<T>,
    model: &StochasticModel<T>,
    true_solution: SolveReport<T>,
    settings: &SolverSettings<T>,
) -> Result<CertificateReport<T>, CertError> {
    if model.n_states() != mdp.n_states() || model.n_actions() != mdp.n_actions() {
        return Err(CertError::Shape("model does not match system"));
    }
    let model_solution = solve_model_mdp(model, &mdp.stage_cost, mdp.gamma, settings)?;
    let true_advantage = shifted_advantage(&true_solution.q_values, &true_solution.values)?;

    let omega = check_assumption_omega(
        model,
        &model_solution.values,
        &true_solution.policy.canonical(),
        mdp.n_states(),
    );
    let lambda = match lambda_value_matching(&true_solution.values, &model_solution.values) {
        Ok(l) => Some(l),
        Err(CertError::EmptyCommonDomain) => None,
        Err(e) => return Err(e),
    };
    let compared_states = lambda.as_ref().map(|l| l.domain_states()).unwrap_or_default();

    let mut report = CertificateReport {
        verdict: Verdict::Inapplicable,
        lambda: None,
        gap: None,
        alpha: None,
        beta: None,
        witnesses: Vec::new(),
        omega,
        compared_states,
        true_solution,
        model_solution,
        true_advantage,
        model_advantage: None,
        argmin_sets_equal: false,
        sandwich_slack: None,
    };
    let Some(lambda) = lambda else {
        return Ok(report);
    };
    if report.omega.is_empty() {
        report.lambda = Some(lambda);
        return Ok(report);
    }

    let gap = gap_function(&lambda.values, model.kernel(), mdp.gamma)?;
    let q_hat_lambda = lambda.shift_q(&report.model_solution.q_values);
    let v_hat_lambda = lambda.shift_values(&report.model_solution.values);
    let model_advantage = shifted_advantage(&q_hat_lambda, &v_hat_lambda)?;

    let pairs = AdvantagePairs::new(
        &report.true_advantage,
        &model_advantage,
        &report.compared_states,
        settings.argmin_tol,
    );
    let alpha = construct_alpha(&pairs);
    let beta = construct_beta(&pairs);

    let true_sets = greedy_policy_set(&report.true_solution.q_values, settings.argmin_tol);
    let model_sets = greedy_policy_set(&report.model_solution.q_values, settings.argmin_tol);
    report.argmin_sets_equal = report
        .compared_states
        .iter()
        .all(|&s| true_sets.set(s) == model_sets.set(s));

    match (alpha, beta) {
        (Ok(alpha), Ok(beta)) => {
            let slack = pairs.sandwich_slack(&alpha, &beta);
            report.verdict = if slack >= T::zero() && alpha.is_well_formed() && beta.is_well_formed()
            {
                Verdict::Certified
            } else {
                Verdict::Refuted
            };
            report.sandwich_slack = Some(slack);
            report.alpha = Some(alpha);
            report.beta = Some(beta);
        }
        (alpha, beta) => {
            report.verdict = Verdict::Refuted;
            for outcome in [alpha.err(), beta.err()].into_iter().flatten() {
                report.witnesses.extend(outcome.witnesses);
            }
            report.witnesses.sort_by_key(|w| (w.s, w.a));
            report.alpha = None;
            report.beta = None;
        }
    }

    report.lambda = Some(lambda);
    report.gap = Some(gap);
    report.model_advantage = Some(model_advantage);

    if (report.verdict == Verdict::Certified) != report.argmin_sets_equal {
        return Err(CertError::Inconsistent);
    }
    Ok(report)
}
