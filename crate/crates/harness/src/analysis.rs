//! Report builders behind the CLI subcommands.

use modelcert_core::certificates::{
    certify_with_solution, check_sufficient_delta, modified_bellman_residual, CertificateReport,
    DeltaCheck,
};
use modelcert_core::mdp::{evaluate_policy, value_iteration, SolverSettings};
use modelcert_core::models::{
    solve_model_mdp, synthesize_value_matched_deterministic, synthesize_value_matched_kernel,
    SynthesisReport,
};
use modelcert_core::mpc::{
    build_mpc_tables, mpc_equals_model_mdp_check, mpc_modified_bellman_residual, TailReading,
};
use modelcert_core::certificates::lambda_value_matching;
use modelcert_core::{FiniteMdp, MpcScheme, SolveReport};
use rayon::prelude::*;

use crate::builtins::builtin;
use crate::error::HarnessError;
use crate::model_spec::{build_model, BuiltModel, ModelFile, ModelSpec, BASELINE_MODELS};
use crate::report::{
    canonical_labels, policy_labels, state_labels, table_rows, CertifySummary, ComparisonReport,
    DeltaReport, EnvelopeReport, ModelRow, MpcSummary, OptimalSummary, SimulationSummary,
    SolveSummary, SuffcheckSummary, SynthesisSummary, WitnessReport,
};
use crate::scenario::Scenario;
use crate::simulate::simulate_closed_loop;

/// A validated scenario with its solved true MDP.
pub struct Context {
    pub scenario: Scenario,
    pub mdp: FiniteMdp,
    pub truth: SolveReport,
    pub settings: SolverSettings<f64>,
    /// Exact `J(pi*)` of the canonical optimal policy.
    pub optimal_performance: f64,
}

impl Context {
    pub fn new(scenario: Scenario, settings: SolverSettings<f64>) -> Result<Self, HarnessError> {
        let mdp = scenario.to_mdp().map_err(|issues| {
            HarnessError::Scenario(crate::scenario::ScenarioError::Validation {
                path: scenario.name.clone(),
                issues,
            })
        })?;
        let truth = value_iteration(&mdp, &settings)?;
        let optimal_performance = performance(&mdp, &truth.policy.canonical_total())?;
        Ok(Self {
            scenario,
            mdp,
            truth,
            settings,
            optimal_performance,
        })
    }

    pub fn build(&self, spec: &ModelSpec) -> Result<BuiltModel, HarnessError> {
        build_model(spec, &self.mdp, &self.truth.values, &self.settings)
    }

    pub fn certify(&self, model: &BuiltModel) -> Result<CertificateReport<f64>, HarnessError> {
        Ok(certify_with_solution(
            &self.mdp,
            &model.kernel,
            self.truth.clone(),
            &self.settings,
        )?)
    }

    pub fn delta(&self, model: &BuiltModel) -> Result<DeltaCheck<f64>, HarnessError> {
        Ok(check_sufficient_delta(
            &self.mdp,
            &model.kernel,
            &self.truth.values,
            self.settings.argmin_tol,
        )?)
    }

    fn name(&self) -> String {
        self.scenario.name.clone()
    }
}

pub fn performance(mdp: &FiniteMdp, policy: &[usize]) -> Result<f64, HarnessError> {
    Ok(evaluate_policy(mdp, policy, &mdp.initial_distribution)?.performance)
}

pub fn solve_summary(ctx: &Context) -> SolveSummary {
    SolveSummary {
        scenario: ctx.name(),
        gamma: ctx.mdp.gamma,
        values: ctx.truth.values.0.clone(),
        q_values: table_rows(&ctx.truth.q_values),
        policy: policy_labels(&ctx.scenario, &ctx.truth.policy),
        bellman_residual: ctx.truth.bellman_residual,
        iterations: ctx.truth.iterations,
        performance: ctx.optimal_performance,
        state_names: ctx.scenario.states.iter().map(|s| s.label.clone()).collect(),
    }
}

pub fn certify_summary(ctx: &Context, model: &BuiltModel) -> Result<CertifySummary, HarnessError> {
    let cert = ctx.certify(model)?;
    let sc = &ctx.scenario;
    let residual = match (&cert.lambda, &cert.gap) {
        (Some(lambda), Some(gap)) => Some(modified_bellman_residual(
            model.kernel.kernel(),
            &ctx.mdp.stage_cost,
            ctx.mdp.gamma,
            gap,
            &lambda.shift_values(&cert.model_solution.values),
            &lambda.shift_q(&cert.model_solution.q_values),
        )),
        _ => None,
    };
    Ok(CertifySummary {
        scenario: ctx.name(),
        model: model.name.clone(),
        verdict: cert.verdict.as_str(),
        argmin_sets_equal: cert.argmin_sets_equal,
        compared_states: state_labels(sc, &cert.compared_states),
        omega: state_labels(sc, &cert.omega),
        modified_bellman_residual: residual,
        lambda: cert.lambda.as_ref().map(|l| l.values.clone()),
        gap_function: cert.gap.as_ref().map(table_rows),
        alpha: cert.alpha.as_ref().map(EnvelopeReport::from),
        beta: cert.beta.as_ref().map(EnvelopeReport::from),
        sandwich_slack: cert.sandwich_slack,
        witnesses: cert.witnesses.iter().map(|w| WitnessReport::new(sc, w)).collect(),
        true_policy: policy_labels(sc, &cert.true_solution.policy),
        model_policy: policy_labels(sc, &cert.model_solution.policy),
    })
}

pub fn suffcheck_summary(ctx: &Context, model: &BuiltModel) -> Result<SuffcheckSummary, HarnessError> {
    Ok(SuffcheckSummary {
        scenario: ctx.name(),
        model: model.name.clone(),
        check: DeltaReport::new(&ctx.scenario, &ctx.delta(model)?),
    })
}

pub fn synthesis_summary(ctx: &Context, deterministic: bool) -> Result<SynthesisSummary, HarnessError> {
    let report: SynthesisReport<f64> = if deterministic {
        synthesize_value_matched_deterministic(&ctx.mdp, &ctx.truth.values, &ctx.settings)?
    } else {
        synthesize_value_matched_kernel(&ctx.mdp, &ctx.truth.values, &ctx.settings)?
    };
    let sc = &ctx.scenario;
    Ok(SynthesisSummary {
        scenario: ctx.name(),
        kind: if deterministic { "deterministic" } else { "kernel" },
        verified: report.verified,
        max_matching_error: report
            .matching_error
            .as_slice()
            .iter()
            .fold(0.0, |acc: f64, &e| acc.max(e)),
        witnesses: report
            .witnesses
            .iter()
            .map(|&(s, a)| [sc.state_label(s).to_string(), sc.action_label(a).to_string()])
            .collect(),
        model: ModelFile::from_synthesized(&report.model),
    })
}

/// Terminal cost choice of the `mpc` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalChoice {
    /// The stationary model value `V_hat*`.
    ModelValue,
    Zero,
    /// The scenario's own `mpc.terminal_cost`.
    Scenario,
}

impl TerminalChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalChoice::ModelValue => "vhat",
            TerminalChoice::Zero => "zero",
            TerminalChoice::Scenario => "file",
        }
    }
}

pub fn mpc_summary(
    ctx: &Context,
    model: &BuiltModel,
    horizon: usize,
    terminal: TerminalChoice,
) -> Result<MpcSummary, HarnessError> {
    let det = model.deterministic.clone().ok_or_else(|| {
        HarnessError::Usage(format!(
            "MPC needs a deterministic model; {} is stochastic",
            model.name
        ))
    })?;
    let n = ctx.mdp.n_states();
    let model_solution = solve_model_mdp(&model.kernel, &ctx.mdp.stage_cost, ctx.mdp.gamma, &ctx.settings)?;
    let terminal_cost = match terminal {
        TerminalChoice::ModelValue => model_solution.values.0.clone(),
        TerminalChoice::Zero => vec![0.0; n],
        TerminalChoice::Scenario => ctx
            .scenario
            .mpc
            .as_ref()
            .map(|m| m.terminal_cost.clone())
            .ok_or_else(|| {
                HarnessError::Usage(format!(
                    "scenario {} has no mpc block to take the terminal cost from",
                    ctx.name()
                ))
            })?,
    };
    let terminal_set = ctx.scenario.terminal_mask();
    let scheme = MpcScheme::new(
        det,
        ctx.mdp.stage_cost.clone(),
        terminal_cost,
        terminal_set.as_deref(),
        horizon,
        ctx.mdp.gamma,
    )?;
    let tables = build_mpc_tables(&scheme, ctx.settings.argmin_tol);
    let eq = mpc_equals_model_mdp_check(&tables, &model_solution.q_values);
    let shifted_residual = lambda_value_matching(&ctx.truth.values, &model_solution.values)
        .ok()
        .and_then(|l| {
            mpc_modified_bellman_residual(&scheme, &tables, &l.values, TailReading::Continuation).ok()
        });
    let stationary_residual = (terminal == TerminalChoice::ModelValue && terminal_set.is_none())
        .then(|| {
            lambda_value_matching(&ctx.truth.values, &model_solution.values)
                .ok()
                .and_then(|l| {
                    mpc_modified_bellman_residual(&scheme, &tables, &l.values, TailReading::Stationary)
                        .ok()
                })
        })
        .flatten();
    let sc = &ctx.scenario;
    Ok(MpcSummary {
        scenario: ctx.name(),
        model: model.name.clone(),
        horizon,
        terminal: terminal.as_str().to_string(),
        terminal_set: sc.mpc.as_ref().and_then(|m| m.terminal_set.clone()),
        values: tables.value().to_vec(),
        policy: policy_labels(sc, &tables.policy),
        infeasible_states: state_labels(sc, &tables.policy.infeasible_states()),
        max_deviation_from_model_mdp: eq.max_deviation,
        equals_model_mdp: eq.equal,
        shifted_residual,
        stationary_residual,
        state_names: sc.states.iter().map(|s| s.label.clone()).collect(),
    })
}

/// Policy to simulate: the optimal one, or a model's canonical policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyChoice {
    Optimal,
    Model(ModelSpec),
}

impl std::str::FromStr for PolicyChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(PolicyChoice::Optimal),
            other => other.parse().map(PolicyChoice::Model),
        }
    }
}

pub fn policy_actions(ctx: &Context, choice: &PolicyChoice) -> Result<(String, Vec<usize>), HarnessError> {
    Ok(match choice {
        PolicyChoice::Optimal => ("optimal".into(), ctx.truth.policy.canonical_total()),
        PolicyChoice::Model(spec) => {
            let model = ctx.build(spec)?;
            let sol = solve_model_mdp(&model.kernel, &ctx.mdp.stage_cost, ctx.mdp.gamma, &ctx.settings)?;
            (model.name, sol.policy.canonical_total())
        }
    })
}

pub fn simulation_summary(
    ctx: &Context,
    choice: &PolicyChoice,
    episodes: usize,
    truncation: usize,
    seed: u64,
) -> Result<SimulationSummary, HarnessError> {
    let (name, policy) = policy_actions(ctx, choice)?;
    let exact = performance(&ctx.mdp, &policy)?;
    let estimate = simulate_closed_loop(&ctx.mdp, &policy, truncation, episodes, seed);
    Ok(SimulationSummary {
        scenario: ctx.name(),
        policy: name,
        actions: policy.iter().map(|&a| ctx.scenario.action_label(a).to_string()).collect(),
        exact_performance: exact,
        consistent: estimate.consistent_with(exact),
        estimate,
    })
}

fn model_row(ctx: &Context, spec: &ModelSpec) -> Result<ModelRow, HarnessError> {
    let model = ctx.build(spec)?;
    let cert = ctx.certify(&model)?;
    let delta = ctx.delta(&model)?;
    let j = performance(&ctx.mdp, &cert.model_solution.policy.canonical_total())?;
    let sc = &ctx.scenario;
    Ok(ModelRow {
        model: model.name.clone(),
        performance: j,
        gap: j - ctx.optimal_performance,
        verdict: cert.verdict.as_str(),
        argmin_sets_equal: cert.argmin_sets_equal,
        delta: DeltaReport::new(sc, &delta),
        synthesis_verified: model.synthesis.as_ref().map(|s| s.verified),
        omega: state_labels(sc, &cert.omega),
        policy: canonical_labels(sc, &cert.model_solution.policy),
        witnesses: cert.witnesses.iter().map(|w| WitnessReport::new(sc, w)).collect(),
    })
}

/// Runs the full pipeline for every model; rows are sorted by gap.
pub fn compare_models(ctx: &Context, specs: &[ModelSpec]) -> Result<ComparisonReport, HarnessError> {
    let rows: Vec<Result<ModelRow, HarnessError>> =
        specs.par_iter().map(|spec| model_row(ctx, spec)).collect();
    let mut models = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    models.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    Ok(ComparisonReport {
        scenario: ctx.name(),
        gamma: ctx.mdp.gamma,
        optimal: OptimalSummary {
            performance: ctx.optimal_performance,
            values: ctx.truth.values.0.clone(),
            policy: policy_labels(&ctx.scenario, &ctx.truth.policy),
        },
        models,
    })
}

/// Comparison of the baseline models on a built-in scenario.
pub fn run_builtin(name: &str, settings: SolverSettings<f64>) -> Result<ComparisonReport, HarnessError> {
    let ctx = Context::new(builtin(name)?, settings)?;
    compare_models(&ctx, &BASELINE_MODELS)
}
