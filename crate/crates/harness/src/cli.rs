//! Command-line front end. Exit codes: 0 success, 1 negative verdict
//! (refuted, inapplicable, not constant), 2 usage error or missing file,
//! 3 parse or validation error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use modelcert_core::mdp::SolverSettings;

use crate::analysis::{
    certify_summary, compare_models, mpc_summary, simulation_summary, solve_summary,
    suffcheck_summary, synthesis_summary, Context, PolicyChoice, TerminalChoice,
};
use crate::builtins::{builtin, BUILTIN_NAMES};
use crate::error::HarnessError;
use crate::model_spec::{ModelSpec, BASELINE_MODELS};
use crate::report::Report;
use crate::scenario::{load_scenario, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Terminal {
    Vhat,
    Zero,
    File,
}

#[derive(Debug, Parser)]
#[command(name = "modelcert", version, about = "Certify and synthesize predictive models for finite MDPs")]
pub struct Cli {
    /// Value-iteration tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Master seed for Monte-Carlo simulation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the true MDP.
    Solve { scenario: String },
    /// Certify a model: does the model-based policy equal the optimal one?
    Certify {
        scenario: String,
        #[arg(long)]
        model: String,
    },
    /// Test whether E_true[V*] - E_model[V*] is constant.
    Suffcheck {
        scenario: String,
        #[arg(long)]
        model: String,
    },
    /// Build a value-matched model.
    Synthesize {
        scenario: String,
        #[arg(long)]
        deterministic: bool,
    },
    /// Finite-horizon MPC on a deterministic model.
    Mpc {
        scenario: String,
        /// Defaults to the scenario's mpc.horizon.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value_t = Terminal::Vhat)]
        terminal: Terminal,
        #[arg(long, default_value = "expectation")]
        model: String,
    },
    /// Monte-Carlo estimate of a policy's closed-loop cost.
    Simulate {
        scenario: String,
        /// `optimal` or a model spec whose canonical policy is simulated.
        #[arg(long, default_value = "optimal")]
        policy: String,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 200)]
        truncate: usize,
    },
    /// Compare the baseline models on a built-in scenario.
    Demo { name: String },
    /// Compare a list of models on a scenario.
    Compare {
        scenario: String,
        /// Comma-separated model specs.
        #[arg(long, default_value = "perfect,expectation,mle,synthesized-kernel")]
        models: String,
    },
    /// Print a built-in scenario as a scenario file.
    Export { name: String },
}

/// Loads a scenario file; a bare built-in name is accepted when no such file exists.
pub fn resolve_scenario(arg: &str) -> Result<Scenario, HarnessError> {
    if !Path::new(arg).exists() && BUILTIN_NAMES.contains(&arg) {
        return Ok(builtin(arg)?);
    }
    Ok(load_scenario(arg)?)
}

fn settings(tol: Option<f64>) -> Result<SolverSettings<f64>, HarnessError> {
    let base = SolverSettings::default();
    match tol {
        None => Ok(base),
        Some(t) if t > 0.0 && t.is_finite() => Ok(base.with_tol(t)),
        Some(t) => Err(HarnessError::Usage(format!("--tol must be positive, got {t}"))),
    }
}

struct Outcome {
    text: String,
    json: String,
    code: i32,
}

fn outcome<R: Report>(report: &R, code: i32) -> Outcome {
    Outcome {
        text: report.table(),
        json: report.json(),
        code,
    }
}

fn execute(cli: &Cli) -> Result<Outcome, HarnessError> {
    let settings = settings(cli.tol)?;
    let context = |arg: &str| Context::new(resolve_scenario(arg)?, settings);
    match &cli.command {
        Command::Solve { scenario } => Ok(outcome(&solve_summary(&context(scenario)?), 0)),
        Command::Certify { scenario, model } => {
            let ctx = context(scenario)?;
            let model = ctx.build(&model.parse()?)?;
            let r = certify_summary(&ctx, &model)?;
            let code = if r.verdict == "certified" { 0 } else { 1 };
            Ok(outcome(&r, code))
        }
        Command::Suffcheck { scenario, model } => {
            let ctx = context(scenario)?;
            let model = ctx.build(&model.parse()?)?;
            let r = suffcheck_summary(&ctx, &model)?;
            let code = if r.check.constant { 0 } else { 1 };
            Ok(outcome(&r, code))
        }
        Command::Synthesize {
            scenario,
            deterministic,
        } => Ok(outcome(&synthesis_summary(&context(scenario)?, *deterministic)?, 0)),
        Command::Mpc {
            scenario,
            horizon,
            terminal,
            model,
        } => {
            let ctx = context(scenario)?;
            let horizon = horizon
                .or_else(|| ctx.scenario.mpc.as_ref().map(|m| m.horizon))
                .ok_or_else(|| {
                    HarnessError::Usage("--horizon is required when the scenario has no mpc block".into())
                })?;
            let model = ctx.build(&model.parse()?)?;
            let terminal = match terminal {
                Terminal::Vhat => TerminalChoice::ModelValue,
                Terminal::Zero => TerminalChoice::Zero,
                Terminal::File => TerminalChoice::Scenario,
            };
            Ok(outcome(&mpc_summary(&ctx, &model, horizon, terminal)?, 0))
        }
        Command::Simulate {
            scenario,
            policy,
            episodes,
            truncate,
        } => {
            let ctx = context(scenario)?;
            let choice: PolicyChoice = policy.parse()?;
            let r = simulation_summary(&ctx, &choice, *episodes, *truncate, cli.seed)?;
            Ok(outcome(&r, 0))
        }
        Command::Demo { name } => {
            let ctx = Context::new(builtin(name)?, settings)?;
            Ok(outcome(&compare_models(&ctx, &BASELINE_MODELS)?, 0))
        }
        Command::Compare { scenario, models } => {
            let ctx = context(scenario)?;
            let specs = ModelSpec::parse_list(models)?;
            if specs.is_empty() {
                return Err(HarnessError::Usage("--models lists no model".into()));
            }
            Ok(outcome(&compare_models(&ctx, &specs)?, 0))
        }
        Command::Export { name } => {
            let json = builtin(name)?.to_json();
            Ok(Outcome {
                text: json.clone(),
                json,
                code: 0,
            })
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &out.json) {
                    eprintln!("modelcert: {}: {e}", path.display());
                    return 2;
                }
            }
            match cli.format {
                Format::Json => print!("{}", out.json),
                Format::Table => print!("{}", out.text),
            }
            out.code
        }
        Err(e) => {
            eprintln!("modelcert: {e}");
            e.exit_code()
        }
    }
}
