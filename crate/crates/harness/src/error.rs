use modelcert_core::mdp::EvalError;
use modelcert_core::{CertError, ModelError, MpcError, SolveError};
use thiserror::Error;

use crate::builtins::UnknownScenario;
use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    UnknownScenario(#[from] UnknownScenario),
    #[error("{path}: {message}")]
    ModelFile { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Certificate(#[from] CertError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// 2 for usage problems and missing files, 3 for inputs that fail to
    /// parse, validate or solve.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::UnknownScenario(_) | HarnessError::Io { .. } => 2,
            HarnessError::Scenario(ScenarioError::Io { .. }) => 2,
            HarnessError::ModelFile { message, .. } if message.starts_with("cannot read") => 2,
            _ => 3,
        }
    }
}
