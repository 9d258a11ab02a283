//! Optimality certificates for a predictive model.
//!
//! The model MDP is shifted by `lambda = V* - V_hat*`, which leaves its
//! advantage function untouched, and the model advantage is compared with the
//! true advantage through a lower and an upper monotone envelope. Both
//! envelopes exist exactly when the zero sets of the two advantages coincide,
//! i.e. when the model-based policy set equals the optimal one.

mod certify;
mod delta;
mod envelope;
mod shift;

use thiserror::Error;

use crate::mdp::SolveError;

pub use certify::{certify_argmin_equivalence, certify_with_solution, CertificateReport, Verdict};
pub use delta::{check_sufficient_delta, DeltaCheck};
pub use envelope::{
    construct_alpha, construct_beta, AdvantagePairs, EnvelopeKind, KFunctionEnvelope, Witness,
    WitnessKind, ZeroSetViolation,
};
pub use shift::{
    gap_function, lambda_value_matching, modified_bellman_residual, shifted_advantage,
    LambdaShift,
};

#[derive(Debug, Error, PartialEq)]
pub enum CertError {
    #[error("no state has both a finite true value and a finite model value")]
    EmptyCommonDomain,
    #[error("lambda is infinite at state {state}, reached from ({s},{a})")]
    InfiniteLambdaOnSupport { s: usize, a: usize, state: usize },
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("envelope verdict disagrees with the direct argmin comparison")]
    Inconsistent,
    #[error(transparent)]
    Solve(#[from] SolveError),
}
