//! Optimality certification for model-based controllers on finite MDPs.
//!
//! Given a true finite discounted MDP and a candidate predictive model
//! (stochastic kernel or deterministic successor map), this crate decides
//! whether the controller built on the model (the model-based MDP, or a
//! deterministic finite-horizon MPC scheme) selects exactly the optimal
//! actions of the true system, and synthesizes models that provably do.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod certificates;
mod linalg;
pub mod mdp;
pub mod models;
pub mod mpc;
pub mod scalar;

pub use certificates::{
    certify_argmin_equivalence, check_sufficient_delta, CertError, DeltaCheck, Verdict,
};
pub use mdp::{
    evaluate_policy, greedy_policy_set, value_iteration, ActionTable, Kernel, PolicySet,
    SolveError, SolverSettings, ValueFunction, Violation,
};
pub use models::{DeterministicModel, ModelError};
pub use mpc::MpcError;
pub use scalar::Real;

/// Finite MDP over `f64`.
pub type FiniteMdp = mdp::Mdp<f64>;
/// Finite MDP over `f32`.
pub type FiniteMdp32 = mdp::Mdp<f32>;
pub type StochasticModel = models::StochasticModel<f64>;
pub type SolveReport = mdp::SolveReport<f64>;
/// Model-based solutions share the layout of true ones.
pub type ModelSolveReport = mdp::SolveReport<f64>;
pub type SynthesisReport = models::SynthesisReport<f64>;
pub type CertificateReport = certificates::CertificateReport<f64>;
pub type LambdaShift = certificates::LambdaShift<f64>;
pub type KFunctionEnvelope = certificates::KFunctionEnvelope<f64>;
pub type MpcScheme = mpc::MpcScheme<f64>;
pub type MpcTables = mpc::MpcTables<f64>;
pub type OpenLoopSolution = mpc::OpenLoopSolution<f64>;
