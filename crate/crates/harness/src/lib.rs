//! Scenario files, built-in examples, closed-loop simulation, model
//! comparison reports and the `modelcert` command line.

pub mod analysis;
pub mod builtins;
pub mod cli;
pub mod error;
pub mod ext;
pub mod model_spec;
pub mod report;
pub mod scenario;
pub mod simulate;

pub use analysis::{compare_models, run_builtin, Context};
pub use builtins::{builtin, UnknownScenario, BUILTIN_NAMES};
pub use error::HarnessError;
pub use model_spec::{ModelFile, ModelSpec, BASELINE_MODELS};
pub use report::{ComparisonReport, Report};
pub use scenario::{load_scenario, save_scenario, Issue, Scenario, ScenarioError};
pub use simulate::{simulate_closed_loop, MonteCarloEstimate};
