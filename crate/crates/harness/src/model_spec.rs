//! Model specifications accepted on the command line and in comparisons.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use modelcert_core::mdp::{Kernel, SolverSettings};
use modelcert_core::models::{
    as_dirac_kernel, expectation_fit, mle_fit, synthesize_value_matched_deterministic,
    synthesize_value_matched_kernel, SynthesizedModel,
};
use modelcert_core::{DeterministicModel, FiniteMdp, StochasticModel, SynthesisReport};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelSpec {
    Expectation,
    Mle,
    SynthesizedKernel,
    SynthesizedDeterministic,
    Perfect,
    File(PathBuf),
}

/// Models every comparison includes by default.
pub const BASELINE_MODELS: [ModelSpec; 4] = [
    ModelSpec::Perfect,
    ModelSpec::Expectation,
    ModelSpec::Mle,
    ModelSpec::SynthesizedKernel,
];

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Expectation => "expectation-fit".into(),
            ModelSpec::Mle => "mle-fit".into(),
            ModelSpec::SynthesizedKernel => "synthesized-kernel".into(),
            ModelSpec::SynthesizedDeterministic => "synthesized-deterministic".into(),
            ModelSpec::Perfect => "perfect".into(),
            ModelSpec::File(p) => format!("file:{}", p.display()),
        }
    }

    /// Parses a comma-separated list.
    pub fn parse_list(text: &str) -> Result<Vec<ModelSpec>, HarnessError> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ModelSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "expectation" | "expectation-fit" => ModelSpec::Expectation,
            "mle" | "mle-fit" => ModelSpec::Mle,
            "synthesized-kernel" => ModelSpec::SynthesizedKernel,
            "synthesized-deterministic" => ModelSpec::SynthesizedDeterministic,
            "perfect" => ModelSpec::Perfect,
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => ModelSpec::File(PathBuf::from(path)),
                _ => {
                    return Err(HarnessError::Usage(format!(
                        "unknown model {other:?} (expected expectation, mle, synthesized-kernel, \
                         synthesized-deterministic, perfect or file:<path>)"
                    )))
                }
            },
        })
    }
}

/// On-disk model: a successor table or a kernel `kernel[s][a][s']`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelFile {
    Deterministic { successor: Vec<Vec<usize>> },
    Stochastic { kernel: Vec<Vec<Vec<f64>>> },
}

impl ModelFile {
    pub fn from_synthesized(model: &SynthesizedModel<f64>) -> Self {
        match model {
            SynthesizedModel::Deterministic(d) => ModelFile::Deterministic {
                successor: d.successor().to_rows(),
            },
            SynthesizedModel::Stochastic(k) => ModelFile::Stochastic {
                kernel: k.kernel().to_nested(),
            },
        }
    }
}

/// Reads a model file; a report whose `model` field holds a model is also
/// accepted, so synthesis output can be fed back in.
pub fn load_model_file(path: &Path) -> Result<ModelFile, HarnessError> {
    let display = path.display().to_string();
    let err = |message: String| HarnessError::ModelFile {
        path: display.clone(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read file: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| err(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let inner = match value.get("model") {
        Some(m) if m.is_object() => m.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| err(e.to_string()))
}

/// A model ready for analysis.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub name: String,
    pub kernel: StochasticModel,
    /// Present when the model is a successor map (usable for MPC).
    pub deterministic: Option<DeterministicModel>,
    pub synthesis: Option<SynthesisReport>,
}

fn deterministic(name: String, d: DeterministicModel) -> BuiltModel {
    BuiltModel {
        name,
        kernel: as_dirac_kernel(&d),
        deterministic: Some(d),
        synthesis: None,
    }
}

/// Builds the model named by `spec` for `mdp`; `v_star` feeds synthesis.
pub fn build_model(
    spec: &ModelSpec,
    mdp: &FiniteMdp,
    v_star: &[f64],
    settings: &SolverSettings<f64>,
) -> Result<BuiltModel, HarnessError> {
    let name = spec.name();
    Ok(match spec {
        ModelSpec::Expectation => deterministic(name, expectation_fit(mdp)?),
        ModelSpec::Mle => deterministic(name, mle_fit(mdp)),
        ModelSpec::Perfect => BuiltModel {
            name,
            kernel: StochasticModel::perfect(mdp),
            deterministic: None,
            synthesis: None,
        },
        ModelSpec::SynthesizedKernel | ModelSpec::SynthesizedDeterministic => {
            let report = if *spec == ModelSpec::SynthesizedKernel {
                synthesize_value_matched_kernel(mdp, v_star, settings)?
            } else {
                synthesize_value_matched_deterministic(mdp, v_star, settings)?
            };
            let det = match &report.model {
                SynthesizedModel::Deterministic(d) => Some(d.clone()),
                SynthesizedModel::Stochastic(_) => None,
            };
            BuiltModel {
                name,
                kernel: report.model.to_stochastic(),
                deterministic: det,
                synthesis: Some(report),
            }
        }
        ModelSpec::File(path) => {
            let file = load_model_file(path)?;
            let shape_err = |message: String| HarnessError::ModelFile {
                path: path.display().to_string(),
                message,
            };
            match file {
                ModelFile::Deterministic { successor } => {
                    let d = DeterministicModel::from_rows(successor)
                        .map_err(|e| shape_err(e.to_string()))?;
                    if d.n_states() != mdp.n_states() || d.n_actions() != mdp.n_actions() {
                        return Err(shape_err(format!(
                            "model is {}x{}, scenario is {}x{}",
                            d.n_states(),
                            d.n_actions(),
                            mdp.n_states(),
                            mdp.n_actions()
                        )));
                    }
                    deterministic(name, d)
                }
                ModelFile::Stochastic { kernel } => {
                    let k = Kernel::from_nested(kernel)
                        .ok_or_else(|| shape_err("kernel is ragged".into()))?;
                    if k.n_states() != mdp.n_states() || k.n_actions() != mdp.n_actions() {
                        return Err(shape_err(format!(
                            "model is {}x{}, scenario is {}x{}",
                            k.n_states(),
                            k.n_actions(),
                            mdp.n_states(),
                            mdp.n_actions()
                        )));
                    }
                    let model = StochasticModel::new(k).map_err(|e| shape_err(e.to_string()))?;
                    BuiltModel {
                        name,
                        kernel: model,
                        deterministic: None,
                        synthesis: None,
                    }
                }
            }
        }
    })
}
