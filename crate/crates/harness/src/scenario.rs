//! Scenario files: a true MDP with labels, plus optional MPC and constraint data.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use modelcert_core::mdp::{apply_constraints, ActionTable, Kernel, Mdp, Violation};
use modelcert_core::FiniteMdp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcBlock {
    pub horizon: usize,
    #[serde(with = "ext::vec")]
    pub terminal_cost: Vec<f64>,
    /// State labels admissible at the end of the horizon; absent means all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_set: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub gamma: f64,
    pub states: Vec<StateSpec>,
    pub actions: Vec<String>,
    /// `kernel[s][a][s']`.
    pub kernel: Vec<Vec<Vec<f64>>>,
    #[serde(with = "ext::table")]
    pub stage_cost: Vec<Vec<f64>>,
    pub initial_distribution: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpc: Option<MpcBlock>,
    /// `true` marks a pair violating the constraints; it is folded into a
    /// `+inf` stage cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_mask: Option<Vec<Vec<bool>>>,
}

/// A reason a scenario is rejected after parsing.
#[derive(Clone, Debug, PartialEq)]
pub enum Issue {
    Mdp(Violation),
    DuplicateStateLabel(String),
    DuplicateActionLabel(String),
    MaskShape,
    MissingEmbedding { state: String },
    ZeroHorizon,
    TerminalCostLength { expected: usize, found: usize },
    InvalidTerminalCost { state: String },
    UnknownTerminalState(String),
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Mdp(v) => write!(f, "{v}"),
            Issue::DuplicateStateLabel(l) => write!(f, "DuplicateLabel: state label {l:?} used twice"),
            Issue::DuplicateActionLabel(l) => {
                write!(f, "DuplicateLabel: action label {l:?} used twice")
            }
            Issue::MaskShape => write!(f, "MaskShape: constraint_mask must be n_states x n_actions"),
            Issue::MissingEmbedding { state } => write!(
                f,
                "MissingEmbedding: state {state:?} has no embedding while others do"
            ),
            Issue::ZeroHorizon => write!(f, "ZeroHorizon: mpc.horizon must be at least 1"),
            Issue::TerminalCostLength { expected, found } => write!(
                f,
                "ShapeMismatch: mpc.terminal_cost has length {found}, expected {expected}"
            ),
            Issue::InvalidTerminalCost { state } => write!(
                f,
                "InvalidCost: terminal cost of {state:?} must be finite or +inf"
            ),
            Issue::UnknownTerminalState(l) => {
                write!(f, "UnknownState: mpc.terminal_set names {l:?}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: invalid scenario: {}", join_issues(.issues))]
    Validation { path: String, issues: Vec<Issue> },
}

fn join_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

fn shape(out: &mut Vec<Issue>, field: &'static str, expected: usize, found: usize) -> bool {
    if expected != found {
        out.push(Issue::Mdp(Violation::ShapeMismatch {
            field,
            expected,
            found,
        }));
        return false;
    }
    true
}

impl Scenario {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn state_label(&self, s: usize) -> &str {
        &self.states[s].label
    }

    pub fn action_label(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|st| st.label == label)
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == label)
    }

    /// Terminal-set indicator of the MPC block, if one is given.
    pub fn terminal_mask(&self) -> Option<Vec<bool>> {
        let set = self.mpc.as_ref()?.terminal_set.as_ref()?;
        let mut mask = vec![false; self.n_states()];
        for label in set {
            if let Some(s) = self.state_index(label) {
                mask[s] = true;
            }
        }
        Some(mask)
    }

    fn shape_issues(&self) -> Vec<Issue> {
        let n = self.n_states();
        let m = self.n_actions();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Issue::Mdp(Violation::EmptyStateSpace));
        }
        if m == 0 {
            out.push(Issue::Mdp(Violation::EmptyActionSpace));
        }
        if shape(&mut out, "kernel", n, self.kernel.len()) {
            for rows in &self.kernel {
                if !shape(&mut out, "kernel[s]", m, rows.len()) {
                    break;
                }
                if let Some(r) = rows.iter().find(|r| r.len() != n) {
                    shape(&mut out, "kernel[s][a]", n, r.len());
                    break;
                }
            }
        }
        if shape(&mut out, "stage_cost", n, self.stage_cost.len()) {
            if let Some(r) = self.stage_cost.iter().find(|r| r.len() != m) {
                shape(&mut out, "stage_cost[s]", m, r.len());
            }
        }
        shape(&mut out, "initial_distribution", n, self.initial_distribution.len());
        out
    }

    fn label_issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for st in &self.states {
            if !seen.insert(st.label.as_str()) {
                out.push(Issue::DuplicateStateLabel(st.label.clone()));
            }
        }
        let mut seen = HashSet::new();
        for a in &self.actions {
            if !seen.insert(a.as_str()) {
                out.push(Issue::DuplicateActionLabel(a.clone()));
            }
        }
        let with = self.states.iter().filter(|s| !s.embedding.is_empty()).count();
        if with > 0 && with < self.states.len() {
            for st in self.states.iter().filter(|s| s.embedding.is_empty()) {
                out.push(Issue::MissingEmbedding {
                    state: st.label.clone(),
                });
            }
        }
        out
    }

    fn extra_issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        if let Some(mask) = &self.constraint_mask {
            if mask.len() != self.n_states() || mask.iter().any(|r| r.len() != self.n_actions()) {
                out.push(Issue::MaskShape);
            }
        }
        if let Some(mpc) = &self.mpc {
            if mpc.horizon == 0 {
                out.push(Issue::ZeroHorizon);
            }
            if mpc.terminal_cost.len() != self.n_states() {
                out.push(Issue::TerminalCostLength {
                    expected: self.n_states(),
                    found: mpc.terminal_cost.len(),
                });
            }
            for (s, c) in mpc.terminal_cost.iter().enumerate() {
                if c.is_nan() || *c == f64::NEG_INFINITY {
                    let state = self.states.get(s).map(|st| st.label.clone()).unwrap_or_default();
                    out.push(Issue::InvalidTerminalCost { state });
                }
            }
            for label in mpc.terminal_set.iter().flatten() {
                if self.state_index(label).is_none() {
                    out.push(Issue::UnknownTerminalState(label.clone()));
                }
            }
        }
        out
    }

    fn build_mdp(&self) -> FiniteMdp {
        let n = self.n_states();
        let m = self.n_actions();
        let kernel = Kernel::from_nested(self.kernel.clone()).expect("kernel shape checked");
        let cost = ActionTable::from_rows(self.stage_cost.clone()).expect("cost shape checked");
        let cost = match &self.constraint_mask {
            Some(mask) => {
                let violated = ActionTable::from_fn(n, m, |s, a| mask[s][a]);
                apply_constraints(&cost, &violated)
            }
            None => cost,
        };
        let mut mdp = Mdp::new(kernel, cost, self.gamma)
            .with_initial_distribution(self.initial_distribution.clone());
        if self.states.iter().all(|s| !s.embedding.is_empty()) {
            mdp = mdp.with_embeddings(self.states.iter().map(|s| s.embedding.clone()).collect());
        }
        mdp
    }

    /// Every rule the scenario breaks; empty when it is usable.
    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = self.shape_issues();
        if issues.is_empty() {
            issues.extend(self.build_mdp().validate().into_iter().map(Issue::Mdp));
        }
        issues.extend(self.label_issues());
        issues.extend(self.extra_issues());
        issues
    }

    /// The true MDP with the constraint mask folded into the stage cost.
    pub fn to_mdp(&self) -> Result<FiniteMdp, Vec<Issue>> {
        let issues = self.validate();
        if issues.is_empty() {
            Ok(self.build_mdp())
        } else {
            Err(issues)
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Parses and validates; `origin` names the source in diagnostics.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
                path: origin.to_string(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        let issues = scenario.validate();
        if !issues.is_empty() {
            return Err(ScenarioError::Validation {
                path: origin.to_string(),
                issues,
            });
        }
        Ok(scenario)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: display.clone(),
        source,
    })?;
    Scenario::from_json(&text, &display)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json()).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}
