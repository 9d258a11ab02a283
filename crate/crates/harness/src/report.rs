//! Machine-readable reports. Field order is fixed and no maps are used, so
//! identical inputs serialize to identical bytes.

use std::fmt::Write as _;

use modelcert_core::certificates::{DeltaCheck, KFunctionEnvelope, Witness, WitnessKind};
use modelcert_core::mdp::{ActionTable, PolicySet};
use serde::Serialize;

use crate::ext;
use crate::scenario::Scenario;
use crate::simulate::MonteCarloEstimate;

pub trait Report: Serialize {
    /// Human-readable rendering for `--format table`.
    fn table(&self) -> String;

    fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub state: String,
    pub action: String,
    pub kind: &'static str,
    #[serde(with = "ext::scalar")]
    pub a_star: f64,
    #[serde(with = "ext::scalar")]
    pub a_hat: f64,
}

impl WitnessReport {
    pub fn new(sc: &Scenario, w: &Witness<f64>) -> Self {
        Self {
            state: sc.state_label(w.s).to_string(),
            action: sc.action_label(w.a).to_string(),
            kind: match w.kind {
                WitnessKind::ModelZeroTruePositive => "model-optimal-truly-suboptimal",
                WitnessKind::TrueZeroModelPositive => "truly-optimal-model-suboptimal",
            },
            a_star: w.a_star,
            a_hat: w.a_hat,
        }
    }

    pub fn pair(&self) -> String {
        format!("({},{})", self.state, self.action)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub breakpoints: Vec<[f64; 2]>,
    pub extension_slope: f64,
}

impl From<&KFunctionEnvelope<f64>> for EnvelopeReport {
    fn from(e: &KFunctionEnvelope<f64>) -> Self {
        Self {
            breakpoints: e.breakpoints.iter().map(|&(x, y)| [x, y]).collect(),
            extension_slope: e.extension_slope,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaReport {
    pub constant: bool,
    #[serde(with = "ext::opt", skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(with = "ext::scalar")]
    pub spread: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pair: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_pair: Option<[String; 2]>,
}

impl DeltaReport {
    pub fn new(sc: &Scenario, d: &DeltaCheck<f64>) -> Self {
        let pair = |(s, a): (usize, usize)| {
            [sc.state_label(s).to_string(), sc.action_label(a).to_string()]
        };
        match *d {
            DeltaCheck::Constant { delta, spread } => Self {
                constant: true,
                delta: Some(delta),
                spread,
                min_pair: None,
                max_pair: None,
            },
            DeltaCheck::NotConstant {
                spread,
                min_pair,
                max_pair,
                ..
            } => Self {
                constant: false,
                delta: None,
                spread,
                min_pair: Some(pair(min_pair)),
                max_pair: Some(pair(max_pair)),
            },
        }
    }

    fn summary(&self) -> String {
        match self.delta {
            Some(d) => format!("const {}", fmt_num(d)),
            None => format!("spread {}", fmt_num(self.spread)),
        }
    }
}

/// Per-state argmin sets as action labels.
pub fn policy_labels(sc: &Scenario, p: &PolicySet) -> Vec<Vec<String>> {
    p.sets()
        .iter()
        .map(|set| set.iter().map(|&a| sc.action_label(a).to_string()).collect())
        .collect()
}

/// Lowest-index action per state; `None` where the set is empty.
pub fn canonical_labels(sc: &Scenario, p: &PolicySet) -> Vec<Option<String>> {
    p.canonical()
        .into_iter()
        .map(|a| a.map(|a| sc.action_label(a).to_string()))
        .collect()
}

pub fn state_labels(sc: &Scenario, states: &[usize]) -> Vec<String> {
    states.iter().map(|&s| sc.state_label(s).to_string()).collect()
}

pub fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x.abs() < 5e-7 {
        format!("{:.6}", 0.0)
    } else {
        format!("{x:.6}")
    }
}

fn fmt_set(set: &[String]) -> String {
    if set.is_empty() {
        "-".into()
    } else {
        set.join("|")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub scenario: String,
    pub gamma: f64,
    #[serde(with = "ext::vec")]
    pub values: Vec<f64>,
    #[serde(with = "ext::table")]
    pub q_values: Vec<Vec<f64>>,
    pub policy: Vec<Vec<String>>,
    pub bellman_residual: f64,
    pub iterations: usize,
    /// Exact closed-loop cost of the canonical optimal policy from the initial distribution.
    #[serde(with = "ext::scalar")]
    pub performance: f64,
    #[serde(skip)]
    pub state_names: Vec<String>,
}

impl Report for SolveSummary {
    fn table(&self) -> String {
        let mut out = format!(
            "scenario {}  gamma {}  J* {}  residual {:.3e}  iterations {}\n",
            self.scenario,
            self.gamma,
            fmt_num(self.performance),
            self.bellman_residual,
            self.iterations
        );
        let _ = writeln!(out, "{:<10} {:>14}  policy", "state", "V*");
        for (i, name) in self.state_names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<10} {:>14}  {}",
                name,
                fmt_num(self.values[i]),
                fmt_set(&self.policy[i])
            );
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifySummary {
    pub scenario: String,
    pub model: String,
    pub verdict: &'static str,
    pub argmin_sets_equal: bool,
    pub compared_states: Vec<String>,
    pub omega: Vec<String>,
    #[serde(with = "ext::opt", skip_serializing_if = "Option::is_none")]
    pub modified_bellman_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_function: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<EnvelopeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<EnvelopeReport>,
    #[serde(with = "ext::opt", skip_serializing_if = "Option::is_none")]
    pub sandwich_slack: Option<f64>,
    pub witnesses: Vec<WitnessReport>,
    pub true_policy: Vec<Vec<String>>,
    pub model_policy: Vec<Vec<String>>,
}

impl Report for CertifySummary {
    fn table(&self) -> String {
        let mut out = format!(
            "scenario {}  model {}  verdict {}\n",
            self.scenario, self.model, self.verdict
        );
        let _ = writeln!(
            out,
            "compared states {}  omega {}",
            self.compared_states.len(),
            self.omega.len()
        );
        if let Some(r) = self.modified_bellman_residual {
            let _ = writeln!(out, "modified Bellman residual {r:.3e}");
        }
        if let (Some(a), Some(b)) = (&self.alpha, &self.beta) {
            let _ = writeln!(
                out,
                "alpha breakpoints {}  beta breakpoints {}  slack {}",
                a.breakpoints.len(),
                b.breakpoints.len(),
                self.sandwich_slack.map(fmt_num).unwrap_or_default()
            );
        }
        for w in &self.witnesses {
            let _ = writeln!(
                out,
                "witness {} {}  A* {}  A_hat {}",
                w.pair(),
                w.kind,
                fmt_num(w.a_star),
                fmt_num(w.a_hat)
            );
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuffcheckSummary {
    pub scenario: String,
    pub model: String,
    pub check: DeltaReport,
}

impl Report for SuffcheckSummary {
    fn table(&self) -> String {
        let mut out = format!("scenario {}  model {}\n", self.scenario, self.model);
        match (&self.check.delta, &self.check.min_pair, &self.check.max_pair) {
            (Some(d), _, _) => {
                let _ = writeln!(out, "constant difference, delta {}", fmt_num(*d));
            }
            (None, Some(lo), Some(hi)) => {
                let _ = writeln!(
                    out,
                    "not constant, spread {} between ({},{}) and ({},{})",
                    fmt_num(self.check.spread),
                    lo[0],
                    lo[1],
                    hi[0],
                    hi[1]
                );
            }
            _ => {
                let _ = writeln!(out, "not constant, spread {}", fmt_num(self.check.spread));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisSummary {
    pub scenario: String,
    pub kind: &'static str,
    pub verified: bool,
    pub max_matching_error: f64,
    pub witnesses: Vec<[String; 2]>,
    pub model: crate::model_spec::ModelFile,
}

impl Report for SynthesisSummary {
    fn table(&self) -> String {
        let mut out = format!(
            "scenario {}  {} synthesis  verified {}  max matching error {:.3e}\n",
            self.scenario, self.kind, self.verified, self.max_matching_error
        );
        for [s, a] in &self.witnesses {
            let _ = writeln!(out, "witness ({s},{a})");
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MpcSummary {
    pub scenario: String,
    pub model: String,
    pub horizon: usize,
    pub terminal: String,
    pub terminal_set: Option<Vec<String>>,
    #[serde(with = "ext::vec")]
    pub values: Vec<f64>,
    pub policy: Vec<Vec<String>>,
    pub infeasible_states: Vec<String>,
    /// `max |Q^MPC - Q_hat*|` over all pairs.
    #[serde(with = "ext::scalar")]
    pub max_deviation_from_model_mdp: f64,
    pub equals_model_mdp: bool,
    /// Shifted residual with `lambda = V* - V_hat*`, continuation tail.
    #[serde(with = "ext::opt")]
    pub shifted_residual: Option<f64>,
    /// Stationary-tail residual; reported only for `T = V_hat*`.
    #[serde(with = "ext::opt", skip_serializing_if = "Option::is_none")]
    pub stationary_residual: Option<f64>,
    #[serde(skip)]
    pub state_names: Vec<String>,
}

impl Report for MpcSummary {
    fn table(&self) -> String {
        let mut out = format!(
            "scenario {}  model {}  N {}  terminal {}\n",
            self.scenario, self.model, self.horizon, self.terminal
        );
        let _ = writeln!(
            out,
            "max |Q_mpc - Q_hat| {}  equal {}",
            fmt_num(self.max_deviation_from_model_mdp),
            self.equals_model_mdp
        );
        let _ = writeln!(out, "{:<10} {:>14}  policy", "state", "V_mpc");
        for (i, name) in self.state_names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<10} {:>14}  {}",
                name,
                fmt_num(self.values[i]),
                fmt_set(&self.policy[i])
            );
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub scenario: String,
    pub policy: String,
    pub actions: Vec<String>,
    #[serde(with = "ext::scalar")]
    pub exact_performance: f64,
    pub estimate: MonteCarloEstimate,
    pub consistent: bool,
}

impl Report for SimulationSummary {
    fn table(&self) -> String {
        let e = &self.estimate;
        format!(
            "scenario {}  policy {}\nexact J {}\nestimate {} +- {} (episodes {}, K {}, tail bound {:.3e}, seed {})\nconsistent {}\n",
            self.scenario,
            self.policy,
            fmt_num(self.exact_performance),
            fmt_num(e.mean),
            fmt_num(e.standard_error),
            e.episodes,
            e.truncation,
            e.truncation_bound,
            e.seed,
            self.consistent
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimalSummary {
    #[serde(with = "ext::scalar")]
    pub performance: f64,
    #[serde(with = "ext::vec")]
    pub values: Vec<f64>,
    pub policy: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelRow {
    pub model: String,
    #[serde(with = "ext::scalar")]
    pub performance: f64,
    #[serde(with = "ext::scalar")]
    pub gap: f64,
    pub verdict: &'static str,
    pub argmin_sets_equal: bool,
    pub delta: DeltaReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesis_verified: Option<bool>,
    pub omega: Vec<String>,
    pub policy: Vec<Option<String>>,
    pub witnesses: Vec<WitnessReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub gamma: f64,
    pub optimal: OptimalSummary,
    /// Sorted by gap, ties in request order.
    pub models: Vec<ModelRow>,
}

impl ComparisonReport {
    pub fn row(&self, model: &str) -> Option<&ModelRow> {
        self.models.iter().find(|r| r.model == model)
    }
}

impl Report for ComparisonReport {
    fn table(&self) -> String {
        let mut out = format!(
            "scenario {}  gamma {}  J* {}\n",
            self.scenario,
            self.gamma,
            fmt_num(self.optimal.performance)
        );
        let _ = writeln!(
            out,
            "{:<26} {:>12} {:>12}  {:<12} {:<18} witnesses",
            "model", "J", "gap", "verdict", "delta"
        );
        for r in &self.models {
            let witnesses: Vec<String> = r.witnesses.iter().map(|w| w.pair()).collect();
            let _ = writeln!(
                out,
                "{:<26} {:>12} {:>12}  {:<12} {:<18} {}",
                r.model,
                fmt_num(r.performance),
                fmt_num(r.gap),
                r.verdict,
                r.delta.summary(),
                if witnesses.is_empty() { "-".into() } else { witnesses.join(" ") }
            );
        }
        out
    }
}

/// Rows of an `ActionTable` for serialization.
pub fn table_rows(t: &ActionTable<f64>) -> Vec<Vec<f64>> {
    t.to_rows()
}
