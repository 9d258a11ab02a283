//! Candidate predictive models and their construction.
//!
//! A model is either a stochastic kernel over the same finite state set as the
//! true system or a deterministic successor map, which enters every analysis
//! through its point-mass kernel.

use thiserror::Error;

use crate::mdp::{
    bellman_q, greedy_policy_set, solve_bellman, ActionTable, Kernel, Mdp, PolicySet, SolveError,
    SolveReport, SolverSettings, Violation,
};
use crate::scalar::Real;

/// Matching slack below which a target counts as an attained value.
pub const EXACT_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("successor f({s},{a}) = {next} is not a state index (n = {n_states})")]
    IndexOutOfRange {
        s: usize,
        a: usize,
        next: usize,
        n_states: usize,
    },
    #[error("expectation fit needs state embeddings")]
    MissingEmbeddings,
    #[error("invalid model kernel: {0:?}")]
    InvalidKernel(Vec<Violation>),
    #[error("model shape {found:?} does not match the system shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("E[V*(s+)|{s},{a}] is infinite at a finite-cost pair")]
    UnboundedTarget { s: usize, a: usize },
    #[error("value function has {found} entries, expected {expected}")]
    ValueLength { expected: usize, found: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Deterministic successor map `f(s, a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicModel {
    n_states: usize,
    successor: ActionTable<usize>,
}

impl DeterministicModel {
    pub fn new(n_states: usize, successor: ActionTable<usize>) -> Result<Self, ModelError> {
        for s in 0..successor.n_states() {
            for a in 0..successor.n_actions() {
                let next = successor.get(s, a);
                if next >= n_states {
                    return Err(ModelError::IndexOutOfRange {
                        s,
                        a,
                        next,
                        n_states,
                    });
                }
            }
        }
        if successor.n_states() != n_states {
            return Err(ModelError::ShapeMismatch {
                expected: (n_states, successor.n_actions()),
                found: (successor.n_states(), successor.n_actions()),
            });
        }
        Ok(Self {
            n_states,
            successor,
        })
    }

    pub fn from_rows(rows: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let n = rows.len();
        let table = ActionTable::from_rows(rows).ok_or(ModelError::ShapeMismatch {
            expected: (n, 0),
            found: (n, 0),
        })?;
        Self::new(n, table)
    }

    #[inline]
    pub fn next(&self, s: usize, a: usize) -> usize {
        self.successor.get(s, a)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.successor.n_actions()
    }

    pub fn successor(&self) -> &ActionTable<usize> {
        &self.successor
    }
}

/// Stochastic predictive kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticModel<T> {
    kernel: Kernel<T>,
}

impl<T: Real> StochasticModel<T> {
    pub fn new(kernel: Kernel<T>) -> Result<Self, ModelError> {
        let violations = kernel.violations();
        if violations.is_empty() {
            Ok(Self { kernel })
        } else {
            Err(ModelError::InvalidKernel(violations))
        }
    }

    /// The true kernel of `mdp` taken as the model.
    pub fn perfect(mdp: &Mdp<T>) -> Self {
        Self {
            kernel: mdp.kernel.clone(),
        }
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn into_kernel(self) -> Kernel<T> {
        self.kernel
    }

    pub fn n_states(&self) -> usize {
        self.kernel.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.kernel.n_actions()
    }
}

/// Point-mass kernel of a deterministic model: row (s, a) is one-hot at `f(s, a)`.
pub fn as_dirac_kernel<T: Real>(model: &DeterministicModel) -> StochasticModel<T> {
    StochasticModel {
        kernel: Kernel::point_masses(model.n_states(), model.n_actions(), |s, a| model.next(s, a)),
    }
}

fn lowest_index_argmin<T: Real>(items: impl Iterator<Item = (usize, T)>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, key) in items {
        match best {
            Some((_, k)) if !(key < k) => {}
            _ => best = Some((i, key)),
        }
    }
    best.map(|(i, _)| i)
}

/// Projects the mean successor embedding onto the nearest state.
///
/// Ties in Euclidean distance go to the lowest state index.
pub fn expectation_fit<T: Real>(mdp: &Mdp<T>) -> Result<DeterministicModel, ModelError> {
    let embeddings = mdp.embeddings.as_ref().ok_or(ModelError::MissingEmbeddings)?;
    let n = mdp.n_states();
    let dim = embeddings.first().map_or(0, Vec::len);
    let table = ActionTable::from_fn(n, mdp.n_actions(), |s, a| {
        let mut mean = vec![T::zero(); dim];
        for (j, p) in mdp.kernel.support(s, a) {
            for (m, &x) in mean.iter_mut().zip(&embeddings[j]) {
                *m = *m + p * x;
            }
        }
        lowest_index_argmin(embeddings.iter().enumerate().map(|(j, e)| {
            let d2 = e
                .iter()
                .zip(&mean)
                .fold(T::zero(), |acc, (&x, &m)| acc + (x - m) * (x - m));
            (j, d2)
        }))
        .unwrap_or(s)
    });
    DeterministicModel::new(n, table)
}

/// Most likely successor of every pair, ties to the lowest index.
pub fn mle_fit<T: Real>(mdp: &Mdp<T>) -> DeterministicModel {
    let n = mdp.n_states();
    let table = ActionTable::from_fn(n, mdp.n_actions(), |s, a| {
        lowest_index_argmin(mdp.kernel.row(s, a).iter().map(|&p| -p).enumerate()).unwrap_or(s)
    });
    DeterministicModel::new(n, table).expect("argmax is a state index")
}

/// Bellman solution of the MDP whose dynamics are the model kernel.
pub fn solve_model_mdp<T: Real>(
    model: &StochasticModel<T>,
    stage_cost: &ActionTable<T>,
    gamma: T,
    settings: &SolverSettings<T>,
) -> Result<SolveReport<T>, SolveError> {
    solve_bellman(model.kernel(), stage_cost, gamma, settings)
}

/// A constructed model, deterministic or stochastic.
#[derive(Clone, Debug, PartialEq)]
pub enum SynthesizedModel<T> {
    Deterministic(DeterministicModel),
    Stochastic(StochasticModel<T>),
}

impl<T: Real> SynthesizedModel<T> {
    pub fn to_stochastic(&self) -> StochasticModel<T> {
        match self {
            SynthesizedModel::Deterministic(d) => as_dirac_kernel(d),
            SynthesizedModel::Stochastic(k) => k.clone(),
        }
    }
}

/// Outcome of a value-matching synthesis.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisReport<T> {
    pub model: SynthesizedModel<T>,
    /// `|E_true[V*] - E_model[V*]|` per pair (zero where both are infinite).
    pub matching_error: ActionTable<T>,
    /// Argmin sets of the solved model equal the true optimal sets.
    pub verified: bool,
    /// Pairs whose argmin membership differs between model and truth.
    pub witnesses: Vec<(usize, usize)>,
    pub model_solution: SolveReport<T>,
}

fn targets<T: Real>(mdp: &Mdp<T>, v_star: &[T]) -> Result<ActionTable<T>, ModelError> {
    if v_star.len() != mdp.n_states() {
        return Err(ModelError::ValueLength {
            expected: mdp.n_states(),
            found: v_star.len(),
        });
    }
    let table = ActionTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        mdp.kernel.expect(s, a, v_star)
    });
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            if !table.get(s, a).is_finite() && mdp.stage_cost.get(s, a).is_finite() {
                return Err(ModelError::UnboundedTarget { s, a });
            }
        }
    }
    Ok(table)
}

fn abs_gap<T: Real>(x: T, y: T) -> T {
    match (x.is_finite(), y.is_finite()) {
        (true, true) => (x - y).abs(),
        (false, false) => T::zero(),
        _ => T::infinity(),
    }
}

/// Solves the synthesized model and compares its argmin sets with the truth.
fn verify<T: Real>(
    mdp: &Mdp<T>,
    v_star: &[T],
    model: SynthesizedModel<T>,
    target: &ActionTable<T>,
    settings: &SolverSettings<T>,
) -> Result<SynthesisReport<T>, ModelError> {
    let kernel = model.to_stochastic();
    let matching_error = ActionTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        abs_gap(target.get(s, a), kernel.kernel().expect(s, a, v_star))
    });
    let model_solution = solve_model_mdp(&kernel, &mdp.stage_cost, mdp.gamma, settings)?;
    let q_star = bellman_q(&mdp.kernel, &mdp.stage_cost, mdp.gamma, v_star);
    let true_sets = greedy_policy_set(&q_star, settings.argmin_tol);
    let witnesses = argmin_disagreements(&true_sets, &model_solution.policy, mdp.n_actions());
    Ok(SynthesisReport {
        model,
        matching_error,
        verified: witnesses.is_empty(),
        witnesses,
        model_solution,
    })
}

/// Pairs in exactly one of the two argmin sets.
pub fn argmin_disagreements(a: &PolicySet, b: &PolicySet, n_actions: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for s in 0..a.n_states() {
        for act in 0..n_actions {
            if a.contains(s, act) != b.contains(s, act) {
                out.push((s, act));
            }
        }
    }
    out
}

/// Stochastic model with `E_model[V*] = E_true[V*]` at every pair.
///
/// Each row is a point mass on a state attaining the target value, or the
/// two-point mixture of the tightest bracketing values.
pub fn synthesize_value_matched_kernel<T: Real>(
    mdp: &Mdp<T>,
    v_star: &[T],
    settings: &SolverSettings<T>,
) -> Result<SynthesisReport<T>, ModelError> {
    let target = targets(mdp, v_star)?;
    let n = mdp.n_states();
    let exact = T::lit(EXACT_MATCH_TOL);
    let finite: Vec<usize> = (0..n).filter(|&j| v_star[j].is_finite()).collect();
    let mut kernel = Kernel::from_fn(n, mdp.n_actions(), |_, _, _| T::zero());

    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let t = target.get(s, a);
            let row = kernel.row_mut(s, a);
            if !t.is_finite() {
                row.copy_from_slice(mdp.kernel.row(s, a));
                continue;
            }
            if let Some(&j) = finite.iter().find(|&&j| (v_star[j] - t).abs() <= exact) {
                row[j] = T::one();
                continue;
            }
            // Largest value below, smallest value above; first index wins ties.
            let below = lowest_index_argmin(
                finite
                    .iter()
                    .filter(|&&j| v_star[j] <= t)
                    .map(|&j| (j, -v_star[j])),
            );
            let above = lowest_index_argmin(
                finite
                    .iter()
                    .filter(|&&j| v_star[j] >= t)
                    .map(|&j| (j, v_star[j])),
            );
            match (below, above) {
                (Some(lo), Some(hi)) => {
                    let w_hi = (t - v_star[lo]) / (v_star[hi] - v_star[lo]);
                    row[hi] = w_hi;
                    row[lo] = T::one() - w_hi;
                }
                // Rounding pushed the target just outside the attained range.
                (Some(j), None) | (None, Some(j)) => row[j] = T::one(),
                (None, None) => row.copy_from_slice(mdp.kernel.row(s, a)),
            }
        }
    }
    let model = SynthesizedModel::Stochastic(StochasticModel::new(kernel)?);
    verify(mdp, v_star, model, &target, settings)
}

/// Deterministic model sending each pair to the state whose `V*` is nearest
/// to `E_true[V*]`. Verification may fail: a finite state set cannot always
/// match every target.
pub fn synthesize_value_matched_deterministic<T: Real>(
    mdp: &Mdp<T>,
    v_star: &[T],
    settings: &SolverSettings<T>,
) -> Result<SynthesisReport<T>, ModelError> {
    let target = targets(mdp, v_star)?;
    let n = mdp.n_states();
    let fallback = mle_fit(mdp);
    let table = ActionTable::from_fn(n, mdp.n_actions(), |s, a| {
        let t = target.get(s, a);
        if !t.is_finite() {
            return fallback.next(s, a);
        }
        lowest_index_argmin(
            (0..n)
                .filter(|&j| v_star[j].is_finite())
                .map(|j| (j, (v_star[j] - t).abs())),
        )
        .unwrap_or_else(|| fallback.next(s, a))
    });
    let model = SynthesizedModel::Deterministic(DeterministicModel::new(n, table)?);
    verify(mdp, v_star, model, &target, settings)
}

/// Initial states whose model trajectories under `policy` keep the model
/// value finite for the first `horizon` steps (steps `0..horizon`).
///
/// States without a policy action end their branch.
pub fn check_assumption_omega<T: Real>(
    model: &StochasticModel<T>,
    v_hat: &[T],
    policy: &[Option<usize>],
    horizon: usize,
) -> Vec<usize> {
    let n = model.n_states();
    (0..n)
        .filter(|&origin| {
            let mut depth = vec![usize::MAX; n];
            let mut layer = vec![origin];
            depth[origin] = 0;
            for k in 0..horizon {
                if layer.iter().any(|&x| !v_hat[x].is_finite()) {
                    return false;
                }
                let mut next = Vec::new();
                for &x in &layer {
                    if let Some(a) = policy[x] {
                        for (j, _) in model.kernel().support(x, a) {
                            if depth[j] == usize::MAX {
                                depth[j] = k + 1;
                                next.push(j);
                            }
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                layer = next;
            }
            true
        })
        .collect()
}
