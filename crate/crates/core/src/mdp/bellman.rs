use thiserror::Error;

use super::{ActionTable, Kernel, Mdp, PolicySet, ValueFunction, Violation};
use crate::scalar::{sup_distance, Real};

/// Tolerances and iteration budget shared by the Bellman solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings<T> {
    /// Target Bellman residual of the returned pair (sup norm).
    pub tol: T,
    pub max_iter: usize,
    /// Absolute slack defining the argmin sets.
    pub argmin_tol: T,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 1_000_000,
            argmin_tol: T::lit(1e-9),
        }
    }
}

impl<T: Real> SolverSettings<T> {
    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_argmin_tol(mut self, argmin_tol: T) -> Self {
        self.argmin_tol = argmin_tol;
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("invalid MDP: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("value iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("V({s}) = {value} is not the row minimum {row_min} of Q")]
    MismatchedPair { s: usize, value: f64, row_min: f64 },
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Solution of a Bellman optimality system.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport<T> {
    pub values: ValueFunction<T>,
    pub q_values: ActionTable<T>,
    pub policy: PolicySet,
    /// `sup |Q - L - gamma E[V]|` of the returned pair.
    pub bellman_residual: T,
    pub iterations: usize,
}

/// Positive-mass entries of every kernel row, flattened for the inner loop.
struct SparseRows<T> {
    offsets: Vec<usize>,
    entries: Vec<(usize, T)>,
}

impl<T: Real> SparseRows<T> {
    fn new(kernel: &Kernel<T>) -> Self {
        let mut offsets = Vec::with_capacity(kernel.n_states() * kernel.n_actions() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for s in 0..kernel.n_states() {
            for a in 0..kernel.n_actions() {
                entries.extend(kernel.support(s, a));
                offsets.push(entries.len());
            }
        }
        Self { offsets, entries }
    }

    #[inline]
    fn expect(&self, pair: usize, values: &[T]) -> T {
        self.entries[self.offsets[pair]..self.offsets[pair + 1]]
            .iter()
            .fold(T::zero(), |acc, &(j, p)| acc + p * values[j])
    }
}

/// One Bellman backup `Q(s,a) = L(s,a) + gamma * E[V(s+) | s,a]`.
pub fn bellman_q<T: Real>(
    kernel: &Kernel<T>,
    stage_cost: &ActionTable<T>,
    gamma: T,
    values: &[T],
) -> ActionTable<T> {
    ActionTable::from_fn(kernel.n_states(), kernel.n_actions(), |s, a| {
        stage_cost.get(s, a) + gamma * kernel.expect(s, a, values)
    })
}

fn sparse_backup<T: Real>(
    rows: &SparseRows<T>,
    stage_cost: &ActionTable<T>,
    gamma: T,
    values: &[T],
) -> ActionTable<T> {
    let m = stage_cost.n_actions();
    ActionTable::from_fn(stage_cost.n_states(), m, |s, a| {
        stage_cost.get(s, a) + gamma * rows.expect(s * m + a, values)
    })
}

fn row_minima<T: Real>(q: &ActionTable<T>) -> Vec<T> {
    q.rows()
        .map(|r| r.iter().fold(T::infinity(), |acc, &x| acc.min(x)))
        .collect()
}

/// Sup-norm Bellman residual of a (V, Q) pair under `kernel`.
pub fn bellman_residual<T: Real>(
    kernel: &Kernel<T>,
    stage_cost: &ActionTable<T>,
    gamma: T,
    values: &[T],
    q_values: &ActionTable<T>,
) -> T {
    let backup = bellman_q(kernel, stage_cost, gamma, values);
    let q_gap = sup_distance(q_values.as_slice(), backup.as_slice());
    let v_gap = sup_distance(values, &row_minima(q_values));
    q_gap.max(v_gap)
}

/// Value iteration on an arbitrary kernel with an extended-real stage cost.
///
/// Stops once `|V_{k+1} - V_k| <= tol (1 - gamma) / (2 gamma)`, which bounds the
/// residual of the returned pair by `tol`. The returned `V` is exactly the
/// row minimum of the returned `Q`.
pub fn solve_bellman<T: Real>(
    kernel: &Kernel<T>,
    stage_cost: &ActionTable<T>,
    gamma: T,
    settings: &SolverSettings<T>,
) -> Result<SolveReport<T>, SolveError> {
    let n = kernel.n_states();
    let m = kernel.n_actions();
    if stage_cost.n_states() != n || stage_cost.n_actions() != m {
        return Err(SolveError::Shape("stage cost does not match kernel"));
    }
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(SolveError::Invalid(vec![Violation::UnsupportedDiscount {
            gamma: gamma.to_f64_lossy(),
        }]));
    }
    let rows = SparseRows::new(kernel);
    let threshold = settings.tol * (T::one() - gamma) / (T::lit(2.0) * gamma);

    let mut values = vec![T::zero(); n];
    let mut last_step = T::infinity();
    for iteration in 1..=settings.max_iter {
        let q = sparse_backup(&rows, stage_cost, gamma, &values);
        let next = row_minima(&q);
        last_step = sup_distance(&next, &values);
        values = next;
        if last_step <= threshold {
            let q_values = sparse_backup(&rows, stage_cost, gamma, &values);
            let values = row_minima(&q_values);
            let bellman_residual = bellman_residual(kernel, stage_cost, gamma, &values, &q_values);
            let policy = greedy_policy_set(&q_values, settings.argmin_tol);
            return Ok(SolveReport {
                values: ValueFunction(values),
                q_values,
                policy,
                bellman_residual,
                iterations: iteration,
            });
        }
    }
    Err(SolveError::NonConvergence {
        iterations: settings.max_iter,
        residual: (last_step * gamma / (T::one() - gamma)).to_f64_lossy(),
    })
}

/// Solves the Bellman optimality equations of a validated MDP.
pub fn value_iteration<T: Real>(
    mdp: &Mdp<T>,
    settings: &SolverSettings<T>,
) -> Result<SolveReport<T>, SolveError> {
    mdp.check().map_err(SolveError::Invalid)?;
    solve_bellman(&mdp.kernel, &mdp.stage_cost, mdp.gamma, settings)
}

/// Tolerance-argmin sets: `a` is kept iff `Q(s,a) <= min_a' Q(s,a') + tol`.
/// States whose every action is infinite get an empty set.
pub fn greedy_policy_set<T: Real>(q: &ActionTable<T>, tol: T) -> PolicySet {
    let sets = q
        .rows()
        .map(|row| {
            let best = row.iter().fold(T::infinity(), |acc, &x| acc.min(x));
            if !best.is_finite() {
                return Vec::new();
            }
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x <= best + tol)
                .map(|(a, _)| a)
                .collect()
        })
        .collect();
    PolicySet::from_sets(sets)
}

fn pair_tolerance<T: Real>(scale: T) -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) * T::one().max(scale.abs())
}

/// Advantage table `A(s,a) = Q(s,a) - V(s)`.
///
/// Rows of states with `V(s) = +inf` are filled with `+inf`.
pub fn advantage<T: Real>(
    q: &ActionTable<T>,
    values: &[T],
) -> Result<ActionTable<T>, SolveError> {
    if values.len() != q.n_states() {
        return Err(SolveError::Shape("value function does not match Q"));
    }
    for (s, row) in q.rows().enumerate() {
        let row_min = row.iter().fold(T::infinity(), |acc, &x| acc.min(x));
        let v = values[s];
        let consistent = match (v.is_finite(), row_min.is_finite()) {
            (true, true) => (v - row_min).abs() <= pair_tolerance(v),
            (false, false) => true,
            _ => false,
        };
        if !consistent {
            return Err(SolveError::MismatchedPair {
                s,
                value: v.to_f64_lossy(),
                row_min: row_min.to_f64_lossy(),
            });
        }
    }
    Ok(ActionTable::from_fn(q.n_states(), q.n_actions(), |s, a| {
        let v = values[s];
        if v.is_finite() {
            q.get(s, a) - v
        } else {
            T::infinity()
        }
    }))
}

/// Folds a constraint-violation mask into the stage cost: masked pairs cost `+inf`.
pub fn apply_constraints<T: Real>(
    stage_cost: &ActionTable<T>,
    violated: &ActionTable<bool>,
) -> ActionTable<T> {
    assert!(stage_cost.same_shape(violated), "constraint mask shape");
    ActionTable::from_fn(stage_cost.n_states(), stage_cost.n_actions(), |s, a| {
        if violated.get(s, a) {
            T::infinity()
        } else {
            stage_cost.get(s, a)
        }
    })
}
