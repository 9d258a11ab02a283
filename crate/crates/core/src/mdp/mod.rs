//! Finite discounted MDPs: data layout, validation and exact solution.

mod bellman;
mod evaluate;

use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::scalar::{is_extended, stochastic_tolerance, Real};

pub use bellman::{
    advantage, apply_constraints, bellman_q, bellman_residual, greedy_policy_set, solve_bellman,
    value_iteration, SolveError, SolveReport, SolverSettings,
};
pub use evaluate::{evaluate_policy, EvalError, PolicyEvaluation};

/// Dense `n x m` table indexed by (state, action).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionTable<T> {
    n_states: usize,
    n_actions: usize,
    data: Vec<T>,
}

/// Optimal (or any) action-value function `Q(s, a)`.
pub type ActionValueFunction<T> = ActionTable<T>;

impl<T: Copy> ActionTable<T> {
    pub fn filled(n_states: usize, n_actions: usize, value: T) -> Self {
        Self {
            n_states,
            n_actions,
            data: vec![value; n_states * n_actions],
        }
    }

    /// Builds a table from row-major data. Panics on a length mismatch.
    pub fn from_vec(n_states: usize, n_actions: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n_states * n_actions, "action table shape");
        Self {
            n_states,
            n_actions,
            data,
        }
    }

    /// Builds a table from per-state rows; `None` when rows are ragged or empty.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let n_states = rows.len();
        let n_actions = rows.first()?.len();
        if rows.iter().any(|r| r.len() != n_actions) {
            return None;
        }
        Some(Self {
            n_states,
            n_actions,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                data.push(f(s, a));
            }
        }
        Self {
            n_states,
            n_actions,
            data,
        }
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> T {
        self.data[s * self.n_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, value: T) {
        self.data[s * self.n_actions + a] = value;
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[T] {
        &self.data[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n_actions.max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> ActionTable<U> {
        ActionTable {
            n_states: self.n_states,
            n_actions: self.n_actions,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &ActionTable<U>) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }
}

/// Transition kernel `p(s' | s, a)` stored as an `n x m x n` block.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T> {
    n_states: usize,
    n_actions: usize,
    data: Vec<T>,
}

impl<T: Real> Kernel<T> {
    /// Builds a kernel from nested `[s][a][s']` rows; `None` on ragged input.
    pub fn from_nested(rows: Vec<Vec<Vec<T>>>) -> Option<Self> {
        let n_states = rows.len();
        let n_actions = rows.first()?.len();
        let mut data = Vec::with_capacity(n_states * n_actions * n_states);
        for per_state in rows {
            if per_state.len() != n_actions {
                return None;
            }
            for row in per_state {
                if row.len() != n_states {
                    return None;
                }
                data.extend(row);
            }
        }
        Some(Self {
            n_states,
            n_actions,
            data,
        })
    }

    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(n_states * n_actions * n_states);
        for s in 0..n_states {
            for a in 0..n_actions {
                for next in 0..n_states {
                    data.push(f(s, a, next));
                }
            }
        }
        Self {
            n_states,
            n_actions,
            data,
        }
    }

    /// Kernel whose every row is a point mass on `successor(s, a)`.
    pub fn point_masses(
        n_states: usize,
        n_actions: usize,
        successor: impl Fn(usize, usize) -> usize,
    ) -> Self {
        Self::from_fn(n_states, n_actions, |s, a, next| {
            if successor(s, a) == next {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[T] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.data[start..start + self.n_states]
    }

    #[inline]
    pub fn row_mut(&mut self, s: usize, a: usize) -> &mut [T] {
        let start = (s * self.n_actions + a) * self.n_states;
        &mut self.data[start..start + self.n_states]
    }

    /// Successors with positive probability, in index order.
    pub fn support(&self, s: usize, a: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.row(s, a)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(j, &p)| (j, p))
    }

    /// `E[values(s+) | s, a]` under this kernel.
    pub fn expect(&self, s: usize, a: usize, values: &[T]) -> T {
        crate::scalar::expectation(self.row(s, a), values)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<T>>> {
        (0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| self.row(s, a).to_vec()).collect())
            .collect()
    }

    /// Every violation of the row-stochastic rule, in (s, a) order.
    pub fn violations(&self) -> Vec<Violation> {
        let tol = stochastic_tolerance::<T>(self.n_states);
        let mut out = Vec::new();
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.row(s, a);
                if let Some(next) = row.iter().position(|p| !p.is_finite()) {
                    out.push(Violation::NonFiniteProbability { s, a, next });
                    continue;
                }
                if let Some(next) = row.iter().position(|&p| p < T::zero()) {
                    out.push(Violation::NegativeProbability { s, a, next });
                }
                let sum = row.iter().fold(T::zero(), |acc, &p| acc + p);
                if (sum - T::one()).abs() > tol {
                    out.push(Violation::RowNotStochastic {
                        s,
                        a,
                        sum: sum.to_f64_lossy(),
                    });
                }
            }
        }
        out
    }
}

/// Extended-real value function `V(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction<T>(pub Vec<T>);

impl<T> Deref for ValueFunction<T> {
    type Target = Vec<T>;
    fn deref(&self) -> &Vec<T> {
        &self.0
    }
}

impl<T> DerefMut for ValueFunction<T> {
    fn deref_mut(&mut self) -> &mut Vec<T> {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for ValueFunction<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

/// Per-state tolerance-argmin action sets.
///
/// An empty set marks a state with no finite-cost action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicySet {
    sets: Vec<Vec<usize>>,
}

impl PolicySet {
    /// Sets must be sorted ascending.
    pub fn from_sets(sets: Vec<Vec<usize>>) -> Self {
        debug_assert!(sets.iter().all(|s| s.windows(2).all(|w| w[0] < w[1])));
        Self { sets }
    }

    pub fn n_states(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, s: usize) -> &[usize] {
        &self.sets[s]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn contains(&self, s: usize, a: usize) -> bool {
        self.sets[s].binary_search(&a).is_ok()
    }

    /// Lowest-index action of the set, `None` for infeasible states.
    pub fn canonical_action(&self, s: usize) -> Option<usize> {
        self.sets[s].first().copied()
    }

    pub fn canonical(&self) -> Vec<Option<usize>> {
        (0..self.sets.len()).map(|s| self.canonical_action(s)).collect()
    }

    /// Canonical actions, substituting action 0 where a state is infeasible.
    pub fn canonical_total(&self) -> Vec<usize> {
        self.canonical().into_iter().map(|a| a.unwrap_or(0)).collect()
    }

    pub fn is_infeasible(&self, s: usize) -> bool {
        self.sets[s].is_empty()
    }

    pub fn infeasible_states(&self) -> Vec<usize> {
        (0..self.sets.len()).filter(|&s| self.is_infeasible(s)).collect()
    }
}

/// A rule broken by an MDP description.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyStateSpace,
    EmptyActionSpace,
    ShapeMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    NonFiniteProbability { s: usize, a: usize, next: usize },
    NegativeProbability { s: usize, a: usize, next: usize },
    RowNotStochastic { s: usize, a: usize, sum: f64 },
    UnsupportedDiscount { gamma: f64 },
    InitialNotStochastic { sum: f64 },
    NegativeInitialMass { s: usize },
    InvalidCost { s: usize, a: usize },
    EmbeddingDimension {
        s: usize,
        expected: usize,
        found: usize,
    },
    NonFiniteEmbedding { s: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyStateSpace => write!(f, "EmptyStateSpace: at least one state required"),
            Violation::EmptyActionSpace => write!(f, "EmptyActionSpace: at least one action required"),
            Violation::ShapeMismatch {
                field,
                expected,
                found,
            } => write!(f, "ShapeMismatch: {field} has length {found}, expected {expected}"),
            Violation::NonFiniteProbability { s, a, next } => {
                write!(f, "NonFiniteProbability({s},{a}): entry {next} is not finite")
            }
            Violation::NegativeProbability { s, a, next } => {
                write!(f, "NegativeProbability({s},{a}): entry {next} is negative")
            }
            Violation::RowNotStochastic { s, a, sum } => {
                write!(f, "RowNotStochastic({s},{a}): row sums to {sum}")
            }
            Violation::UnsupportedDiscount { gamma } => {
                write!(f, "UnsupportedDiscount: gamma = {gamma} is outside (0, 1)")
            }
            Violation::InitialNotStochastic { sum } => {
                write!(f, "InitialNotStochastic: initial distribution sums to {sum}")
            }
            Violation::NegativeInitialMass { s } => {
                write!(f, "NegativeInitialMass: initial mass of state {s} is negative")
            }
            Violation::InvalidCost { s, a } => {
                write!(f, "InvalidCost({s},{a}): stage cost must be finite or +inf")
            }
            Violation::EmbeddingDimension { s, expected, found } => write!(
                f,
                "EmbeddingDimension: state {s} has dimension {found}, expected {expected}"
            ),
            Violation::NonFiniteEmbedding { s } => {
                write!(f, "NonFiniteEmbedding: state {s} has a non-finite coordinate")
            }
        }
    }
}

/// The true system: kernel, extended-real stage cost, discount, embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp<T> {
    pub kernel: Kernel<T>,
    pub stage_cost: ActionTable<T>,
    pub gamma: T,
    pub embeddings: Option<Vec<Vec<T>>>,
    pub initial_distribution: Vec<T>,
}

impl<T: Real> Mdp<T> {
    /// Uniform initial distribution, no embeddings.
    pub fn new(kernel: Kernel<T>, stage_cost: ActionTable<T>, gamma: T) -> Self {
        let n = kernel.n_states();
        let uniform = T::one() / T::from_usize(n.max(1)).unwrap_or(T::one());
        Self {
            kernel,
            stage_cost,
            gamma,
            embeddings: None,
            initial_distribution: vec![uniform; n],
        }
    }

    pub fn with_embeddings(mut self, embeddings: Vec<Vec<T>>) -> Self {
        self.embeddings = Some(embeddings);
        self
    }

    pub fn with_initial_distribution(mut self, rho0: Vec<T>) -> Self {
        self.initial_distribution = rho0;
        self
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.kernel.n_states()
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.kernel.n_actions()
    }

    /// Checks every invariant; an empty vector means the MDP is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n_states();
        let m = self.n_actions();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Violation::EmptyStateSpace);
        }
        if m == 0 {
            out.push(Violation::EmptyActionSpace);
        }
        if !out.is_empty() {
            return out;
        }
        out.extend(self.kernel.violations());

        if !(self.gamma > T::zero() && self.gamma < T::one()) {
            out.push(Violation::UnsupportedDiscount {
                gamma: self.gamma.to_f64_lossy(),
            });
        }

        if self.stage_cost.n_states() != n || self.stage_cost.n_actions() != m {
            out.push(Violation::ShapeMismatch {
                field: "stage_cost",
                expected: n * m,
                found: self.stage_cost.n_states() * self.stage_cost.n_actions(),
            });
        } else {
            for s in 0..n {
                for a in 0..m {
                    if !is_extended(self.stage_cost.get(s, a)) {
                        out.push(Violation::InvalidCost { s, a });
                    }
                }
            }
        }

        if self.initial_distribution.len() != n {
            out.push(Violation::ShapeMismatch {
                field: "initial_distribution",
                expected: n,
                found: self.initial_distribution.len(),
            });
        } else {
            for (s, &p) in self.initial_distribution.iter().enumerate() {
                if p < T::zero() {
                    out.push(Violation::NegativeInitialMass { s });
                }
            }
            let sum = self
                .initial_distribution
                .iter()
                .fold(T::zero(), |acc, &p| acc + p);
            if !sum.is_finite() || (sum - T::one()).abs() > stochastic_tolerance::<T>(n) {
                out.push(Violation::InitialNotStochastic {
                    sum: sum.to_f64_lossy(),
                });
            }
        }

        if let Some(emb) = &self.embeddings {
            if emb.len() != n {
                out.push(Violation::ShapeMismatch {
                    field: "embeddings",
                    expected: n,
                    found: emb.len(),
                });
            } else {
                let dim = emb[0].len();
                for (s, e) in emb.iter().enumerate() {
                    if e.len() != dim || dim == 0 {
                        out.push(Violation::EmbeddingDimension {
                            s,
                            expected: dim.max(1),
                            found: e.len(),
                        });
                    } else if e.iter().any(|x| !x.is_finite()) {
                        out.push(Violation::NonFiniteEmbedding { s });
                    }
                }
            }
        }
        out
    }

    /// `Ok(())` iff [`Mdp::validate`] reports nothing.
    pub fn check(&self) -> Result<(), Vec<Violation>> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Largest finite stage-cost magnitude (zero when none is finite).
    pub fn max_finite_cost(&self) -> T {
        self.stage_cost
            .as_slice()
            .iter()
            .filter(|c| c.is_finite())
            .fold(T::zero(), |acc, c| acc.max(c.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> Mdp<f64> {
        let kernel = Kernel::from_nested(vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ])
        .unwrap();
        let cost = ActionTable::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        Mdp::new(kernel, cost, 0.9).with_embeddings(vec![vec![0.0], vec![1.0]])
    }

    #[test]
    fn well_formed_mdp_has_no_violations() {
        assert!(two_state().validate().is_empty());
    }

    #[test]
    fn short_row_is_reported_with_its_index() {
        let mut mdp = two_state();
        mdp.kernel.row_mut(1, 0)[1] = 0.9;
        let v = mdp.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::RowNotStochastic { s: 1, a: 0, .. }));
    }

    #[test]
    fn discount_of_one_is_unsupported() {
        let mut mdp = two_state();
        mdp.gamma = 1.0;
        assert_eq!(
            mdp.validate(),
            vec![Violation::UnsupportedDiscount { gamma: 1.0 }]
        );
    }

    #[test]
    fn nan_and_negative_infinite_costs_rejected() {
        let mut mdp = two_state();
        mdp.stage_cost.set(0, 0, f64::NAN);
        mdp.stage_cost.set(1, 1, f64::NEG_INFINITY);
        mdp.stage_cost.set(1, 0, f64::INFINITY);
        let v = mdp.validate();
        assert_eq!(
            v,
            vec![
                Violation::InvalidCost { s: 0, a: 0 },
                Violation::InvalidCost { s: 1, a: 1 }
            ]
        );
    }

    #[test]
    fn negative_probability_and_bad_initial_mass() {
        let mut mdp = two_state();
        mdp.kernel.row_mut(0, 1).copy_from_slice(&[-0.5, 1.5]);
        mdp.initial_distribution = vec![0.7, 0.7];
        let v = mdp.validate();
        assert!(v.contains(&Violation::NegativeProbability { s: 0, a: 1, next: 0 }));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::InitialNotStochastic { .. })));
    }

    #[test]
    fn ragged_embeddings_rejected() {
        let mdp = two_state().with_embeddings(vec![vec![0.0], vec![1.0, 2.0]]);
        assert!(matches!(
            mdp.validate()[0],
            Violation::EmbeddingDimension { s: 1, .. }
        ));
    }

    #[test]
    fn policy_set_canonical_is_lowest_index() {
        let p = PolicySet::from_sets(vec![vec![1, 2], vec![], vec![0]]);
        assert_eq!(p.canonical(), vec![Some(1), None, Some(0)]);
        assert_eq!(p.canonical_total(), vec![1, 0, 0]);
        assert_eq!(p.infeasible_states(), vec![1]);
        assert!(p.contains(0, 2) && !p.contains(0, 0));
    }
}
