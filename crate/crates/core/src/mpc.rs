//! Deterministic finite-horizon MPC on a finite state set.
//!
//! The horizon-`N` problem
//! `min gamma^N T(x_N) + sum_k gamma^k L(x_k, u_k)` s.t. `x_{k+1} = f(x_k, u_k)`
//! is solved for every initial state at once by backward dynamic programming.
//! Constraints enter as `+inf` stage costs and the terminal set as `+inf`
//! terminal cost outside it, so infeasibility shows up as `V = +inf`.

use thiserror::Error;

use crate::mdp::{greedy_policy_set, ActionTable, PolicySet};
use crate::models::DeterministicModel;
use crate::scalar::{is_extended, sup_distance, Real};

/// Largest `|Q^MPC - Q_hat*|` accepted as agreement.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum MpcError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("discount {0} is outside (0, 1)")]
    UnsupportedDiscount(f64),
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("cost entry {0} is NaN or -inf")]
    InvalidCost(&'static str),
    #[error("state {0} cannot reach the terminal set at finite cost")]
    Infeasible(usize),
    #[error("lambda is not finite at state {0}")]
    InfiniteLambda(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpcScheme<T> {
    model: DeterministicModel,
    stage_cost: ActionTable<T>,
    /// Terminal cost with the terminal set already folded in.
    terminal_cost: Vec<T>,
    horizon: usize,
    gamma: T,
}

impl<T: Real> MpcScheme<T> {
    /// `terminal_set = None` admits every state as a final state.
    pub fn new(
        model: DeterministicModel,
        stage_cost: ActionTable<T>,
        terminal_cost: Vec<T>,
        terminal_set: Option<&[bool]>,
        horizon: usize,
        gamma: T,
    ) -> Result<Self, MpcError> {
        let n = model.n_states();
        if horizon == 0 {
            return Err(MpcError::ZeroHorizon);
        }
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(MpcError::UnsupportedDiscount(gamma.to_f64_lossy()));
        }
        if stage_cost.n_states() != n || stage_cost.n_actions() != model.n_actions() {
            return Err(MpcError::Shape("stage cost does not match model"));
        }
        if terminal_cost.len() != n {
            return Err(MpcError::Shape("terminal cost does not match model"));
        }
        if !stage_cost.as_slice().iter().all(|&c| is_extended(c)) {
            return Err(MpcError::InvalidCost("stage_cost"));
        }
        if !terminal_cost.iter().all(|&c| is_extended(c)) {
            return Err(MpcError::InvalidCost("terminal_cost"));
        }
        let terminal_cost = match terminal_set {
            None => terminal_cost,
            Some(set) if set.len() == n => terminal_cost
                .iter()
                .zip(set)
                .map(|(&t, &inside)| if inside { t } else { T::infinity() })
                .collect(),
            Some(_) => return Err(MpcError::Shape("terminal set does not match model")),
        };
        Ok(Self {
            model,
            stage_cost,
            terminal_cost,
            horizon,
            gamma,
        })
    }

    pub fn model(&self) -> &DeterministicModel {
        &self.model
    }

    pub fn stage_cost(&self) -> &ActionTable<T> {
        &self.stage_cost
    }

    pub fn terminal_cost(&self) -> &[T] {
        &self.terminal_cost
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    fn stage_q(&self, tail: &[T]) -> ActionTable<T> {
        ActionTable::from_fn(self.model.n_states(), self.model.n_actions(), |s, a| {
            self.stage_cost.get(s, a) + self.gamma * tail[self.model.next(s, a)]
        })
    }
}

/// Backward-recursion tables of an MPC scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcTables<T> {
    /// `values[k]` is `V_k` for `k = 0..=N`; `values[N]` is the folded terminal cost.
    pub values: Vec<Vec<T>>,
    /// `Q^MPC(s, a)`: first input fixed to `a`.
    pub q0: ActionTable<T>,
    pub policy: PolicySet,
}

impl<T: Real> MpcTables<T> {
    /// `V^MPC = V_0`.
    pub fn value(&self) -> &[T] {
        &self.values[0]
    }
}

/// Runs `V_k(s) = min_a L(s,a) + gamma V_{k+1}(f(s,a))` from `V_N = T`.
pub fn build_mpc_tables<T: Real>(scheme: &MpcScheme<T>, argmin_tol: T) -> MpcTables<T> {
    let n_horizon = scheme.horizon;
    let mut values = vec![Vec::new(); n_horizon + 1];
    values[n_horizon] = scheme.terminal_cost.clone();
    let mut q0 = None;
    for k in (0..n_horizon).rev() {
        let q = scheme.stage_q(&values[k + 1]);
        values[k] = q
            .rows()
            .map(|r| r.iter().fold(T::infinity(), |acc, &x| acc.min(x)))
            .collect();
        if k == 0 {
            q0 = Some(q);
        }
    }
    let q0 = q0.expect("horizon is at least one");
    let policy = greedy_policy_set(&q0, argmin_tol);
    MpcTables { values, q0, policy }
}

/// The MPC policy: tolerance-argmin sets of `Q^MPC`; empty where infeasible.
pub fn mpc_policy<T: Real>(tables: &MpcTables<T>) -> &PolicySet {
    &tables.policy
}

/// Predicted input and state sequences from one initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenLoopSolution<T> {
    pub inputs: Vec<usize>,
    pub states: Vec<usize>,
    pub objective: T,
}

/// Greedy rollout through the tables, taking the lowest-index tolerance
/// minimiser at every stage.
pub fn open_loop_solve<T: Real>(
    scheme: &MpcScheme<T>,
    tables: &MpcTables<T>,
    s0: usize,
    argmin_tol: T,
) -> Result<OpenLoopSolution<T>, MpcError> {
    if s0 >= scheme.model.n_states() {
        return Err(MpcError::Shape("initial state out of range"));
    }
    if !tables.value()[s0].is_finite() {
        return Err(MpcError::Infeasible(s0));
    }
    let mut states = vec![s0];
    let mut inputs = Vec::with_capacity(scheme.horizon);
    let mut objective = T::zero();
    let mut weight = T::one();
    let mut s = s0;
    for k in 0..scheme.horizon {
        let tail = &tables.values[k + 1];
        let q: Vec<T> = (0..scheme.model.n_actions())
            .map(|a| scheme.stage_cost.get(s, a) + scheme.gamma * tail[scheme.model.next(s, a)])
            .collect();
        let best = q.iter().fold(T::infinity(), |acc, &x| acc.min(x));
        let a = q
            .iter()
            .position(|&x| x <= best + argmin_tol)
            .ok_or(MpcError::Infeasible(s0))?;
        objective = objective + weight * scheme.stage_cost.get(s, a);
        weight = weight * scheme.gamma;
        s = scheme.model.next(s, a);
        inputs.push(a);
        states.push(s);
    }
    objective = objective + weight * scheme.terminal_cost[s];
    Ok(OpenLoopSolution {
        inputs,
        states,
        objective,
    })
}

/// `Q_lambda^MPC(s, a) = lambda(s) + Q^MPC(s, a)`.
pub fn shifted_mpc_q<T: Real>(tables: &MpcTables<T>, lambda: &[T], s: usize, a: usize) -> T {
    lambda[s] + tables.q0.get(s, a)
}

/// Which value function continues the shifted recursion after one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailReading {
    /// `V_1`, the horizon `N - 1` tail of the recursion itself.
    Continuation,
    /// `V_0 = V^MPC`; exact only when the terminal cost is the stationary
    /// model value.
    Stationary,
}

/// `sup |Q_lambda^MPC - L - Lambda - gamma V_lambda(f(s,a))|` with
/// `Lambda(s,a) = lambda(s) - gamma lambda(f(s,a))` and `V_lambda = lambda + tail`.
pub fn mpc_modified_bellman_residual<T: Real>(
    scheme: &MpcScheme<T>,
    tables: &MpcTables<T>,
    lambda: &[T],
    reading: TailReading,
) -> Result<T, MpcError> {
    let n = scheme.model.n_states();
    if lambda.len() != n {
        return Err(MpcError::Shape("lambda does not match model"));
    }
    if let Some(s) = lambda.iter().position(|x| !x.is_finite()) {
        return Err(MpcError::InfiniteLambda(s));
    }
    let tail = match reading {
        TailReading::Continuation => &tables.values[1],
        TailReading::Stationary => &tables.values[0],
    };
    let v_lambda: Vec<T> = tail.iter().zip(lambda).map(|(&v, &l)| v + l).collect();
    let m = scheme.model.n_actions();
    let lhs = ActionTable::from_fn(n, m, |s, a| shifted_mpc_q(tables, lambda, s, a));
    let rhs = ActionTable::from_fn(n, m, |s, a| {
        let next = scheme.model.next(s, a);
        let gap = lambda[s] - scheme.gamma * lambda[next];
        scheme.stage_cost.get(s, a) + gap + scheme.gamma * v_lambda[next]
    });
    Ok(sup_distance(lhs.as_slice(), rhs.as_slice()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equivalence<T> {
    pub equal: bool,
    pub max_deviation: T,
}

/// Compares `Q^MPC` with the model-MDP action value over all pairs; a
/// finite/infinite mismatch is an infinite deviation.
pub fn mpc_equals_model_mdp_check<T: Real>(
    tables: &MpcTables<T>,
    model_q: &ActionTable<T>,
) -> Equivalence<T> {
    let max_deviation = sup_distance(tables.q0.as_slice(), model_q.as_slice());
    Equivalence {
        equal: max_deviation <= T::lit(EQUIVALENCE_TOL),
        max_deviation,
    }
}
