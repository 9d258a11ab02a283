use crate::mdp::{advantage, ActionTable, Kernel, SolveError};
use crate::scalar::{expectation, sup_distance, Real};

use super::CertError;

/// State-dependent value offset `lambda(s)`.
///
/// `domain[s]` marks the states where both value functions are finite and
/// `lambda = V* - V_hat*`; elsewhere the offset is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaShift<T> {
    pub values: Vec<T>,
    pub domain: Vec<bool>,
}

impl<T: Real> LambdaShift<T> {
    /// A shift defined on every state.
    pub fn everywhere(values: Vec<T>) -> Self {
        let domain = vec![true; values.len()];
        Self { values, domain }
    }

    pub fn domain_states(&self) -> Vec<usize> {
        (0..self.domain.len()).filter(|&s| self.domain[s]).collect()
    }

    /// `V_hat + lambda` (infinite entries stay infinite).
    pub fn shift_values(&self, v_hat: &[T]) -> Vec<T> {
        v_hat.iter().zip(&self.values).map(|(&v, &l)| v + l).collect()
    }

    /// `Q_hat(s, a) + lambda(s)`.
    pub fn shift_q(&self, q_hat: &ActionTable<T>) -> ActionTable<T> {
        ActionTable::from_fn(q_hat.n_states(), q_hat.n_actions(), |s, a| {
            q_hat.get(s, a) + self.values[s]
        })
    }
}

/// Chooses `lambda = V* - V_hat*` on the states where both are finite, which
/// makes the shifted model value coincide with `V*` there.
pub fn lambda_value_matching<T: Real>(
    v_star: &[T],
    v_hat: &[T],
) -> Result<LambdaShift<T>, CertError> {
    if v_star.len() != v_hat.len() {
        return Err(CertError::Shape("value functions differ in length"));
    }
    let domain: Vec<bool> = v_star
        .iter()
        .zip(v_hat)
        .map(|(a, b)| a.is_finite() && b.is_finite())
        .collect();
    if !domain.iter().any(|&d| d) {
        return Err(CertError::EmptyCommonDomain);
    }
    let values = v_star
        .iter()
        .zip(v_hat)
        .zip(&domain)
        .map(|((&a, &b), &d)| if d { a - b } else { T::zero() })
        .collect();
    Ok(LambdaShift { values, domain })
}

/// Stage-cost correction `Lambda(s,a) = lambda(s) - gamma E[lambda(s+) | s,a]`.
///
/// The expectation is taken under `kernel`; pass the model kernel for the
/// identity of the modified Bellman equation to hold.
pub fn gap_function<T: Real>(
    lambda: &[T],
    kernel: &Kernel<T>,
    gamma: T,
) -> Result<ActionTable<T>, CertError> {
    let n = kernel.n_states();
    if lambda.len() != n {
        return Err(CertError::Shape("lambda length does not match kernel"));
    }
    for s in 0..n {
        for a in 0..kernel.n_actions() {
            if !lambda[s].is_finite() {
                return Err(CertError::InfiniteLambdaOnSupport { s, a, state: s });
            }
            if let Some((state, _)) = kernel.support(s, a).find(|&(j, _)| !lambda[j].is_finite()) {
                return Err(CertError::InfiniteLambdaOnSupport { s, a, state });
            }
        }
    }
    Ok(ActionTable::from_fn(n, kernel.n_actions(), |s, a| {
        lambda[s] - gamma * expectation(kernel.row(s, a), lambda)
    }))
}

/// `sup |Q_hat_lambda - L - Lambda - gamma E_model[V_hat_lambda]|` over the
/// pairs where the shifted action value is finite. A finite/infinite
/// mismatch yields `+inf`.
pub fn modified_bellman_residual<T: Real>(
    model_kernel: &Kernel<T>,
    stage_cost: &ActionTable<T>,
    gamma: T,
    gap: &ActionTable<T>,
    v_hat_lambda: &[T],
    q_hat_lambda: &ActionTable<T>,
) -> T {
    let rhs = ActionTable::from_fn(q_hat_lambda.n_states(), q_hat_lambda.n_actions(), |s, a| {
        stage_cost.get(s, a) + gap.get(s, a) + gamma * model_kernel.expect(s, a, v_hat_lambda)
    });
    sup_distance(q_hat_lambda.as_slice(), rhs.as_slice())
}

/// Model advantage `Q_hat - V_hat`; invariant under any state offset.
pub fn shifted_advantage<T: Real>(
    q_hat: &ActionTable<T>,
    v_hat: &[T],
) -> Result<ActionTable<T>, SolveError> {
    advantage(q_hat, v_hat)
}
