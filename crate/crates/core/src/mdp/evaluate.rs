use thiserror::Error;

use super::{Mdp, ValueFunction};
use crate::linalg::{mat_vec, Lu};
use crate::scalar::{expectation, Real};

/// Above this many states the direct solve is followed by refinement sweeps.
const DIRECT_SOLVE_LIMIT: usize = 2000;
const REFINEMENT_SWEEPS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("policy has {found} entries, expected {expected}")]
    PolicyLength { expected: usize, found: usize },
    #[error("policy selects action {action} in state {s}, only {n_actions} actions exist")]
    ActionOutOfRange { s: usize, action: usize, n_actions: usize },
    #[error("initial distribution has {found} entries, expected {expected}")]
    InitialLength { expected: usize, found: usize },
    #[error("policy evaluation system is numerically singular (residual {residual:e})")]
    SingularSystem { residual: f64 },
}

/// Exact value of a stationary deterministic policy.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyEvaluation<T> {
    pub values: ValueFunction<T>,
    /// Closed-loop performance `sum_s rho0(s) V_pi(s)`.
    pub performance: T,
}

/// Solves `V(s) = L(s, pi(s)) + gamma sum_s' p(s'|s,pi(s)) V(s')` by a dense
/// linear solve on the states whose closed-loop cost is finite.
///
/// A state gets `V = +inf` when the chain reaches an infinite-cost pair with
/// positive probability.
pub fn evaluate_policy<T: Real>(
    mdp: &Mdp<T>,
    policy: &[usize],
    rho0: &[T],
) -> Result<PolicyEvaluation<T>, EvalError> {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    if policy.len() != n {
        return Err(EvalError::PolicyLength {
            expected: n,
            found: policy.len(),
        });
    }
    if rho0.len() != n {
        return Err(EvalError::InitialLength {
            expected: n,
            found: rho0.len(),
        });
    }
    if let Some((s, &action)) = policy.iter().enumerate().find(|(_, &a)| a >= m) {
        return Err(EvalError::ActionOutOfRange {
            s,
            action,
            n_actions: m,
        });
    }

    // Backward closure of the infinite-cost states.
    let mut infinite: Vec<bool> = (0..n)
        .map(|s| !mdp.stage_cost.get(s, policy[s]).is_finite())
        .collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !infinite[s] && mdp.kernel.support(s, policy[s]).any(|(j, _)| infinite[j]) {
                infinite[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let finite_states: Vec<usize> = (0..n).filter(|&s| !infinite[s]).collect();
    let k = finite_states.len();
    let mut index = vec![usize::MAX; n];
    for (i, &s) in finite_states.iter().enumerate() {
        index[s] = i;
    }

    let mut matrix = vec![T::zero(); k * k];
    let mut rhs = vec![T::zero(); k];
    for (i, &s) in finite_states.iter().enumerate() {
        matrix[i * k + i] = T::one();
        rhs[i] = mdp.stage_cost.get(s, policy[s]);
        for (j, p) in mdp.kernel.support(s, policy[s]) {
            let col = index[j];
            matrix[i * k + col] = matrix[i * k + col] - mdp.gamma * p;
        }
    }

    let solution = if k == 0 {
        Vec::new()
    } else {
        let lu = Lu::factor(matrix.clone(), k).ok_or(EvalError::SingularSystem {
            residual: f64::INFINITY,
        })?;
        let mut x = lu.solve(&rhs);
        if k > DIRECT_SOLVE_LIMIT {
            for _ in 0..REFINEMENT_SWEEPS {
                let ax = mat_vec(&matrix, k, &x);
                let r: Vec<T> = rhs.iter().zip(&ax).map(|(&b, &y)| b - y).collect();
                let d = lu.solve(&r);
                x.iter_mut().zip(d).for_each(|(xi, di)| *xi = *xi + di);
            }
        }
        x
    };

    if k > 0 {
        let ax = mat_vec(&matrix, k, &solution);
        let scale = rhs.iter().fold(T::one(), |acc, b| acc.max(b.abs()));
        let residual = rhs
            .iter()
            .zip(&ax)
            .fold(T::zero(), |acc, (&b, &y)| acc.max((b - y).abs()));
        if !(residual <= T::lit(1e-9).max(T::epsilon() * T::lit(1e3)) * scale) {
            return Err(EvalError::SingularSystem {
                residual: residual.to_f64_lossy(),
            });
        }
    }

    let mut values = vec![T::infinity(); n];
    for (&s, x) in finite_states.iter().zip(solution) {
        values[s] = x;
    }
    let performance = expectation(rho0, &values);
    Ok(PolicyEvaluation {
        values: ValueFunction(values),
        performance,
    })
}
