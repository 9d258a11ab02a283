use crate::mdp::Mdp;
use crate::models::StochasticModel;
use crate::scalar::Real;

use super::CertError;

/// Result of testing whether `E_true[V*] - E_model[V*]` is one constant.
#[derive(Clone, Debug, PartialEq)]
pub enum DeltaCheck<T> {
    /// The difference is constant within tolerance; `delta` is the midpoint.
    Constant { delta: T, spread: T },
    /// The difference varies; `spread = max - min` (may be `+inf`).
    NotConstant {
        spread: T,
        min_pair: (usize, usize),
        min_value: T,
        max_pair: (usize, usize),
        max_value: T,
    },
}

impl<T: Real> DeltaCheck<T> {
    pub fn delta(&self) -> Option<T> {
        match self {
            DeltaCheck::Constant { delta, .. } => Some(*delta),
            DeltaCheck::NotConstant { .. } => None,
        }
    }
}

/// Sufficient-condition test over the pairs with finite stage cost.
///
/// Pairs where both expectations are infinite are skipped; a pair where
/// exactly one is infinite makes the spread infinite.
pub fn check_sufficient_delta<T: Real>(
    mdp: &Mdp<T>,
    model: &StochasticModel<T>,
    v_star: &[T],
    tol: T,
) -> Result<DeltaCheck<T>, CertError> {
    if model.n_states() != mdp.n_states() || model.n_actions() != mdp.n_actions() {
        return Err(CertError::Shape("model does not match system"));
    }
    if v_star.len() != mdp.n_states() {
        return Err(CertError::Shape("value function does not match system"));
    }
    let mut lo: Option<((usize, usize), T)> = None;
    let mut hi: Option<((usize, usize), T)> = None;
    let mut mismatch: Option<((usize, usize), T)> = None;
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            if !mdp.stage_cost.get(s, a).is_finite() {
                continue;
            }
            let e_true = mdp.kernel.expect(s, a, v_star);
            let e_model = model.kernel().expect(s, a, v_star);
            let d = match (e_true.is_finite(), e_model.is_finite()) {
                (true, true) => e_true - e_model,
                (false, false) => continue,
                (false, true) => {
                    mismatch.get_or_insert(((s, a), T::infinity()));
                    continue;
                }
                (true, false) => {
                    mismatch.get_or_insert(((s, a), T::neg_infinity()));
                    continue;
                }
            };
            if lo.is_none_or(|(_, v)| d < v) {
                lo = Some(((s, a), d));
            }
            if hi.is_none_or(|(_, v)| d > v) {
                hi = Some(((s, a), d));
            }
        }
    }
    if let Some((pair, value)) = mismatch {
        let (other_pair, other) = if value > T::zero() { lo } else { hi }.unwrap_or((pair, value));
        let ((min_pair, min_value), (max_pair, max_value)) = if value > T::zero() {
            ((other_pair, other), (pair, value))
        } else {
            ((pair, value), (other_pair, other))
        };
        return Ok(DeltaCheck::NotConstant {
            spread: T::infinity(),
            min_pair,
            min_value,
            max_pair,
            max_value,
        });
    }
    let (Some((min_pair, min_value)), Some((max_pair, max_value))) = (lo, hi) else {
        // No finite pair: the condition holds vacuously.
        return Ok(DeltaCheck::Constant {
            delta: T::zero(),
            spread: T::zero(),
        });
    };
    let spread = max_value - min_value;
    if spread <= tol {
        Ok(DeltaCheck::Constant {
            delta: (min_value + max_value) / T::lit(2.0),
            spread,
        })
    } else {
        Ok(DeltaCheck::NotConstant {
            spread,
            min_pair,
            min_value,
            max_pair,
            max_value,
        })
    }
}
