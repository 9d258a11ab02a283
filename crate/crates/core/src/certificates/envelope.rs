//! Step-function envelopes bounding the model advantage by the true one.
//!
//! With finitely many state-action pairs the class-K bounds reduce to
//! monotone step functions on the attained true-advantage values, extended
//! with slope one past the largest of them.

use crate::mdp::ActionTable;
use crate::scalar::Real;

/// Which side of the model advantage the envelope bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// `alpha(A*) <= A_hat`.
    Lower,
    /// `beta(A*) >= A_hat`.
    Upper,
}

/// Which zero-set inclusion a witness breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// Model-optimal action that is strictly suboptimal for the true system.
    ModelZeroTruePositive,
    /// Truly optimal action the model considers strictly suboptimal.
    TrueZeroModelPositive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness<T> {
    pub s: usize,
    pub a: usize,
    pub kind: WitnessKind,
    pub a_star: T,
    pub a_hat: T,
}

/// Zero-set mismatch that rules out an envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSetViolation<T> {
    pub kind: EnvelopeKind,
    pub witnesses: Vec<Witness<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KFunctionEnvelope<T> {
    pub kind: EnvelopeKind,
    /// `(x, y)` with `x` strictly increasing, starting at `(0, 0)`.
    pub breakpoints: Vec<(T, T)>,
    pub extension_slope: T,
}

impl<T: Real> KFunctionEnvelope<T> {
    /// Evaluates the envelope at `x >= 0`.
    ///
    /// Lower: value of the first breakpoint at or above `x`.
    /// Upper: value of the last breakpoint at or below `x`.
    pub fn eval(&self, x: T) -> T {
        let (x_last, y_last) = *self.breakpoints.last().expect("envelope has breakpoints");
        if x > x_last {
            return y_last + self.extension_slope * (x - x_last);
        }
        match self.kind {
            EnvelopeKind::Lower => {
                let i = self.breakpoints.partition_point(|&(bx, _)| bx < x);
                self.breakpoints[i].1
            }
            EnvelopeKind::Upper => {
                let i = self.breakpoints.partition_point(|&(bx, _)| bx <= x);
                self.breakpoints[i.saturating_sub(1)].1
            }
        }
    }

    /// Envelope properties on the breakpoints: starts at the origin, `x`
    /// strictly increasing, `y` non-decreasing, and for the lower kind `y > 0`
    /// wherever `x > 0`.
    pub fn is_well_formed(&self) -> bool {
        let Some(&(x0, y0)) = self.breakpoints.first() else {
            return false;
        };
        let monotone = self
            .breakpoints
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        let positive = match self.kind {
            EnvelopeKind::Lower => self.breakpoints.iter().all(|&(x, y)| x <= T::zero() || y > T::zero()),
            EnvelopeKind::Upper => true,
        };
        x0 == T::zero() && y0 == T::zero() && monotone && positive && self.extension_slope > T::zero()
    }
}

/// Advantage pairs entering an envelope construction.
///
/// Values at or below `tol` are snapped to zero, so zero sets are the
/// tolerance-argmin sets.
#[derive(Clone, Debug)]
pub struct AdvantagePairs<T> {
    /// `(s, a, A*, A_hat)` over the compared states, both values finite.
    finite: Vec<(usize, usize, T, T)>,
    /// Every compared pair, infinities included.
    all: Vec<(usize, usize, T, T)>,
}

fn snap<T: Real>(x: T, tol: T) -> T {
    if x <= tol {
        T::zero()
    } else {
        x
    }
}

impl<T: Real> AdvantagePairs<T> {
    pub fn new(
        a_star: &ActionTable<T>,
        a_hat: &ActionTable<T>,
        states: &[usize],
        tol: T,
    ) -> Self {
        let mut all = Vec::new();
        for &s in states {
            for a in 0..a_star.n_actions() {
                all.push((s, a, snap(a_star.get(s, a), tol), snap(a_hat.get(s, a), tol)));
            }
        }
        let finite = all
            .iter()
            .copied()
            .filter(|&(_, _, x, y)| x.is_finite() && y.is_finite())
            .collect();
        Self { finite, all }
    }

    pub fn finite_pairs(&self) -> &[(usize, usize, T, T)] {
        &self.finite
    }

    fn witnesses(&self, kind: WitnessKind) -> Vec<Witness<T>> {
        self.all
            .iter()
            .filter(|&&(_, _, x, y)| match kind {
                WitnessKind::ModelZeroTruePositive => y == T::zero() && x > T::zero(),
                WitnessKind::TrueZeroModelPositive => x == T::zero() && y > T::zero(),
            })
            .map(|&(s, a, a_star, a_hat)| Witness {
                s,
                a,
                kind,
                a_star,
                a_hat,
            })
            .collect()
    }

    /// Smallest `min(A_hat - alpha(A*), beta(A*) - A_hat)` over finite pairs.
    pub fn sandwich_slack(&self, alpha: &KFunctionEnvelope<T>, beta: &KFunctionEnvelope<T>) -> T {
        self.finite
            .iter()
            .fold(T::infinity(), |acc, &(_, _, x, y)| {
                acc.min(y - alpha.eval(x)).min(beta.eval(x) - y)
            })
    }
}

fn distinct_sorted<T: Real>(mut xs: Vec<T>) -> Vec<T> {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite advantages"));
    xs.dedup();
    xs
}

/// Lower envelope `alpha(x) = min { A_hat : A* >= x }`, or the pairs where the
/// model advantage vanishes while the true one does not.
pub fn construct_alpha<T: Real>(
    pairs: &AdvantagePairs<T>,
) -> Result<KFunctionEnvelope<T>, ZeroSetViolation<T>> {
    let witnesses = pairs.witnesses(WitnessKind::ModelZeroTruePositive);
    if !witnesses.is_empty() {
        return Err(ZeroSetViolation {
            kind: EnvelopeKind::Lower,
            witnesses,
        });
    }
    let finite = pairs.finite_pairs();
    let xs = distinct_sorted(finite.iter().map(|p| p.2).collect());
    let mut by_x: Vec<(T, T)> = finite.iter().map(|p| (p.2, p.3)).collect();
    by_x.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite advantages"));

    // Sweep x downward keeping the running minimum over {A* >= x}.
    let mut breakpoints = Vec::with_capacity(xs.len());
    let mut running = T::infinity();
    let mut i = 0;
    for &x in xs.iter().rev() {
        while i < by_x.len() && by_x[i].0 >= x {
            running = running.min(by_x[i].1);
            i += 1;
        }
        breakpoints.push((x, running));
    }
    breakpoints.reverse();
    Ok(KFunctionEnvelope {
        kind: EnvelopeKind::Lower,
        breakpoints,
        extension_slope: T::one(),
    })
}

/// Upper envelope `beta(x) = max { A_hat : A* <= x }`, or the pairs where the
/// true advantage vanishes while the model one does not.
pub fn construct_beta<T: Real>(
    pairs: &AdvantagePairs<T>,
) -> Result<KFunctionEnvelope<T>, ZeroSetViolation<T>> {
    let witnesses = pairs.witnesses(WitnessKind::TrueZeroModelPositive);
    if !witnesses.is_empty() {
        return Err(ZeroSetViolation {
            kind: EnvelopeKind::Upper,
            witnesses,
        });
    }
    let finite = pairs.finite_pairs();
    let xs = distinct_sorted(finite.iter().map(|p| p.2).collect());
    let mut by_x: Vec<(T, T)> = finite.iter().map(|p| (p.2, p.3)).collect();
    by_x.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite advantages"));

    let mut breakpoints = Vec::with_capacity(xs.len());
    let mut running = T::neg_infinity();
    let mut i = 0;
    for &x in &xs {
        while i < by_x.len() && by_x[i].0 <= x {
            running = running.max(by_x[i].1);
            i += 1;
        }
        breakpoints.push((x, running));
    }
    Ok(KFunctionEnvelope {
        kind: EnvelopeKind::Upper,
        breakpoints,
        extension_slope: T::one(),
    })
}
