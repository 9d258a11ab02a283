//! Seeded Monte-Carlo estimate of the discounted closed-loop cost.

use modelcert_core::FiniteMdp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ext;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    #[serde(with = "ext::scalar")]
    pub mean: f64,
    #[serde(with = "ext::scalar")]
    pub standard_error: f64,
    pub episodes: usize,
    /// Steps simulated per episode (`K`).
    pub truncation: usize,
    /// `gamma^K max|L_finite| / (1 - gamma)`: the discounted tail ignored.
    pub truncation_bound: f64,
    pub seed: u64,
}

impl MonteCarloEstimate {
    /// `|mean - exact| <= 3 stderr + truncation bound`.
    pub fn consistent_with(&self, exact: f64) -> bool {
        if !exact.is_finite() || !self.mean.is_finite() {
            return exact == self.mean;
        }
        (self.mean - exact).abs() <= 3.0 * self.standard_error + self.truncation_bound
    }
}

/// Per-state closed-loop transition data: cumulative probabilities over the
/// support of the chosen row.
struct Chain {
    cost: Vec<f64>,
    support: Vec<Vec<(usize, f64)>>,
    /// State absorbs at zero cost, so nothing more accrues.
    idle: Vec<bool>,
    start: Vec<(usize, f64)>,
}

fn cumulative(probs: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    probs
        .filter(|&(_, p)| p > 0.0)
        .map(|(j, p)| {
            acc += p;
            (j, acc)
        })
        .collect()
}

fn sample(cdf: &[(usize, f64)], u: f64) -> usize {
    let total = cdf.last().map(|&(_, c)| c).unwrap_or(1.0);
    let x = u * total;
    let i = cdf.partition_point(|&(_, c)| c <= x);
    cdf[i.min(cdf.len() - 1)].0
}

impl Chain {
    fn new(mdp: &FiniteMdp, policy: &[usize]) -> Self {
        let n = mdp.n_states();
        let cost: Vec<f64> = (0..n).map(|s| mdp.stage_cost.get(s, policy[s])).collect();
        let support: Vec<_> = (0..n)
            .map(|s| cumulative(mdp.kernel.support(s, policy[s])))
            .collect();
        let idle = (0..n)
            .map(|s| cost[s] == 0.0 && support[s].len() == 1 && support[s][0].0 == s)
            .collect();
        let start = cumulative(mdp.initial_distribution.iter().copied().enumerate());
        Self {
            cost,
            support,
            idle,
            start,
        }
    }

    fn episode(&self, rng: &mut ChaCha8Rng, gamma: f64, steps: usize) -> f64 {
        let mut s = sample(&self.start, rng.gen::<f64>());
        let mut total = 0.0;
        let mut weight = 1.0;
        for _ in 0..steps {
            if self.idle[s] {
                break;
            }
            total += weight * self.cost[s];
            weight *= gamma;
            s = sample(&self.support[s], rng.gen::<f64>());
        }
        total
    }
}

/// Runs `episodes` episodes of `policy` on the true system for `truncation`
/// steps each. Episode `i` draws from stream `i` of a ChaCha generator keyed
/// by `seed`, so the estimate does not depend on thread scheduling.
pub fn simulate_closed_loop(
    mdp: &FiniteMdp,
    policy: &[usize],
    truncation: usize,
    episodes: usize,
    seed: u64,
) -> MonteCarloEstimate {
    assert_eq!(policy.len(), mdp.n_states(), "policy length");
    let chain = Chain::new(mdp, policy);
    let gamma = mdp.gamma;
    let returns: Vec<f64> = (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            chain.episode(&mut rng, gamma, truncation)
        })
        .collect();

    let count = episodes.max(1) as f64;
    let mean = returns.iter().sum::<f64>() / count;
    let standard_error = if episodes > 1 && mean.is_finite() {
        let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    let max_cost = mdp.max_finite_cost();
    let truncation_bound = gamma.powi(truncation as i32) * max_cost / (1.0 - gamma);
    MonteCarloEstimate {
        mean,
        standard_error,
        episodes,
        truncation,
        truncation_bound,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_respects_cumulative_mass() {
        let cdf = vec![(2, 0.25), (5, 1.0)];
        assert_eq!(sample(&cdf, 0.0), 2);
        assert_eq!(sample(&cdf, 0.2499), 2);
        assert_eq!(sample(&cdf, 0.25), 5);
        assert_eq!(sample(&cdf, 0.9999), 5);
    }
}
