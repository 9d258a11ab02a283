#![allow(dead_code)]

use modelcert_core::mdp::{ActionTable, Kernel, Mdp};
use modelcert_core::FiniteMdp;
use rand::Rng;

/// Random MDP with sparse rows; with `forbid` > 0 some pairs get `+inf` cost,
/// always leaving one finite action per state.
pub fn random_mdp<R: Rng>(rng: &mut R, n: usize, m: usize, gamma: f64, forbid: f64) -> FiniteMdp {
    let mut kernel = Kernel::from_fn(n, m, |_, _, _| 0.0);
    for s in 0..n {
        for a in 0..m {
            let row = kernel.row_mut(s, a);
            let support = rng.gen_range(1..=n.min(5));
            for _ in 0..support {
                row[rng.gen_range(0..n)] += rng.gen_range(0.05..1.0);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
    }
    let mut stage = ActionTable::from_fn(n, m, |_, _| rng.gen_range(0.0..10.0));
    for s in 0..n {
        let keep = rng.gen_range(0..m);
        for a in 0..m {
            if a != keep && rng.gen_bool(forbid) {
                stage.set(s, a, f64::INFINITY);
            }
        }
    }
    Mdp::new(kernel, stage, gamma).with_embeddings((0..n).map(|i| vec![i as f64]).collect())
}

/// Convex mixture of each true row with a random row.
pub fn perturbed_kernel<R: Rng>(rng: &mut R, mdp: &FiniteMdp, weight: f64) -> Kernel<f64> {
    let n = mdp.n_states();
    let mut k = mdp.kernel.clone();
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = noise.iter().sum();
            let row = k.row_mut(s, a);
            for (p, e) in row.iter_mut().zip(noise) {
                *p = (1.0 - weight) * *p + weight * e / total;
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
    k
}

/// Tolerance-argmin sets computed directly from a Q table.
pub fn argmin_sets(q: &ActionTable<f64>, tol: f64) -> Vec<Vec<usize>> {
    q.rows()
        .map(|row| {
            let best = row.iter().cloned().fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                return Vec::new();
            }
            (0..row.len()).filter(|&a| row[a] <= best + tol).collect()
        })
        .collect()
}

/// Sup distance treating equal infinities as equal.
pub fn ext_sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x.is_finite(), y.is_finite()) {
            (true, true) => (x - y).abs(),
            (false, false) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}
