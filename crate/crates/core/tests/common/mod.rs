#![allow(dead_code)]

use modelcert_core::mdp::{ActionTable, Kernel, Mdp};
use rand::Rng;

pub const SAFE: usize = 0;
pub const RISKY: usize = 1;

/// Five-state chain: `safe` steps right, `risky` jumps to the goal or the
/// start with equal odds; state 4 absorbs at zero cost.
pub fn swamp5() -> Mdp<f64> {
    let n = 5;
    let kernel = Kernel::from_fn(n, 2, |s, a, next| {
        if s == 4 {
            return if next == 4 { 1.0 } else { 0.0 };
        }
        match a {
            SAFE => (next == s + 1) as u8 as f64,
            _ => 0.5 * ((next == 4) as u8 as f64) + 0.5 * ((next == 0) as u8 as f64),
        }
    });
    let costs = [1.0, 1.0, 5.0, 1.0, 0.0];
    let stage = ActionTable::from_fn(n, 2, |s, _| costs[s]);
    Mdp::new(kernel, stage, 0.9).with_embeddings((0..n).map(|i| vec![i as f64]).collect())
}

/// Reference values from an exhaustive policy search (5 states, 32 policies).
pub const SWAMP5_V_STAR: [f64; 5] = [1.0 / 0.55, 1.0 / 0.55, 5.0 + 0.45 / 0.55, 1.0, 0.0];

/// Dense Gaussian elimination, independent of the crate's solver.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Value of a deterministic policy on an MDP with finite costs.
pub fn oracle_policy_value(mdp: &Mdp<f64>, kernel: &Kernel<f64>, policy: &[usize]) -> Vec<f64> {
    let n = mdp.n_states();
    let a = (0..n)
        .map(|s| {
            (0..n)
                .map(|j| (s == j) as u8 as f64 - mdp.gamma * kernel.row(s, policy[s])[j])
                .collect()
        })
        .collect();
    let b = (0..n).map(|s| mdp.stage_cost.get(s, policy[s])).collect();
    gauss_solve(a, b)
}

/// Optimal values by enumerating every deterministic stationary policy.
pub fn brute_force_values(mdp: &Mdp<f64>, kernel: &Kernel<f64>) -> Vec<f64> {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let mut best = vec![f64::INFINITY; n];
    let total = m.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let policy: Vec<usize> = (0..n)
            .map(|_| {
                let a = c % m;
                c /= m;
                a
            })
            .collect();
        let v = oracle_policy_value(mdp, kernel, &policy);
        for (b, x) in best.iter_mut().zip(v) {
            *b = b.min(x);
        }
    }
    best
}

/// Random row-stochastic kernel with finite costs; a few rows are sparse.
pub fn random_mdp<R: Rng>(rng: &mut R, n: usize, m: usize, gamma: f64) -> Mdp<f64> {
    let mut kernel = Kernel::from_fn(n, m, |_, _, _| 0.0);
    for s in 0..n {
        for a in 0..m {
            let row = kernel.row_mut(s, a);
            let support = rng.gen_range(1..=n.min(4));
            for _ in 0..support {
                row[rng.gen_range(0..n)] += rng.gen_range(0.05..1.0);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
    }
    let stage = ActionTable::from_fn(n, m, |_, _| rng.gen_range(0.0..10.0));
    Mdp::new(kernel, stage, gamma)
}

/// Mixes each row of the true kernel with a random row.
pub fn perturbed_kernel<R: Rng>(rng: &mut R, mdp: &Mdp<f64>, weight: f64) -> Kernel<f64> {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let mut k = mdp.kernel.clone();
    for s in 0..n {
        for a in 0..m {
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
