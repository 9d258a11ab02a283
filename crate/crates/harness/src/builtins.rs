//! Built-in demonstration scenarios, constructed so that each verdict class
//! shows up somewhere.

use thiserror::Error;

use crate::scenario::{MpcBlock, Scenario, StateSpec};

pub const BUILTIN_NAMES: [&str; 4] = ["perfect2", "risky2", "swamp5", "cliffgrid"];

#[derive(Debug, Error, PartialEq)]
#[error("unknown scenario {0:?} (expected one of perfect2, risky2, swamp5, cliffgrid)")]
pub struct UnknownScenario(pub String);

pub fn builtin(name: &str) -> Result<Scenario, UnknownScenario> {
    match name {
        "perfect2" => Ok(perfect2()),
        "risky2" => Ok(risky2()),
        "swamp5" => Ok(swamp5()),
        "cliffgrid" => Ok(cliffgrid()),
        other => Err(UnknownScenario(other.to_string())),
    }
}

fn states_1d(labels: &[&str]) -> Vec<StateSpec> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| StateSpec {
            label: l.to_string(),
            embedding: vec![i as f64],
        })
        .collect()
}

fn point(n: usize, j: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    row[j] = 1.0;
    row
}

/// Deterministic two-state system; every fitted model is the system itself.
pub fn perfect2() -> Scenario {
    Scenario {
        name: "perfect2".into(),
        gamma: 0.9,
        states: states_1d(&["s0", "s1"]),
        actions: vec!["stay".into(), "go".into()],
        kernel: vec![
            vec![point(2, 0), point(2, 1)],
            vec![point(2, 1), point(2, 0)],
        ],
        stage_cost: vec![vec![1.0, 2.0], vec![0.0, 1.0]],
        initial_distribution: vec![0.5, 0.5],
        mpc: None,
        constraint_mask: None,
    }
}

/// A gamble that fails most of the time; its mean successor is the start.
pub fn risky2() -> Scenario {
    Scenario {
        name: "risky2".into(),
        gamma: 0.9,
        states: states_1d(&["s0", "s1"]),
        actions: vec!["safe".into(), "risky".into()],
        kernel: vec![
            vec![point(2, 0), vec![0.6, 0.4]],
            vec![point(2, 1), point(2, 1)],
        ],
        stage_cost: vec![vec![1.0, 1.0], vec![0.0, 0.0]],
        initial_distribution: vec![1.0, 0.0],
        mpc: None,
        constraint_mask: None,
    }
}

/// Five-state chain with an expensive state 2; `risky` jumps to the goal or
/// back to the start with equal odds.
pub fn swamp5() -> Scenario {
    let n = 5;
    let kernel = (0..n)
        .map(|s| {
            if s == 4 {
                return vec![point(n, 4), point(n, 4)];
            }
            let mut risky = vec![0.0; n];
            risky[0] = 0.5;
            risky[4] = 0.5;
            vec![point(n, s + 1), risky]
        })
        .collect();
    let cost = [1.0, 1.0, 5.0, 1.0, 0.0];
    Scenario {
        name: "swamp5".into(),
        gamma: 0.9,
        states: states_1d(&["0", "1", "2", "3", "4"]),
        actions: vec!["safe".into(), "risky".into()],
        kernel,
        stage_cost: cost.iter().map(|&c| vec![c, c]).collect(),
        initial_distribution: vec![0.2; n],
        mpc: None,
        constraint_mask: None,
    }
}

pub const CLIFF_SIDE: usize = 4;
pub const CLIFF_SLIP: f64 = 0.1;

/// Target cell of a move on the grid, staying put at walls.
pub fn cliff_move(r: usize, c: usize, a: usize) -> (usize, usize) {
    let last = CLIFF_SIDE - 1;
    match a {
        0 => (r.saturating_sub(1), c),
        1 => ((r + 1).min(last), c),
        2 => (r, c.saturating_sub(1)),
        _ => (r, (c + 1).min(last)),
    }
}

/// Moves entering column 2 below the top row are forbidden.
pub fn cliff_forbidden(r: usize, c: usize) -> bool {
    c == 2 && (1..CLIFF_SIDE).contains(&r)
}

/// 4x4 grid from the bottom-left corner to the bottom-right goal. Moves
/// succeed with probability 0.9 and otherwise leave the agent in place;
/// entering the lower part of column 2 violates a constraint, so the path
/// goes over the top. The MPC block asks to end in the goal.
pub fn cliffgrid() -> Scenario {
    let side = CLIFF_SIDE;
    let n = side * side;
    let goal = n - 1;
    let idx = |r: usize, c: usize| r * side + c;
    let mut states = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    let mut cost = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for r in 0..side {
        for c in 0..side {
            let s = idx(r, c);
            states.push(StateSpec {
                label: format!("r{r}c{c}"),
                embedding: vec![r as f64, c as f64],
            });
            let mut rows = Vec::with_capacity(4);
            let mut masked = Vec::with_capacity(4);
            for a in 0..4 {
                if s == goal {
                    rows.push(point(n, goal));
                    masked.push(false);
                    continue;
                }
                let (nr, nc) = cliff_move(r, c, a);
                let target = idx(nr, nc);
                let mut row = vec![0.0; n];
                row[target] += 1.0 - CLIFF_SLIP;
                row[s] += CLIFF_SLIP;
                rows.push(row);
                masked.push(target != s && cliff_forbidden(nr, nc));
            }
            kernel.push(rows);
            cost.push(vec![if s == goal { 0.0 } else { 1.0 }; 4]);
            mask.push(masked);
        }
    }
    Scenario {
        name: "cliffgrid".into(),
        gamma: 0.95,
        states,
        actions: vec!["up".into(), "down".into(), "left".into(), "right".into()],
        kernel,
        stage_cost: cost,
        initial_distribution: point(n, idx(side - 1, 0)),
        mpc: Some(MpcBlock {
            horizon: 10,
            terminal_cost: vec![0.0; n],
            terminal_set: Some(vec![format!("r{}c{}", side - 1, side - 1)]),
        }),
        constraint_mask: Some(mask),
    }
}
