//! Small hand-built MDPs and seeded random instances used by tests, examples,
//! and the built-in scenarios.

use rand::Rng;

use crate::mdp::{FiniteMdp, RewardTable};

pub const TWO_PATH_START: usize = 0;
pub const TWO_PATH_LEFT: usize = 1;
pub const TWO_PATH_RIGHT: usize = 2;
pub const TWO_PATH_TERMINAL: usize = 3;

/// `s0 → {sL, sR} → terminal`, terminal absorbing, γ = 0.9.
///
/// Action 0 (`a1`) leads left and action 1 (`a2`) leads right from `s0`;
/// both actions behave identically elsewhere.
pub fn two_path() -> FiniteMdp {
    FiniteMdp::from_sparse(
        4,
        2,
        &[
            (0, 0, TWO_PATH_LEFT, 1.0),
            (0, 1, TWO_PATH_RIGHT, 1.0),
            (1, 0, TWO_PATH_TERMINAL, 1.0),
            (1, 1, TWO_PATH_TERMINAL, 1.0),
            (2, 0, TWO_PATH_TERMINAL, 1.0),
            (2, 1, TWO_PATH_TERMINAL, 1.0),
            (3, 0, TWO_PATH_TERMINAL, 1.0),
            (3, 1, TWO_PATH_TERMINAL, 1.0),
        ],
        0.9,
    )
    .expect("valid fixture")
}

/// One unit of reward for either action at `s0`, nothing elsewhere.
pub fn two_path_reward() -> RewardTable {
    RewardTable::from_fn(4, 2, |s, _| if s == TWO_PATH_START { 1.0 } else { 0.0 })
}

/// Pays `amount` for both actions at `sR`, i.e. only on the `a2` branch.
pub fn two_path_missing_reward(amount: f64) -> RewardTable {
    RewardTable::from_fn(4, 2, |s, _| if s == TWO_PATH_RIGHT { amount } else { 0.0 })
}

/// Like [`two_path`] with three branches out of `s0`, all tied under
/// [`three_path_reward`]. States: `s0`, three branch states, terminal.
pub fn three_path() -> FiniteMdp {
    let mut entries = Vec::new();
    for a in 0..3 {
        entries.push((0, a, 1 + a, 1.0));
        for s in 1..5 {
            entries.push((s, a, 4, 1.0));
        }
    }
    FiniteMdp::from_sparse(5, 3, &entries, 0.9).expect("valid fixture")
}

pub fn three_path_reward() -> RewardTable {
    RewardTable::from_fn(5, 3, |s, _| if s == 0 { 1.0 } else { 0.0 })
}

/// Deterministic cyclic MDP: action `a` at `s` moves to `(s + a + 1) mod n`
/// or `(s + 1) mod n` with equal probability.
pub fn ring(n_states: usize, n_actions: usize, discount: f64) -> FiniteMdp {
    let mut entries = Vec::new();
    for s in 0..n_states {
        for a in 0..n_actions {
            entries.push((s, a, (s + a + 1) % n_states, 0.5));
            entries.push((s, a, (s + 1) % n_states, 0.5));
        }
    }
    FiniteMdp::from_sparse(n_states, n_actions, &entries, discount).expect("valid fixture")
}

/// Random MDP whose transition rows each have a random support of one to
/// `n_states` successors with random weights.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, discount: f64) -> FiniteMdp {
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let support = rng.random_range(1..=n_states);
        let mut row = vec![0.0; n_states];
        for _ in 0..support {
            row[rng.random_range(0..n_states)] += rng.random_range(0.05..1.0);
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
        transition.extend(row);
    }
    FiniteMdp::new(n_states, n_actions, transition, discount).expect("normalized rows")
}

/// Rewards drawn uniformly from `[-scale, scale]`.
pub fn random_reward<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, scale: f64) -> RewardTable {
    RewardTable::from_fn(n_states, n_actions, |_, _| rng.random_range(-scale..=scale))
}
