//! Exact evaluation of a fixed policy.

use nalgebra::{DMatrix, DVector};

use super::model::FiniteMdp;
use super::tables::{PolicyTable, QTable, RewardTable, ValueTable};
use crate::error::{LabError, Result};

/// Above this many `(state, action)` pairs, evaluation iterates instead of
/// factorizing.
pub const DIRECT_SOLVE_LIMIT: usize = 4096;
pub const ITERATIVE_RESIDUAL: f64 = 1e-12;
const ITERATIVE_MAX_ITER: usize = 10_000_000;

/// State-to-state kernel `P_π(s, s') = Σ_a π(a|s) P(s'|s,a)`, row-major.
pub(crate) fn policy_kernel(mdp: &FiniteMdp, policy: &PolicyTable) -> Vec<f64> {
    let n = mdp.n_states();
    let mut kernel = vec![0.0; n * n];
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for (next, p) in mdp.row(s, a).iter().enumerate() {
                kernel[s * n + next] += w * p;
            }
        }
    }
    kernel
}

/// Solves `(I − γ K) x = b`, or `(I − γ Kᵀ) x = b` when `transpose` is set.
pub(crate) fn solve_resolvent(kernel: &[f64], gamma: f64, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let k = if transpose {
            kernel[j * n + i]
        } else {
            kernel[i * n + j]
        };
        f64::from(u8::from(i == j)) - gamma * k
    });
    m.lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| LabError::Precondition("resolvent system is singular".into()))
}

/// `V^π` for several rewards, sharing one factorization of `I − γ P_π`.
pub(crate) fn policy_values(mdp: &FiniteMdp, policy: &PolicyTable, rewards: &[&RewardTable]) -> Result<Vec<Vec<f64>>> {
    check_policy(mdp, policy)?;
    let n = mdp.n_states();
    if n * mdp.n_actions() > DIRECT_SOLVE_LIMIT {
        return rewards
            .iter()
            .map(|r| policy_evaluation(mdp, policy, r).map(|(_, v)| v.as_slice().to_vec()))
            .collect();
    }
    let gamma = mdp.discount();
    let kernel = policy_kernel(mdp, policy);
    let lu = DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - gamma * kernel[i * n + j]).lu();
    rewards
        .iter()
        .map(|r| {
            mdp.check_shape("reward table", r.n_states(), r.n_actions())?;
            let r_pi = DVector::from_fn(n, |s, _| policy.row(s).iter().zip(r.row(s)).map(|(p, v)| p * v).sum());
            lu.solve(&r_pi)
                .map(|x| x.as_slice().to_vec())
                .ok_or_else(|| LabError::Precondition("resolvent system is singular".into()))
        })
        .collect()
}

fn check_policy(mdp: &FiniteMdp, policy: &PolicyTable) -> Result<()> {
    mdp.check_shape("policy", policy.n_states(), policy.n_actions())
}

/// `Q^π` and `V^π` for reward `r`.
///
/// Small instances are solved directly through `(I − γ P_π) V = r_π`; larger
/// ones run fixed-policy iteration to a residual of [`ITERATIVE_RESIDUAL`].
pub fn policy_evaluation(mdp: &FiniteMdp, policy: &PolicyTable, r: &RewardTable) -> Result<(QTable, ValueTable)> {
    check_policy(mdp, policy)?;
    mdp.check_shape("reward table", r.n_states(), r.n_actions())?;
    let n = mdp.n_states();
    let gamma = mdp.discount();
    let r_pi: Vec<f64> = (0..n)
        .map(|s| policy.row(s).iter().zip(r.row(s)).map(|(p, v)| p * v).sum())
        .collect();
    let kernel = policy_kernel(mdp, policy);

    let v = if n * mdp.n_actions() <= DIRECT_SOLVE_LIMIT {
        solve_resolvent(&kernel, gamma, &r_pi, false)?
    } else {
        iterate_values(&kernel, gamma, &r_pi)?
    };

    let q = QTable::from_fn(n, mdp.n_actions(), |s, a| r.get(s, a) + gamma * mdp.expect(s, a, &v));
    let values = (0..n)
        .map(|s| policy.row(s).iter().zip(q.row(s)).map(|(p, v)| p * v).sum())
        .collect();
    Ok((q, ValueTable::new(values)))
}

fn iterate_values(kernel: &[f64], gamma: f64, r_pi: &[f64]) -> Result<Vec<f64>> {
    let n = r_pi.len();
    let mut v = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..ITERATIVE_MAX_ITER {
        let next: Vec<f64> = (0..n)
            .map(|s| {
                r_pi[s]
                    + gamma
                        * kernel[s * n..(s + 1) * n]
                            .iter()
                            .zip(&v)
                            .map(|(k, x)| k * x)
                            .sum::<f64>()
            })
            .collect();
        residual = next.iter().zip(&v).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if residual <= ITERATIVE_RESIDUAL {
            return Ok(v);
        }
    }
    Err(LabError::NonConvergence {
        iterations: ITERATIVE_MAX_ITER,
        residual,
    })
}
