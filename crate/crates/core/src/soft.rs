//! Entropy-regularized dynamic programming and Boltzmann policies.
//!
//! Replacing the hard max with `α·logsumexp(·/α)` makes the reward-to-policy
//! map single-valued and Lipschitz: the policy moves by at most
//! `‖Δr‖∞ / (2α(1−γ))` in total variation at every state.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::mdp::{iterate_contraction, policy_evaluation, FiniteMdp, FixedPoint, PolicyTable, QTable, RewardTable};
use crate::perturbation::tv_distance;

/// Strictly positive entropy temperature `α`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self(alpha))
        } else {
            Err(LabError::InvalidArgument(format!(
                "temperature must be positive and finite, got {alpha}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Temperature {
    type Error = LabError;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

/// Soft action values at a given temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftQTable {
    pub values: QTable,
    pub alpha: Temperature,
}

/// `α · log Σ_i exp(x_i / α)`, evaluated with the max shifted out.
pub fn soft_max(xs: &[f64], alpha: Temperature) -> f64 {
    let a = alpha.get();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = xs.iter().map(|x| ((x - m) / a).exp()).sum();
    m + a * s.ln()
}

/// `softmax(x / α)`, max-shifted.
pub fn softmax(xs: &[f64], alpha: Temperature) -> Vec<f64> {
    let a = alpha.get();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = xs.iter().map(|x| ((x - m) / a).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

fn soft_backup_unchecked(q: &QTable, r: &RewardTable, mdp: &FiniteMdp, alpha: Temperature) -> QTable {
    let v: Vec<f64> = (0..q.n_states()).map(|s| soft_max(q.row(s), alpha)).collect();
    let gamma = mdp.discount();
    QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        r.get(s, a) + gamma * mdp.expect(s, a, &v)
    })
}

/// `r(s,a) + γ Σ_{s'} P(s'|s,a) · α·logsumexp_{a'}(q(s',a')/α)`.
pub fn soft_bellman_backup(q: &SoftQTable, r: &RewardTable, mdp: &FiniteMdp) -> Result<SoftQTable> {
    mdp.check_shape("soft q table", q.values.n_states(), q.values.n_actions())?;
    mdp.check_shape("reward table", r.n_states(), r.n_actions())?;
    Ok(SoftQTable {
        values: soft_backup_unchecked(&q.values, r, mdp, q.alpha),
        alpha: q.alpha,
    })
}

/// Soft value iteration from zero with the same stopping rule as the hard
/// solver; the trace exposes per-step residuals.
pub fn solve_soft_q_traced(
    mdp: &FiniteMdp,
    r: &RewardTable,
    alpha: Temperature,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    mdp.check_shape("reward table", r.n_states(), r.n_actions())?;
    iterate_contraction(mdp.n_states(), mdp.n_actions(), mdp.discount(), tol, max_iter, |q| {
        soft_backup_unchecked(q, r, mdp, alpha)
    })
}

pub fn solve_soft_q(
    mdp: &FiniteMdp,
    r: &RewardTable,
    alpha: Temperature,
    tol: f64,
    max_iter: usize,
) -> Result<SoftQTable> {
    let fp = solve_soft_q_traced(mdp, r, alpha, tol, max_iter)?;
    Ok(SoftQTable {
        values: fp.table,
        alpha,
    })
}

/// [`solve_soft_q`] with the default tolerance and iteration cap.
pub fn soft_q_star(mdp: &FiniteMdp, r: &RewardTable, alpha: Temperature) -> Result<SoftQTable> {
    solve_soft_q(mdp, r, alpha, crate::mdp::DEFAULT_TOL, crate::mdp::DEFAULT_MAX_ITER)
}

/// `π(a|s) ∝ exp(q(s,a)/α)`.
pub fn boltzmann_policy(q: &SoftQTable) -> PolicyTable {
    let n_actions = q.values.n_actions();
    let data = (0..q.values.n_states())
        .flat_map(|s| softmax(q.values.row(s), q.alpha))
        .collect();
    crate::mdp::PolicyTable::from_raw(q.values.n_states(), n_actions, data)
}

/// Both sides of `‖softmax(x/α) − softmax(y/α)‖₁ ≤ ‖x − y‖∞ / α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxBoundReport {
    pub l1: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn softmax_l1_bound_report(x: &[f64], y: &[f64], alpha: Temperature) -> Result<SoftmaxBoundReport> {
    if x.len() != y.len() || x.is_empty() {
        return Err(LabError::Dimension(format!(
            "vectors have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let px = softmax(x, alpha);
    let py = softmax(y, alpha);
    let l1 = px.iter().zip(&py).map(|(a, b)| (a - b).abs()).sum();
    let bound = x.iter().zip(y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / alpha.get();
    Ok(SoftmaxBoundReport {
        l1,
        bound,
        holds: l1 <= bound + 1e-10,
    })
}

/// Worst per-state TV between two soft-optimal policies and its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftStabilityReport {
    pub max_tv: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `max_s TV(π*_{r1,α}(·|s), π*_{r2,α}(·|s)) ≤ ‖r1 − r2‖∞ / (2α(1−γ))`.
pub fn soft_policy_stability_report(
    mdp: &FiniteMdp,
    r1: &RewardTable,
    r2: &RewardTable,
    alpha: Temperature,
) -> Result<SoftStabilityReport> {
    mdp.check_shape("reward table", r2.n_states(), r2.n_actions())?;
    stability_with_distance(mdp, r1, r2, r1.sup_distance(r2), alpha)
}

/// Shared by the single-reward and reward-tuple forms, which differ only in
/// the norm measuring the reward change.
pub(crate) fn stability_with_distance(
    mdp: &FiniteMdp,
    r1: &RewardTable,
    r2: &RewardTable,
    reward_distance: f64,
    alpha: Temperature,
) -> Result<SoftStabilityReport> {
    let p1 = boltzmann_policy(&soft_q_star(mdp, r1, alpha)?);
    let p2 = boltzmann_policy(&soft_q_star(mdp, r2, alpha)?);
    let mut max_tv = 0.0_f64;
    for s in 0..mdp.n_states() {
        max_tv = max_tv.max(tv_distance(p1.row(s), p2.row(s))?);
    }
    let bound = reward_distance / (2.0 * alpha.get() * (1.0 - mdp.discount()));
    Ok(SoftStabilityReport {
        max_tv,
        bound,
        holds: max_tv <= bound + 1e-8,
    })
}

/// Expected discounted return with a per-step KL penalty towards `base`,
/// averaged over the initial distribution `mu`.
///
/// Evaluated exactly as the value of `policy` under the augmented reward
/// `r(s,a) − β·log(π(a|s)/base(a|s))`. Any action the policy plays that the
/// base policy never plays is a [`LabError::SupportViolation`].
pub fn kl_objective(
    mdp: &FiniteMdp,
    r: &RewardTable,
    policy: &PolicyTable,
    base: &PolicyTable,
    beta: f64,
    mu: &[f64],
) -> Result<f64> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(LabError::InvalidArgument(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    if mu.len() != mdp.n_states() {
        return Err(LabError::Dimension(format!(
            "initial distribution has {} entries, MDP has {} states",
            mu.len(),
            mdp.n_states()
        )));
    }
    crate::mdp::check_distribution(mu).map_err(LabError::InvalidArgument)?;
    mdp.check_shape("base policy", base.n_states(), base.n_actions())?;
    mdp.check_shape("policy", policy.n_states(), policy.n_actions())?;

    let augmented = if beta == 0.0 {
        r.clone()
    } else {
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                if policy.prob(s, a) > 0.0 && base.prob(s, a) == 0.0 {
                    return Err(LabError::SupportViolation { state: s, action: a });
                }
            }
        }
        RewardTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
            let p = policy.prob(s, a);
            if p == 0.0 {
                r.get(s, a)
            } else {
                r.get(s, a) - beta * (p / base.prob(s, a)).ln()
            }
        })
    };
    let (_, v) = policy_evaluation(mdp, policy, &augmented)?;
    Ok(v.weighted(mu))
}
