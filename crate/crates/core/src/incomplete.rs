//! Suboptimality certificates for policies trained on an incomplete reward.
//!
//! A policy optimal for `r_train` is strictly suboptimal for
//! `r_true = r_train + r_missing` whenever some reachable state has a
//! train-optimal action with positive advantage under `r_missing`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::mdp::{
    check_distribution, greedy_policy, optimal_action_set, policy_evaluation, policy_kernel, q_star, solve_resolvent,
    ActionSet, FiniteMdp, PolicyTable, RewardTable, Selection, TieTolerance,
};

/// `A^π_r(s,a) = Q^π_r(s,a) − V^π_r(s)`.
pub fn advantage(mdp: &FiniteMdp, policy: &PolicyTable, r: &RewardTable, state: usize, action: usize) -> Result<f64> {
    let (q, v) = policy_evaluation(mdp, policy, r)?;
    Ok(q.get(state, action) - v.get(state))
}

fn check_initial(mdp: &FiniteMdp, mu: &[f64]) -> Result<()> {
    if mu.len() != mdp.n_states() {
        return Err(LabError::Dimension(format!(
            "initial distribution has {} entries, MDP has {} states",
            mu.len(),
            mdp.n_states()
        )));
    }
    check_distribution(mu).map_err(|m| LabError::InvalidArgument(format!("initial distribution: {m}")))
}

/// States reachable with positive probability from the support of `mu`.
fn reachable_states(mdp: &FiniteMdp, policy: &PolicyTable, mu: &[f64]) -> Vec<bool> {
    let n = mdp.n_states();
    let mut seen: Vec<bool> = mu.iter().map(|m| *m > 0.0).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| seen[s]).collect();
    while let Some(s) = queue.pop_front() {
        for a in 0..mdp.n_actions() {
            if policy.prob(s, a) == 0.0 {
                continue;
            }
            for (next, &p) in mdp.row(s, a).iter().enumerate() {
                if p > 0.0 && !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}

/// Discounted occupancy of every state, `Σ_t γ^t Pr(s_t = s | μ, π)`.
///
/// Solved through `(I − γ P_πᵀ) d = μ`; states outside the reachable set are
/// exactly zero.
pub fn occupancy(mdp: &FiniteMdp, policy: &PolicyTable, mu: &[f64]) -> Result<Vec<f64>> {
    check_initial(mdp, mu)?;
    mdp.check_shape("policy", policy.n_states(), policy.n_actions())?;
    let kernel = policy_kernel(mdp, policy);
    let mut d = solve_resolvent(&kernel, mdp.discount(), mu, true)?;
    for (x, reach) in d.iter_mut().zip(reachable_states(mdp, policy, mu)) {
        *x = if reach { x.max(0.0) } else { 0.0 };
    }
    Ok(d)
}

/// Discounted occupancy of one state.
pub fn reachability(mdp: &FiniteMdp, policy: &PolicyTable, mu: &[f64], state: usize) -> Result<f64> {
    if state >= mdp.n_states() {
        return Err(LabError::InvalidArgument(format!("state {state} out of range")));
    }
    Ok(occupancy(mdp, policy, mu)?[state])
}

/// Result of searching for a reachable, train-optimal action with positive
/// missing-reward advantage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackerCertificate {
    /// First witness in `(state, action)` order, if any.
    pub state: Option<usize>,
    pub action: Option<usize>,
    pub advantage_missing: f64,
    pub reachability: f64,
    /// Action optimality, positive advantage, reachability.
    pub conditions_met: [bool; 3],
    pub witness_count: usize,
    /// `μ·(V*_{true} − V^{π_train}_{true})`.
    pub true_value_gap: f64,
    pub train_policy: PolicyTable,
    /// Rule that produced `train_policy`; `None` when supplied by the caller.
    pub selection: Option<Selection>,
}

impl SlackerCertificate {
    pub fn witness(&self) -> Option<(usize, usize)> {
        self.state.zip(self.action)
    }

    pub fn all_conditions(&self) -> bool {
        self.conditions_met.iter().all(|c| *c)
    }
}

/// Optimal sets at one state under the training and the true reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalSetShift {
    pub train: ActionSet,
    pub truth: ActionSet,
}

pub fn slacker_certificate(
    mdp: &FiniteMdp,
    r_train: &RewardTable,
    r_missing: &RewardTable,
    mu: &[f64],
    selection: Selection,
) -> Result<SlackerCertificate> {
    slacker_certificate_with(mdp, r_train, r_missing, mu, selection, TieTolerance::Relative)
}

pub fn slacker_certificate_with(
    mdp: &FiniteMdp,
    r_train: &RewardTable,
    r_missing: &RewardTable,
    mu: &[f64],
    selection: Selection,
    tie: TieTolerance,
) -> Result<SlackerCertificate> {
    let q_train = q_star(mdp, r_train)?;
    let train_policy = greedy_policy(&q_train, selection, tie);
    let mut cert = certificate_for(mdp, r_train, r_missing, mu, train_policy, tie)?;
    cert.selection = Some(selection);
    Ok(cert)
}

/// Certificate for a caller-supplied policy. The policy is expected to be
/// optimal for `r_train`; only its support is used to pick candidate actions
/// via `A*(s; r_train)`.
pub fn slacker_certificate_for_policy(
    mdp: &FiniteMdp,
    r_train: &RewardTable,
    r_missing: &RewardTable,
    mu: &[f64],
    train_policy: &PolicyTable,
) -> Result<SlackerCertificate> {
    mdp.check_shape("policy", train_policy.n_states(), train_policy.n_actions())?;
    certificate_for(
        mdp,
        r_train,
        r_missing,
        mu,
        train_policy.clone(),
        TieTolerance::Relative,
    )
}

fn certificate_for(
    mdp: &FiniteMdp,
    r_train: &RewardTable,
    r_missing: &RewardTable,
    mu: &[f64],
    train_policy: PolicyTable,
    tie: TieTolerance,
) -> Result<SlackerCertificate> {
    check_initial(mdp, mu)?;
    mdp.check_shape("missing reward", r_missing.n_states(), r_missing.n_actions())?;
    let q_train = q_star(mdp, r_train)?;
    let (q_miss, v_miss) = policy_evaluation(mdp, &train_policy, r_missing)?;
    let occ = occupancy(mdp, &train_policy, mu)?;

    let mut first: Option<(usize, usize, f64)> = None;
    let mut witness_count = 0;
    for (s, &reach) in occ.iter().enumerate() {
        let optimal = optimal_action_set(&q_train, s, tie);
        for &a in &optimal.actions {
            let adv = q_miss.get(s, a) - v_miss.get(s);
            let threshold = tie.resolve(q_miss.row(s));
            if adv > threshold && reach > 0.0 {
                witness_count += 1;
                first.get_or_insert((s, a, adv));
            }
        }
    }

    let r_true = r_train.add(r_missing);
    let q_true = q_star(mdp, &r_true)?;
    // V* is taken from an exact evaluation of the policy greedy in Q*_true.
    let optimal_true = greedy_policy(&q_true, Selection::LowestIndex, tie);
    let (_, v_star) = policy_evaluation(mdp, &optimal_true, &r_true)?;
    let (_, v_train) = policy_evaluation(mdp, &train_policy, &r_true)?;
    let true_value_gap = v_star.weighted(mu) - v_train.weighted(mu);

    Ok(match first {
        Some((s, a, adv)) => SlackerCertificate {
            state: Some(s),
            action: Some(a),
            advantage_missing: adv,
            reachability: occ[s],
            conditions_met: [true; 3],
            witness_count,
            true_value_gap,
            train_policy,
            selection: None,
        },
        None => SlackerCertificate {
            state: None,
            action: None,
            advantage_missing: 0.0,
            reachability: 0.0,
            conditions_met: [false; 3],
            witness_count: 0,
            true_value_gap,
            train_policy,
            selection: None,
        },
    })
}

/// How the optimal set at `state` changes once the missing reward is added.
pub fn optimal_set_shift(
    mdp: &FiniteMdp,
    r_train: &RewardTable,
    r_missing: &RewardTable,
    state: usize,
    tie: impl Into<TieTolerance>,
) -> Result<OptimalSetShift> {
    let tie = tie.into();
    let train = optimal_action_set(&q_star(mdp, r_train)?, state, tie);
    let truth = optimal_action_set(&q_star(mdp, &r_train.add(r_missing))?, state, tie);
    Ok(OptimalSetShift { train, truth })
}
