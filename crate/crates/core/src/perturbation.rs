//! Reward perturbations that flip optimal actions.
//!
//! The construction works in Q-space: start from `Q0 = Q*_{r0}`, lift one
//! tied action by `ε` with a bump, and map the result back to a reward with
//! the inverse Bellman map. The new reward is `ε(1+γ)`-close to `r0` yet its
//! optimal action set at the bumped state is the single lifted action.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::mdp::{
    check_distribution, optimal_action_set, q_star, ActionSet, FiniteMdp, QTable, RewardTable, Selection, TieTolerance,
};

/// A `[0, 1]`-valued function on state-action pairs equal to 1 at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpTable {
    pub values: QTable,
    pub center: (usize, usize),
}

/// Indicator of `center`. On a finite space every function is continuous, so
/// the indicator is a valid bump; it vanishes on every protected action.
pub fn make_bump(mdp: &FiniteMdp, center: (usize, usize), protected: &[usize]) -> Result<BumpTable> {
    let (state, action) = center;
    if state >= mdp.n_states() || action >= mdp.n_actions() {
        return Err(LabError::InvalidArgument(format!(
            "bump center ({state}, {action}) out of range"
        )));
    }
    if protected.contains(&action) {
        return Err(LabError::InvalidArgument(format!(
            "bump center action {action} is listed as protected"
        )));
    }
    let values = QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        if (s, a) == center {
            1.0
        } else {
            0.0
        }
    });
    Ok(BumpTable { values, center })
}

/// The reward whose optimal action-value function is exactly `q`:
/// `R_q(s,a) = q(s,a) − γ Σ_{s'} P(s'|s,a) max_{a'} q(s',a')`.
pub fn inverse_bellman(q: &QTable, mdp: &FiniteMdp) -> Result<RewardTable> {
    mdp.check_shape("q table", q.n_states(), q.n_actions())?;
    let v = q.greedy_values();
    let gamma = mdp.discount();
    Ok(RewardTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        q.get(s, a) - gamma * mdp.expect(s, a, &v)
    }))
}

/// Total variation distance, half the L1 distance between two rows.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(LabError::InvalidArgument(format!(
            "distribution lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p).map_err(LabError::InvalidArgument)?;
    check_distribution(q).map_err(LabError::InvalidArgument)?;
    let half_l1 = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(half_l1.clamp(0.0, 1.0))
}

/// Intermediate state of the Q-space bump construction.
#[derive(Debug, Clone)]
pub(crate) struct Lift {
    pub q0: QTable,
    pub tied: ActionSet,
    /// `R_{Q0 + εφ} − R_{Q0}`.
    pub delta: RewardTable,
}

/// Lifts `target` at `state` by `epsilon` above the other tied actions.
pub(crate) fn lift(
    mdp: &FiniteMdp,
    r0: &RewardTable,
    state: usize,
    target: usize,
    epsilon: f64,
    tie: TieTolerance,
) -> Result<Lift> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(LabError::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if state >= mdp.n_states() || target >= mdp.n_actions() {
        return Err(LabError::InvalidArgument(format!(
            "(state {state}, action {target}) out of range"
        )));
    }
    let q0 = q_star(mdp, r0)?;
    let tied = optimal_action_set(&q0, state, tie);
    if tied.len() < 2 || !tied.contains(target) {
        return Err(LabError::Precondition(format!(
            "optimal set {:?} at state {state} must contain action {target} and at least one other action",
            tied.actions
        )));
    }
    let protected: Vec<usize> = tied.actions.iter().copied().filter(|&a| a != target).collect();
    let bump = make_bump(mdp, (state, target), &protected)?;
    let q_eps = q0.zip_with(&bump.values, |q, b| q + epsilon * b);
    let delta = inverse_bellman(&q_eps, mdp)?.sub(&inverse_bellman(&q0, mdp)?);
    Ok(Lift { q0, tied, delta })
}

/// Per-state TV jump between greedy rows of two Q tables under `selection`.
pub(crate) fn greedy_tv(before: &QTable, after: &QTable, state: usize, selection: Selection, tie: TieTolerance) -> f64 {
    let p = selection.row(&optimal_action_set(before, state, tie), before.n_actions());
    let q = selection.row(&optimal_action_set(after, state, tie), after.n_actions());
    tv_distance(&p, &q).expect("greedy rows are distributions")
}

/// Evidence that an `ε`-small reward change switches the optimal action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityCertificate {
    pub state: usize,
    pub target: usize,
    pub epsilon: f64,
    pub perturbed_reward: RewardTable,
    /// `‖r_ε − r0‖∞`.
    pub reward_distance: f64,
    /// `ε(1+γ)`.
    pub distance_bound: f64,
    pub original_action_set: ActionSet,
    /// Optimal set of the re-solved perturbed problem.
    pub switched_action_set: ActionSet,
    /// `Q*_{r_ε}(s, target) − Q*_{r_ε}(s, a)` for every other formerly tied `a`.
    pub tied_gaps: Vec<(usize, f64)>,
    /// Smallest margin of the target over formerly suboptimal actions.
    pub suboptimal_margin: Option<f64>,
    /// TV jump when ties are split uniformly: `(m−1)/m`.
    pub tv_jump: f64,
    /// TV jump when the lowest-index tied action is selected.
    pub tv_jump_lowest_index: f64,
    pub valid: bool,
}

/// Gap checks are accepted within this absolute slack.
pub const GAP_TOLERANCE: f64 = 1e-9;

/// Builds `r_ε` making `target` the unique optimal action at `state`, then
/// re-solves the perturbed problem to verify the switch.
pub fn discontinuity_sequence(
    mdp: &FiniteMdp,
    r0: &RewardTable,
    state: usize,
    target: usize,
    epsilon: f64,
    tie: impl Into<TieTolerance>,
) -> Result<DiscontinuityCertificate> {
    let tie = tie.into();
    let lifted = lift(mdp, r0, state, target, epsilon, tie)?;
    certify(mdp, r0, state, target, epsilon, tie, lifted)
}

pub(crate) fn certify(
    mdp: &FiniteMdp,
    r0: &RewardTable,
    state: usize,
    target: usize,
    epsilon: f64,
    tie: TieTolerance,
    lifted: Lift,
) -> Result<DiscontinuityCertificate> {
    let Lift { q0, tied, delta } = lifted;
    let perturbed_reward = r0.add(&delta);
    let reward_distance = delta.sup_norm();
    let distance_bound = epsilon * (1.0 + mdp.discount());

    let q_eps = q_star(mdp, &perturbed_reward)?;
    let switched_action_set = optimal_action_set(&q_eps, state, tie);
    let top = q_eps.get(state, target);
    let tied_gaps: Vec<(usize, f64)> = tied
        .actions
        .iter()
        .filter(|&&a| a != target)
        .map(|&a| (a, top - q_eps.get(state, a)))
        .collect();
    let suboptimal_margin = (0..mdp.n_actions())
        .filter(|&a| !tied.contains(a))
        .map(|a| top - q_eps.get(state, a))
        .reduce(f64::min);

    let tv_jump = greedy_tv(&q0, &q_eps, state, Selection::UniformOverTies, tie);
    let tv_jump_lowest_index = greedy_tv(&q0, &q_eps, state, Selection::LowestIndex, tie);

    let valid = reward_distance <= distance_bound * (1.0 + 1e-12)
        && switched_action_set.actions == [target]
        && tied_gaps.iter().all(|(_, g)| (g - epsilon).abs() <= GAP_TOLERANCE)
        && suboptimal_margin.is_none_or(|m| m > 0.0);

    Ok(DiscontinuityCertificate {
        state,
        target,
        epsilon,
        perturbed_reward,
        reward_distance,
        distance_bound,
        original_action_set: tied,
        switched_action_set,
        tied_gaps,
        suboptimal_margin,
        tv_jump,
        tv_jump_lowest_index,
        valid,
    })
}

/// A reward within `epsilon` of `r0` under which `promoted` beats `demoted`
/// at `state` by exactly `epsilon / (1+γ)`.
pub fn tie_breaker(
    mdp: &FiniteMdp,
    r0: &RewardTable,
    state: usize,
    demoted: usize,
    promoted: usize,
    epsilon: f64,
) -> Result<RewardTable> {
    tie_breaker_with(mdp, r0, state, demoted, promoted, epsilon, TieTolerance::Relative)
}

pub fn tie_breaker_with(
    mdp: &FiniteMdp,
    r0: &RewardTable,
    state: usize,
    demoted: usize,
    promoted: usize,
    epsilon: f64,
    tie: TieTolerance,
) -> Result<RewardTable> {
    if demoted == promoted {
        return Err(LabError::InvalidArgument(format!(
            "demoted and promoted action are both {promoted}"
        )));
    }
    let scaled = epsilon / (1.0 + mdp.discount());
    let lifted = lift(mdp, r0, state, promoted, scaled, tie)?;
    if !lifted.tied.contains(demoted) {
        return Err(LabError::Precondition(format!(
            "action {demoted} is not optimal at state {state} (optimal set {:?})",
            lifted.tied.actions
        )));
    }
    Ok(r0.add(&lifted.delta))
}

/// Like [`tie_breaker`], additionally rejecting `epsilon` above half the
/// smallest suboptimality gap at `state`, so no formerly suboptimal action
/// moves by more than it trails.
pub fn tie_breaker_strict(
    mdp: &FiniteMdp,
    r0: &RewardTable,
    state: usize,
    demoted: usize,
    promoted: usize,
    epsilon: f64,
) -> Result<RewardTable> {
    let q0 = q_star(mdp, r0)?;
    let tied = optimal_action_set(&q0, state, TieTolerance::Relative);
    let best = q0.row_max(state);
    let min_gap = (0..mdp.n_actions())
        .filter(|&a| !tied.contains(a))
        .map(|a| best - q0.get(state, a))
        .reduce(f64::min);
    if let Some(gap) = min_gap {
        if epsilon > 0.5 * gap {
            return Err(LabError::InvalidArgument(format!(
                "epsilon {epsilon} exceeds half the smallest suboptimality gap {gap}"
            )));
        }
    }
    tie_breaker(mdp, r0, state, demoted, promoted, epsilon)
}

/// Outcome of one tie-breaking perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieBreakerReport {
    pub epsilon: f64,
    pub reward_distance: f64,
    /// `Q*_{r'}(s, promoted) − Q*_{r'}(s, demoted)`.
    pub gap: f64,
    /// `ε / (1+γ)`.
    pub expected_gap: f64,
    pub optimal_set_before: ActionSet,
    pub optimal_set_after: ActionSet,
    pub promoted_unique: bool,
    pub holds: bool,
}

/// Tolerance on the promoted-minus-demoted gap.
pub const TIE_BREAK_GAP_TOLERANCE: f64 = 1e-8;

pub fn tie_breaker_report(
    mdp: &FiniteMdp,
    r0: &RewardTable,
    state: usize,
    demoted: usize,
    promoted: usize,
    epsilon: f64,
    tie: impl Into<TieTolerance>,
) -> Result<TieBreakerReport> {
    let tie = tie.into();
    let r1 = tie_breaker_with(mdp, r0, state, demoted, promoted, epsilon, tie)?;
    let q0 = q_star(mdp, r0)?;
    let q1 = q_star(mdp, &r1)?;
    let gap = q1.get(state, promoted) - q1.get(state, demoted);
    let expected_gap = epsilon / (1.0 + mdp.discount());
    let reward_distance = r1.sup_distance(r0);
    let after = optimal_action_set(&q1, state, tie);
    let promoted_unique = after.actions == [promoted];
    Ok(TieBreakerReport {
        epsilon,
        reward_distance,
        gap,
        expected_gap,
        optimal_set_before: optimal_action_set(&q0, state, tie),
        optimal_set_after: after,
        promoted_unique,
        holds: promoted_unique
            && (gap - expected_gap).abs() <= TIE_BREAK_GAP_TOLERANCE
            && reward_distance <= epsilon * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bump_is_center_indicator() {
        let mdp = fixtures::two_path();
        let bump = make_bump(&mdp, (0, 1), &[0]).unwrap();
        assert_eq!(bump.values.get(0, 1), 1.0);
        assert_eq!(bump.values.get(0, 0), 0.0);
        assert_eq!(bump.values.sup_norm(), 1.0);
        assert_eq!(bump.values.as_slice().iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn bump_rejects_protected_center() {
        let mdp = fixtures::two_path();
        assert!(matches!(
            make_bump(&mdp, (0, 1), &[1]),
            Err(LabError::InvalidArgument(_))
        ));
    }

    #[test]
    fn inverse_bellman_round_trip() {
        let mdp = fixtures::two_path();
        let r = RewardTable::from_fn(4, 2, |s, a| 0.25 * s as f64 - 0.5 * a as f64);
        let back = inverse_bellman(&q_star(&mdp, &r).unwrap(), &mdp).unwrap();
        assert!(back.sup_distance(&r) <= 1e-9);
    }

    #[test]
    fn inverse_bellman_zero_discount_is_identity() {
        let mdp = fixtures::two_path().with_discount(0.0).unwrap();
        let q = QTable::from_fn(4, 2, |s, a| (s * a) as f64 + 0.5);
        assert_eq!(inverse_bellman(&q, &mdp).unwrap().into_q(), q);
    }

    #[test]
    fn bumped_two_path_reward_within_bound() {
        let mdp = fixtures::two_path();
        let q0 = q_star(&mdp, &fixtures::two_path_reward()).unwrap();
        let bump = make_bump(&mdp, (0, 1), &[0]).unwrap();
        let r = inverse_bellman(&q0.zip_with(&bump.values, |q, b| q + 0.1 * b), &mdp).unwrap();
        assert!(r.sup_distance(&fixtures::two_path_reward()) <= 0.19);
    }

    #[test]
    fn two_path_certificate() {
        let cert = discontinuity_sequence(
            &fixtures::two_path(),
            &fixtures::two_path_reward(),
            0,
            1,
            1e-3,
            TieTolerance::Relative,
        )
        .unwrap();
        assert!(cert.valid, "{cert:?}");
        assert!(cert.reward_distance <= 1.9e-3);
        assert_eq!(cert.switched_action_set.actions, vec![1]);
        assert_eq!(cert.tv_jump, 0.5);
        assert_eq!(cert.tv_jump_lowest_index, 1.0);
    }

    #[test]
    fn three_way_tie_jump_is_two_thirds() {
        let cert = discontinuity_sequence(
            &fixtures::three_path(),
            &fixtures::three_path_reward(),
            0,
            2,
            1e-3,
            TieTolerance::Relative,
        )
        .unwrap();
        assert!(cert.valid);
        assert!((cert.tv_jump - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lowest_index_target_has_no_jump_under_lowest_rule() {
        let cert = discontinuity_sequence(
            &fixtures::two_path(),
            &fixtures::two_path_reward(),
            0,
            0,
            1e-3,
            TieTolerance::Relative,
        )
        .unwrap();
        assert_eq!(cert.tv_jump_lowest_index, 0.0);
        assert_eq!(cert.tv_jump, 0.5);
    }

    #[test]
    fn degeneracy_precondition() {
        let mdp = fixtures::two_path();
        let r = RewardTable::from_fn(4, 2, |s, a| if s == 0 && a == 0 { 1.0 } else { 0.0 });
        assert!(matches!(
            discontinuity_sequence(&mdp, &r, 0, 1, 1e-3, TieTolerance::Relative),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn tie_breaker_gap() {
        let mdp = fixtures::two_path();
        let r0 = fixtures::two_path_reward();
        let rep = tie_breaker_report(&mdp, &r0, 0, 0, 1, 0.19, TieTolerance::Relative).unwrap();
        assert!((rep.gap - 0.1).abs() < 1e-8, "{rep:?}");
        assert!(rep.holds);
        for eps in [1e-1, 1e-2, 1e-3] {
            let rep = tie_breaker_report(&mdp, &r0, 0, 0, 1, eps, TieTolerance::Relative).unwrap();
            assert!(rep.promoted_unique);
            assert!((rep.gap - eps / 1.9).abs() < 1e-8);
        }
    }

    #[test]
    fn tie_breaker_rejects_same_action() {
        let mdp = fixtures::two_path();
        assert!(matches!(
            tie_breaker(&mdp, &fixtures::two_path_reward(), 0, 1, 1, 0.1),
            Err(LabError::InvalidArgument(_))
        ));
    }

    #[test]
    fn strict_tie_breaker_rejects_large_epsilon() {
        let mdp = fixtures::three_path();
        // Action 2 trails by 0.5 at s0.
        let r0 = RewardTable::from_fn(5, 3, |s, a| match (s, a) {
            (0, 2) => 0.5,
            (0, _) => 1.0,
            _ => 0.0,
        });
        assert!(tie_breaker_strict(&mdp, &r0, 0, 0, 1, 0.2).is_ok());
        assert!(tie_breaker_strict(&mdp, &r0, 0, 0, 1, 0.3).is_err());
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(tv_distance(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }
}
