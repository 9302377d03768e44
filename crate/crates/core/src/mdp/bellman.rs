//! Hard-max Bellman optimality operator, value iteration, and argmax sets.

use serde::{Deserialize, Serialize};

use super::model::FiniteMdp;
use super::tables::{ActionSet, PolicyTable, QTable, RewardTable, Selection, TieTolerance};
use crate::error::{LabError, Result};

/// Default sup-norm distance to the fixed point requested from solvers.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200_000;

/// Output of a contraction fixed-point iteration.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub table: QTable,
    pub iterations: usize,
    /// `sup |q_{k+1} − q_k|` for every step taken.
    pub residuals: Vec<f64>,
}

/// Iterates `op` from the zero table until successive iterates differ by at
/// most `tol·(1−γ)/γ`, which puts the last iterate within `tol` of the fixed
/// point of a `γ`-contraction. With `γ = 0` a single application is exact.
///
/// The threshold is floored at a few ulps of the iterate magnitude; below
/// that the residual is pure round-off and cannot shrink further.
pub(crate) fn iterate_contraction(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    tol: f64,
    max_iter: usize,
    mut op: impl FnMut(&QTable) -> QTable,
) -> Result<FixedPoint> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(LabError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(LabError::InvalidArgument("max_iter must be positive".into()));
    }
    let mut cur = QTable::zeros(n_states, n_actions);
    if gamma == 0.0 {
        let next = op(&cur);
        let residual = next.sup_distance(&cur);
        return Ok(FixedPoint {
            table: next,
            iterations: 1,
            residuals: vec![residual],
        });
    }
    let threshold = tol * (1.0 - gamma) / gamma;
    let mut residuals = Vec::new();
    for k in 1..=max_iter {
        let next = op(&cur);
        let residual = next.sup_distance(&cur);
        residuals.push(residual);
        cur = next;
        let floor = 16.0 * f64::EPSILON * cur.sup_norm();
        if residual <= threshold.max(floor) {
            return Ok(FixedPoint {
                table: cur,
                iterations: k,
                residuals,
            });
        }
    }
    Err(LabError::NonConvergence {
        iterations: max_iter,
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// One application of the Bellman optimality operator:
/// `r(s,a) + γ Σ_{s'} P(s'|s,a) max_{a'} q(s',a')`.
pub fn bellman_backup(q: &QTable, r: &RewardTable, mdp: &FiniteMdp) -> Result<QTable> {
    mdp.check_shape("q table", q.n_states(), q.n_actions())?;
    mdp.check_shape("reward table", r.n_states(), r.n_actions())?;
    Ok(backup_unchecked(q, r, mdp))
}

fn backup_unchecked(q: &QTable, r: &RewardTable, mdp: &FiniteMdp) -> QTable {
    let v = q.greedy_values();
    let gamma = mdp.discount();
    QTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        r.get(s, a) + gamma * mdp.expect(s, a, &v)
    })
}

/// Value iteration for `Q*_r`, returning the full trace.
pub fn solve_q_star_traced(mdp: &FiniteMdp, r: &RewardTable, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    mdp.check_shape("reward table", r.n_states(), r.n_actions())?;
    iterate_contraction(mdp.n_states(), mdp.n_actions(), mdp.discount(), tol, max_iter, |q| {
        backup_unchecked(q, r, mdp)
    })
}

/// Optimal action values `Q*_r`, within `tol` of the true fixed point.
pub fn solve_q_star(mdp: &FiniteMdp, r: &RewardTable, tol: f64, max_iter: usize) -> Result<QTable> {
    solve_q_star_traced(mdp, r, tol, max_iter).map(|fp| fp.table)
}

/// [`solve_q_star`] with [`DEFAULT_TOL`] and [`DEFAULT_MAX_ITER`].
pub fn q_star(mdp: &FiniteMdp, r: &RewardTable) -> Result<QTable> {
    solve_q_star(mdp, r, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Actions whose value is within the tie band of the row maximum.
pub fn optimal_action_set(q: &QTable, state: usize, tie: impl Into<TieTolerance>) -> ActionSet {
    let row = q.row(state);
    let tie_tolerance = tie.into().resolve(row);
    let best = q.row_max(state);
    let actions = (0..row.len()).filter(|&a| row[a] >= best - tie_tolerance).collect();
    ActionSet {
        state,
        actions,
        tie_tolerance,
    }
}

/// Greedy policy supported on the optimal action set of every state.
pub fn greedy_policy(q: &QTable, selection: Selection, tie: impl Into<TieTolerance>) -> PolicyTable {
    let tie = tie.into();
    let n_actions = q.n_actions();
    let data = (0..q.n_states())
        .flat_map(|s| selection.row(&optimal_action_set(q, s, tie), n_actions))
        .collect();
    PolicyTable::from_raw(q.n_states(), n_actions, data)
}

/// Both sides of `‖Q*_{r1} − Q*_{r2}‖∞ ≤ ‖r1 − r2‖∞ / (1−γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; 1 means the bound is attained. Zero when both sides vanish.
    pub ratio: f64,
    /// `lhs / ‖r1 − r2‖∞`, comparable against `1/(1−γ)`.
    pub lipschitz_ratio: f64,
    pub holds: bool,
}

pub fn q_lipschitz_report(mdp: &FiniteMdp, r1: &RewardTable, r2: &RewardTable) -> Result<LipschitzReport> {
    let q1 = q_star(mdp, r1)?;
    let q2 = q_star(mdp, r2)?;
    let lhs = q1.sup_distance(&q2);
    let dr = r1.sup_distance(r2);
    let rhs = dr / (1.0 - mdp.discount());
    Ok(LipschitzReport {
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        lipschitz_ratio: if dr > 0.0 { lhs / dr } else { 0.0 },
        holds: lhs <= rhs + 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn zero_discount_backup_is_reward() {
        let mdp = fixtures::two_path().with_discount(0.0).unwrap();
        let r = RewardTable::from_fn(4, 2, |s, a| (s * 2 + a) as f64 - 1.5);
        let q = QTable::filled(4, 2, 7.0);
        assert_eq!(bellman_backup(&q, &r, &mdp).unwrap(), q_star(&mdp, &r).unwrap());
        assert_eq!(bellman_backup(&q, &r, &mdp).unwrap().into_reward(), r);
    }

    #[test]
    fn two_path_backup_of_zero_is_reward() {
        let mdp = fixtures::two_path();
        let r = fixtures::two_path_reward();
        let out = bellman_backup(&QTable::zeros(4, 2), &r, &mdp).unwrap();
        assert_eq!(out.into_reward(), r);
    }

    #[test]
    fn two_path_q_star() {
        let q = q_star(&fixtures::two_path(), &fixtures::two_path_reward()).unwrap();
        assert_eq!(q.row(0), &[1.0, 1.0]);
        for s in 1..4 {
            assert_eq!(q.row(s), &[0.0, 0.0]);
        }
    }

    #[test]
    fn absorbing_geometric_series() {
        let mdp = FiniteMdp::from_sparse(1, 1, &[(0, 0, 0, 1.0)], 0.9).unwrap();
        let q = q_star(&mdp, &RewardTable::filled(1, 1, 1.0)).unwrap();
        assert!((q.get(0, 0) - 10.0).abs() <= DEFAULT_TOL);
    }

    #[test]
    fn shape_mismatch_is_dimension_error() {
        let mdp = fixtures::two_path();
        let err = bellman_backup(&QTable::zeros(3, 2), &fixtures::two_path_reward(), &mdp);
        assert!(matches!(err, Err(LabError::Dimension(_))));
    }

    #[test]
    fn non_convergence_reports_residual() {
        let mdp = FiniteMdp::from_sparse(1, 1, &[(0, 0, 0, 1.0)], 0.99).unwrap();
        let err = solve_q_star(&mdp, &RewardTable::filled(1, 1, 1.0), 1e-10, 5).unwrap_err();
        match err {
            LabError::NonConvergence { iterations, residual } => {
                assert_eq!(iterations, 5);
                assert!((residual - 0.99f64.powi(4)).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn action_set_examples() {
        let q = QTable::from_rows(vec![vec![3.0, 1.0, 0.0], vec![1.0, 1.0 - 1e-12, 0.0]]).unwrap();
        assert_eq!(optimal_action_set(&q, 0, 0.0).actions, vec![0]);
        assert_eq!(optimal_action_set(&q, 1, 1e-9).actions, vec![0, 1]);
        let qs = q_star(&fixtures::two_path(), &fixtures::two_path_reward()).unwrap();
        assert_eq!(optimal_action_set(&qs, 0, 1e-9).actions, vec![0, 1]);
    }

    #[test]
    fn greedy_policy_rules() {
        let q = QTable::from_rows(vec![vec![2.0, 2.0, 0.0]]).unwrap();
        let uni = greedy_policy(&q, Selection::UniformOverTies, TieTolerance::Relative);
        assert_eq!(uni.row(0), &[0.5, 0.5, 0.0]);
        let low = greedy_policy(&q, Selection::LowestIndex, TieTolerance::Relative);
        assert_eq!(low.row(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn lipschitz_report_identical_rewards() {
        let mdp = fixtures::two_path();
        let r = fixtures::two_path_reward();
        let rep = q_lipschitz_report(&mdp, &r, &r).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.holds);
    }

    #[test]
    fn lipschitz_report_constant_shift_is_tight() {
        let mdp = fixtures::two_path();
        let r = fixtures::two_path_reward();
        let rep = q_lipschitz_report(&mdp, &r, &r.map(|v| v - 0.3)).unwrap();
        assert!((rep.lhs - 3.0).abs() < 1e-9, "{rep:?}");
        assert!((rep.ratio - 1.0).abs() < 1e-9);
        assert!(rep.holds);
    }
}
