//! Finite MDPs, exact Bellman machinery, and policy evaluation.

mod bellman;
mod evaluation;
mod model;
mod oracle;
mod tables;

pub(crate) use bellman::iterate_contraction;
pub use bellman::{
    bellman_backup, greedy_policy, optimal_action_set, q_lipschitz_report, q_star, solve_q_star, solve_q_star_traced,
    FixedPoint, LipschitzReport, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use evaluation::{policy_evaluation, DIRECT_SOLVE_LIMIT, ITERATIVE_RESIDUAL};
pub(crate) use evaluation::{policy_kernel, policy_values, solve_resolvent};
pub use model::{FiniteMdp, ROW_SUM_TOLERANCE};
pub use oracle::{brute_force_q_star, deterministic_policies, deterministic_policy_count, MAX_ENUMERATED_POLICIES};
pub use tables::{
    check_distribution, ActionSet, PolicyTable, QTable, RewardTable, Selection, TieTolerance, ValueTable,
    PROB_SUM_TOLERANCE,
};
