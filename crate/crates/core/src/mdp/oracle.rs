//! Exhaustive search over deterministic stationary policies. Test oracle only.

use super::bellman::bellman_backup;
use super::evaluation::policy_evaluation;
use super::model::FiniteMdp;
use super::tables::{PolicyTable, QTable, RewardTable};
use crate::error::{LabError, Result};

/// Largest number of deterministic policies the oracle will enumerate.
pub const MAX_ENUMERATED_POLICIES: u64 = 100_000;

/// Number of deterministic stationary policies, or `None` on overflow.
pub fn deterministic_policy_count(mdp: &FiniteMdp) -> Option<u64> {
    (mdp.n_actions() as u64).checked_pow(u32::try_from(mdp.n_states()).ok()?)
}

/// Iterates every action assignment `state -> action` in odometer order
/// (state 0 varies fastest).
pub fn deterministic_policies(n_states: usize, n_actions: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = Some(vec![0usize; n_states]);
    std::iter::from_fn(move || {
        let cur = next.take()?;
        let mut succ = cur.clone();
        for digit in succ.iter_mut() {
            *digit += 1;
            if *digit < n_actions {
                next = Some(succ);
                break;
            }
            *digit = 0;
        }
        Some(cur)
    })
}

/// `Q*` as the pointwise maximum of `Q^π` over all deterministic policies,
/// refined by one Bellman backup.
pub fn brute_force_q_star(mdp: &FiniteMdp, r: &RewardTable) -> Result<QTable> {
    match deterministic_policy_count(mdp) {
        Some(c) if c <= MAX_ENUMERATED_POLICIES => {}
        _ => {
            return Err(LabError::TooLarge(format!(
                "{}^{} deterministic policies exceeds {MAX_ENUMERATED_POLICIES}",
                mdp.n_actions(),
                mdp.n_states()
            )))
        }
    }
    let mut best: Option<QTable> = None;
    for choices in deterministic_policies(mdp.n_states(), mdp.n_actions()) {
        let pi = PolicyTable::deterministic(mdp.n_actions(), &choices);
        let (q, _) = policy_evaluation(mdp, &pi, r)?;
        best = Some(match best {
            None => q,
            Some(b) => b.zip_with(&q, f64::max),
        });
    }
    let best = best.expect("at least one policy");
    bellman_backup(&best, r, mdp)
}
