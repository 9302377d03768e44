//! A formatting bonus as a tie-breaker: two correct answers earn the same
//! reward until a bonus of at most `ε` favours one of them.

use policy_lab::mdp::{FiniteMdp, RewardTable, TieTolerance};
use policy_lab::perturbation::{tie_breaker_report, tie_breaker_strict};

const PLAIN: usize = 0;
const FORMATTED: usize = 1;

fn prompt_mdp(discount: f64) -> FiniteMdp {
    // prompt -> {plain, formatted, wrong} answer -> done
    let mut entries = Vec::new();
    for a in 0..3 {
        entries.push((0, a, 1 + a, 1.0));
        for s in 1..5 {
            entries.push((s, a, 4, 1.0));
        }
    }
    FiniteMdp::from_sparse(5, 3, &entries, discount).expect("valid chain")
}

fn main() -> policy_lab::Result<()> {
    let reward = RewardTable::from_fn(5, 3, |s, _| if s == 1 || s == 2 { 1.0 } else { 0.0 });
    for gamma in [0.5, 0.9] {
        let mdp = prompt_mdp(gamma);
        println!("gamma = {gamma}");
        for eps in [1e-1, 1e-2, 1e-3] {
            let rep = tie_breaker_report(&mdp, &reward, 0, PLAIN, FORMATTED, eps, TieTolerance::Relative)?;
            println!(
                "  eps {eps:<6} |r' - r| = {:.2e}  gap = {:.6e}  eps/(1+g) = {:.6e}  optimal {:?} -> {:?}",
                rep.reward_distance,
                rep.gap,
                rep.expected_gap,
                rep.optimal_set_before.actions,
                rep.optimal_set_after.actions
            );
        }
    }

    // The strict variant refuses bonuses large enough to reorder the
    // already-suboptimal "wrong" answer.
    let mdp = prompt_mdp(0.9);
    match tie_breaker_strict(&mdp, &reward, 0, PLAIN, FORMATTED, 1.0) {
        Ok(_) => println!("strict: accepted"),
        Err(e) => println!("strict with eps = 1: {e}"),
    }
    Ok(())
}
