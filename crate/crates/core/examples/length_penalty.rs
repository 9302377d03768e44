//! A reasoning chain where correct answers arrive after 3 or 7 steps. Answer
//! correctness alone cannot separate the two lengths; the length penalty
//! `0.0003·|3 − n_y|` makes the short path the unique optimum. Both claims are
//! checked against exhaustive policy enumeration.

use policy_lab::mdp::{brute_force_q_star, optimal_action_set, q_star, TieTolerance};
use policy_lab::scenario::{builtin, Experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = builtin("lcpo_chain")?;
    let mdp = scenario.build_mdp()?;
    let correctness = scenario.reward.clone().expect("single reward");
    let Experiment::SlackerCheck {
        missing_reward: penalty,
        ..
    } = &scenario.experiment
    else {
        unreachable!("lcpo_chain is a slacker check");
    };
    let with_penalty = correctness.add(penalty);

    for (name, r) in [
        ("correctness only", &correctness),
        ("with length penalty", &with_penalty),
    ] {
        let q = q_star(&mdp, r)?;
        let set = optimal_action_set(&q, 0, TieTolerance::Relative);
        let oracle = optimal_action_set(&brute_force_q_star(&mdp, r)?, 0, TieTolerance::Relative);
        println!(
            "{name:<20} Q*(prompt) = [{:.6}, {:.6}]  optimal {:?}  (enumeration agrees: {})",
            q.get(0, 0),
            q.get(0, 1),
            set.actions,
            set.actions == oracle.actions
        );
    }
    println!("at the prompt, action 0 starts the short chain and action 1 the long one");
    Ok(())
}
