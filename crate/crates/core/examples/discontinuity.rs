//! Two tied routes out of `s0`. Each reward in the sequence is within
//! `ε(1+γ)` of the original, yet the optimal policy at `s0` jumps by the same
//! amount every time.
//!
//! Run with `cargo run --example discontinuity`.

use policy_lab::fixtures;
use policy_lab::mdp::{optimal_action_set, q_star, TieTolerance};
use policy_lab::perturbation::discontinuity_sequence;

fn main() -> policy_lab::Result<()> {
    let mdp = fixtures::two_path();
    let r0 = fixtures::two_path_reward();
    let q0 = q_star(&mdp, &r0)?;
    let tied = optimal_action_set(&q0, 0, TieTolerance::Relative);
    println!("Q*(s0, .) = {:?}, optimal set {:?}", q0.row(0), tied.actions);
    println!();
    println!(
        "{:>8}  {:>12}  {:>12}  {:>10}  {:>10}  {:>8}",
        "eps", "|r_eps - r0|", "eps(1+g)", "Q gap", "TV unif", "TV low"
    );
    for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
        let c = discontinuity_sequence(&mdp, &r0, 0, 1, eps, TieTolerance::Relative)?;
        println!(
            "{eps:>8.0e}  {:>12.3e}  {:>12.3e}  {:>10.3e}  {:>10.3}  {:>8.3}",
            c.reward_distance, c.distance_bound, c.tied_gaps[0].1, c.tv_jump, c.tv_jump_lowest_index
        );
        assert!(c.valid);
    }
    println!();
    println!("The reward converges to r0 while the policy under uniform tie-breaking stays 0.5 away.");
    Ok(())
}
