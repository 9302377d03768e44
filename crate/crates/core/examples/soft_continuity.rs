//! Hard-max versus Boltzmann policies along the same perturbation sequence.
//!
//! The greedy policy at `s0` stays 0.5 away in total variation no matter how
//! small `ε` gets; the soft-optimal policy moves by `O(ε/α)`.

use policy_lab::fixtures;
use policy_lab::mdp::TieTolerance;
use policy_lab::perturbation::{discontinuity_sequence, tv_distance};
use policy_lab::soft::{boltzmann_policy, soft_policy_stability_report, soft_q_star, Temperature};

fn main() -> policy_lab::Result<()> {
    let mdp = fixtures::two_path();
    let r0 = fixtures::two_path_reward();

    for alpha in [0.1, 1.0] {
        let t = Temperature::new(alpha)?;
        let base = boltzmann_policy(&soft_q_star(&mdp, &r0, t)?);
        println!("alpha = {alpha}: pi(.|s0) = {:?}", base.row(0));
        println!(
            "  {:>8}  {:>8}  {:>12}  {:>12}  {:>10}",
            "eps", "hard TV", "soft TV", "bound", "TV/eps"
        );
        for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let c = discontinuity_sequence(&mdp, &r0, 0, 1, eps, TieTolerance::Relative)?;
            let moved = boltzmann_policy(&soft_q_star(&mdp, &c.perturbed_reward, t)?);
            let soft_tv = tv_distance(base.row(0), moved.row(0))?;
            let rep = soft_policy_stability_report(&mdp, &r0, &c.perturbed_reward, t)?;
            println!(
                "  {eps:>8.0e}  {:>8.3}  {soft_tv:>12.4e}  {:>12.4e}  {:>10.4}",
                c.tv_jump,
                rep.bound,
                soft_tv / eps
            );
        }
        println!();
    }
    Ok(())
}
