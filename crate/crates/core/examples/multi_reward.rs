//! Two reward components, one per domain, mixed per state. A perturbation
//! added identically to both components flips the aggregated optimum, and the
//! mixture objective records what each class of prompt gains or loses.

use policy_lab::mdp::{greedy_policy, optimal_action_set, q_star, Selection, TieTolerance};
use policy_lab::multi::{
    effective_lipschitz_report, effective_reward, mixture_objective, multi_discontinuity_sequence, MixtureSpec,
};
use policy_lab::scenario::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = builtin("mixture2")?;
    let mdp = scenario.build_mdp()?;
    let spec = scenario.reward_tuple.expect("mixture2 carries a reward tuple");
    let (tuple, weights) = (&spec.components, &spec.weights);

    let r_eff = effective_reward(tuple, weights)?;
    let q = q_star(&mdp, &r_eff)?;
    println!("R_eff(s0, .) = {:?}", r_eff.row(0));
    println!(
        "Q*(s0, .) = {:?}, optimal {:?}",
        q.row(0),
        optimal_action_set(&q, 0, TieTolerance::Relative).actions
    );

    let mix = MixtureSpec::new(vec![0.5, 0.5], vec![vec![1.0, 0.0, 0.0, 0.0]; 2])?;
    let before = greedy_policy(&q, Selection::UniformOverTies, TieTolerance::Relative);
    for eps in [1e-1, 1e-3, 1e-6] {
        let c = multi_discontinuity_sequence(&mdp, tuple, weights, 0, 1, eps, TieTolerance::Relative)?;
        let r_after = effective_reward(&c.perturbed_tuple, weights)?;
        let after = greedy_policy(
            &q_star(&mdp, &r_after)?,
            Selection::UniformOverTies,
            TieTolerance::Relative,
        );
        println!(
            "eps {eps:<5.0e}: tuple distance {:.2e}, switched {:?}, TV {}, J {:.4} -> {:.4}",
            c.tuple_distance,
            c.switched_action_set().actions,
            c.tv_jump(),
            mixture_objective(&mdp, tuple, &mix, &before)?,
            mixture_objective(&mdp, tuple, &mix, &after)?,
        );
    }

    let shifted = tuple.map_components(|k, r| if k == 0 { r.map(|v| v + 0.2) } else { r.clone() })?;
    let rep = effective_lipschitz_report(tuple, &shifted, weights)?;
    println!("shift component 0 by 0.2: |dR_eff| = {:.3} <= {:.3}", rep.lhs, rep.rhs);
    Ok(())
}
