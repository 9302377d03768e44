//! KL-regularized return of a few policies against a uniform base policy,
//! including the support violation raised when the base never plays an
//! action the evaluated policy uses.

use policy_lab::fixtures;
use policy_lab::mdp::PolicyTable;
use policy_lab::soft::kl_objective;

fn main() {
    let mdp = fixtures::two_path();
    let r = fixtures::two_path_reward();
    let mu = [1.0, 0.0, 0.0, 0.0];
    let base = PolicyTable::uniform(4, 2);

    let tilted = PolicyTable::from_rows(vec![vec![0.8, 0.2]; 4]).unwrap();
    let greedy = PolicyTable::deterministic(2, &[1, 0, 0, 0]);
    for beta in [0.0, 0.1, 1.0] {
        let j: Vec<String> = [&base, &tilted, &greedy]
            .iter()
            .map(|pi| format!("{:.5}", kl_objective(&mdp, &r, pi, &base, beta, &mu).unwrap()))
            .collect();
        println!(
            "beta {beta:<4} uniform {}  tilted {}  deterministic {}",
            j[0], j[1], j[2]
        );
    }

    let narrow_base = PolicyTable::deterministic(2, &[0, 0, 0, 0]);
    match kl_objective(&mdp, &r, &tilted, &narrow_base, 0.5, &mu) {
        Ok(v) => println!("unexpected value {v}"),
        Err(e) => println!("{e}"),
    }
}
