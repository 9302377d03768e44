//! `‖Q*_{r1} − Q*_{r2}‖∞ ≤ ‖r1 − r2‖∞ / (1−γ)` on random MDPs, and the
//! constant shift that attains it. `ratio` is the left side over the right.
//!
//! Random instances also reach a ratio of 1 whenever the largest reward
//! change sits on an optimal self-loop, since it is then collected forever.

use policy_lab::fixtures::{random_mdp, random_reward};
use policy_lab::mdp::q_lipschitz_report;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> policy_lab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for gamma in [0.5, 0.9, 0.99] {
        let mut worst: f64 = 0.0;
        let mut total = 0.0;
        for _ in 0..200 {
            let mdp = random_mdp(&mut rng, 5, 3, gamma);
            let r1 = random_reward(&mut rng, 5, 3, 1.0);
            let r2 = r1.add(&random_reward(&mut rng, 5, 3, 0.1));
            let rep = q_lipschitz_report(&mdp, &r1, &r2)?;
            assert!(rep.holds);
            worst = worst.max(rep.ratio);
            total += rep.ratio;
        }
        let mdp = random_mdp(&mut rng, 5, 3, gamma);
        let r = random_reward(&mut rng, 5, 3, 1.0);
        let shift = q_lipschitz_report(&mdp, &r, &r.map(|v| v + 0.5))?;
        println!(
            "gamma {gamma:<5} random ratio mean {:.4} worst {worst:.6}  constant shift ratio {:.10}  (1/(1-g) = {:.0})",
            total / 200.0,
            shift.ratio,
            1.0 / (1.0 - gamma)
        );
    }
    Ok(())
}
