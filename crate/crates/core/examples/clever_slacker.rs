//! A weak grader pays for passing tests however they were passed. The policy
//! trained on it may cheat; a certificate names a state and action where the
//! missing reward exposes it, and measures the true value lost.

use policy_lab::incomplete::{optimal_set_shift, slacker_certificate, slacker_certificate_for_policy};
use policy_lab::mdp::{FiniteMdp, PolicyTable, RewardTable, Selection, TieTolerance};

const CHEAT: usize = 0;
const HONEST: usize = 1;

fn main() -> policy_lab::Result<()> {
    // s0 -cheat-> hack -> pass -> done;  s0 -honest-> work -> pass
    let (s0, work, hack, pass, done) = (0, 1, 2, 3, 4);
    let mut entries = vec![(s0, CHEAT, hack, 1.0), (s0, HONEST, work, 1.0)];
    for a in [CHEAT, HONEST] {
        entries.extend([
            (work, a, pass, 1.0),
            (hack, a, pass, 1.0),
            (pass, a, done, 1.0),
            (done, a, done, 1.0),
        ]);
    }
    let mdp = FiniteMdp::from_sparse(5, 2, &entries, 0.9)?;
    let r_train = RewardTable::from_fn(5, 2, |s, _| if s == pass { 1.0 } else { 0.0 });
    let r_missing = RewardTable::from_fn(5, 2, |s, a| if (s, a) == (s0, CHEAT) { -0.5 } else { 0.0 });
    let mu = [1.0, 0.0, 0.0, 0.0, 0.0];

    let shift = optimal_set_shift(&mdp, &r_train, &r_missing, s0, TieTolerance::Relative)?;
    println!(
        "optimal at s0: training {:?}, true {:?}",
        shift.train.actions, shift.truth.actions
    );

    for selection in Selection::ALL {
        let cert = slacker_certificate(&mdp, &r_train, &r_missing, &mu, selection)?;
        println!(
            "{selection:?}: witness {:?}, advantage {:.3}, reachability {:.3}, true value gap {:.3}",
            cert.witness(),
            cert.advantage_missing,
            cert.reachability,
            cert.true_value_gap
        );
    }

    let honest = PolicyTable::deterministic(2, &[HONEST; 5]);
    let cert = slacker_certificate_for_policy(&mdp, &r_train, &r_missing, &mu, &honest)?;
    println!(
        "always honest: witness {:?}, gap {}",
        cert.witness(),
        cert.true_value_gap
    );
    Ok(())
}
