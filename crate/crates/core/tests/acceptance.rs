//! Acceptance criteria, one line per criterion. Runs with `harness = false`
//! so the verdict lines appear in plain `cargo test` output.

use std::process::Command;
use std::time::{Duration, Instant};

use policy_lab::fixtures::{self, random_mdp, random_reward};
use policy_lab::incomplete::slacker_certificate_with;
use policy_lab::mdp::{
    brute_force_q_star, deterministic_policies, optimal_action_set, policy_evaluation, q_star, solve_q_star, FiniteMdp,
    PolicyTable, RewardTable, TieTolerance, DEFAULT_MAX_ITER,
};
use policy_lab::multi::{effective_lipschitz_report, multi_discontinuity_sequence, RewardTuple, WeightTable};
use policy_lab::perturbation::{discontinuity_sequence, tie_breaker_report, tv_distance};
use policy_lab::scenario::{builtin, builtin_names, Experiment};
use policy_lab::soft::{
    boltzmann_policy, soft_policy_stability_report, soft_q_star, softmax_l1_bound_report, Temperature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_secs, || {
        format!("runtime {:.2}s exceeds {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn c1_discontinuity() -> Outcome {
    let start = Instant::now();
    let mdp = fixtures::two_path();
    let r0 = fixtures::two_path_reward();
    let gamma = mdp.discount();
    for eps in [1e-1, 1e-3, 1e-6] {
        let c = discontinuity_sequence(&mdp, &r0, 0, 1, eps, TieTolerance::Relative).map_err(|e| e.to_string())?;
        check(c.reward_distance <= eps * (1.0 + gamma) * (1.0 + 1e-12), || {
            format!("eps {eps}: distance {} > {}", c.reward_distance, eps * (1.0 + gamma))
        })?;
        check(c.switched_action_set.actions == [1], || {
            format!("eps {eps}: switched set {:?}", c.switched_action_set.actions)
        })?;
        for &(a, gap) in &c.tied_gaps {
            check((gap - eps).abs() <= 1e-9, || {
                format!("eps {eps}: gap over action {a} is {gap}")
            })?;
        }
        check(c.tv_jump == 0.5, || format!("eps {eps}: uniform TV jump {}", c.tv_jump))?;
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "eps in {{1e-1,1e-3,1e-6}}: dist <= eps(1+g), set {{a2}}, gap = eps +- 1e-9, TV = 0.5 exactly; {:.3}s < 1s",
        start.elapsed().as_secs_f64()
    ))
}

fn c2_q_lipschitz() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = 1e-12;
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..1000 {
        let gamma = [0.5, 0.9, 0.99][trial % 3];
        let ns = rng.random_range(1..=6);
        let na = rng.random_range(1..=4);
        let mdp = random_mdp(&mut rng, ns, na, gamma);
        let r1 = random_reward(&mut rng, ns, na, 1.0);
        let scale = 10f64.powf(rng.random_range(-1.0..0.0));
        let mut dr = random_reward(&mut rng, ns, na, scale);
        dr.set(0, 0, scale);
        let r2 = r1.add(&dr);
        let q1 = solve_q_star(&mdp, &r1, tol, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        let q2 = solve_q_star(&mdp, &r2, tol, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        let ratio = q1.sup_distance(&q2) / r1.sup_distance(&r2);
        let limit = 1.0 / (1.0 - gamma);
        worst_excess = worst_excess.max(ratio - limit);
        check(ratio <= limit + 1e-8, || {
            format!("trial {trial}: ratio {ratio} > {limit}")
        })?;
    }
    for gamma in [0.5, 0.9, 0.99] {
        let mdp = random_mdp(&mut rng, 5, 3, gamma);
        let r1 = random_reward(&mut rng, 5, 3, 1.0);
        let r2 = r1.map(|v| v + 1.0);
        let q1 = solve_q_star(&mdp, &r1, tol, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        let q2 = solve_q_star(&mdp, &r2, tol, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        let tight = q1.sup_distance(&q2) * (1.0 - gamma);
        check((tight - 1.0).abs() <= 1e-9, || {
            format!("constant shift at gamma {gamma}: ratio {tight}")
        })?;
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "1000 trials ratio <= 1/(1-g) + 1e-8 (worst excess {worst_excess:.2e}); constant shift ratio = 1 +- 1e-9; {:.2}s < 30s",
        start.elapsed().as_secs_f64()
    ))
}

fn c3_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    let mut done = 0;
    while done < 500 {
        let ns = rng.random_range(1..=6);
        let na = rng.random_range(1..=4);
        if (na as u64).pow(ns as u32) > 10_000 {
            continue;
        }
        let gamma = rng.random_range(0.0..0.95);
        let mdp = random_mdp(&mut rng, ns, na, gamma);
        let r = random_reward(&mut rng, ns, na, 1.0);
        let vi = q_star(&mdp, &r).map_err(|e| e.to_string())?;
        let bf = brute_force_q_star(&mdp, &r).map_err(|e| e.to_string())?;
        let d = vi.sup_distance(&bf);
        worst = worst.max(d);
        check(d <= 1e-8, || format!("instance {done}: sup distance {d}"))?;
        done += 1;
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "500 instances, |Q_vi - Q_bf| <= 1e-8 (worst {worst:.2e}); {:.2}s < 60s",
        start.elapsed().as_secs_f64()
    ))
}

fn c4_tie_breaker() -> Outcome {
    for gamma in [0.5, 0.9] {
        let mdp = fixtures::two_path().with_discount(gamma).map_err(|e| e.to_string())?;
        let r0 = fixtures::two_path_reward();
        for eps in [1e-1, 1e-2, 1e-3] {
            let rep = tie_breaker_report(&mdp, &r0, 0, 0, 1, eps, TieTolerance::Relative).map_err(|e| e.to_string())?;
            let expected = eps / (1.0 + gamma);
            check((rep.gap - expected).abs() <= 1e-8, || {
                format!("gamma {gamma} eps {eps}: gap {} vs {expected}", rep.gap)
            })?;
            check(rep.promoted_unique, || {
                format!("gamma {gamma} eps {eps}: set {:?}", rep.optimal_set_after.actions)
            })?;
            check(rep.reward_distance <= eps * (1.0 + 1e-12), || {
                format!("gamma {gamma} eps {eps}: distance {}", rep.reward_distance)
            })?;
        }
    }
    Ok("gap = eps/(1+g) +- 1e-8 for eps in {1e-1,1e-2,1e-3}, g in {0.5,0.9}; promoted action unique".into())
}

/// Optimal `μ·V` by enumerating deterministic policies.
fn brute_optimal_value(mdp: &FiniteMdp, r: &RewardTable, mu: &[f64]) -> Result<f64, String> {
    let mut best = f64::NEG_INFINITY;
    for choices in deterministic_policies(mdp.n_states(), mdp.n_actions()) {
        let pi = PolicyTable::deterministic(mdp.n_actions(), &choices);
        let (_, v) = policy_evaluation(mdp, &pi, r).map_err(|e| e.to_string())?;
        best = best.max(v.weighted(mu));
    }
    Ok(best)
}

fn slacker_parts(
    name: &str,
) -> Result<
    (
        FiniteMdp,
        RewardTable,
        RewardTable,
        Vec<f64>,
        policy_lab::mdp::Selection,
    ),
    String,
> {
    let s = builtin(name).map_err(|e| e.to_string())?;
    let mdp = s.build_mdp().map_err(|e| e.to_string())?;
    let Experiment::SlackerCheck {
        missing_reward,
        initial_distribution,
        ..
    } = s.experiment
    else {
        return Err(format!("{name} is not a slacker_check scenario"));
    };
    Ok((
        mdp,
        s.reward.expect("single reward"),
        missing_reward,
        initial_distribution,
        s.params.selection,
    ))
}

fn c5_slacker() -> Outcome {
    let mut gaps = Vec::new();
    for name in ["grader", "twopath_missing"] {
        let (mdp, r_train, r_missing, mu, selection) = slacker_parts(name)?;
        let cert = slacker_certificate_with(&mdp, &r_train, &r_missing, &mu, selection, TieTolerance::Relative)
            .map_err(|e| e.to_string())?;
        check(cert.conditions_met == [true; 3], || {
            format!("{name}: conditions {:?}", cert.conditions_met)
        })?;
        check(cert.true_value_gap > 0.0, || {
            format!("{name}: gap {}", cert.true_value_gap)
        })?;
        let r_true = r_train.add(&r_missing);
        let (_, v_train) = policy_evaluation(&mdp, &cert.train_policy, &r_true).map_err(|e| e.to_string())?;
        let oracle_gap = brute_optimal_value(&mdp, &r_true, &mu)? - v_train.weighted(&mu);
        check((cert.true_value_gap - oracle_gap).abs() <= 1e-9, || {
            format!("{name}: gap {} vs brute force {oracle_gap}", cert.true_value_gap)
        })?;
        let zero = RewardTable::zeros(mdp.n_states(), mdp.n_actions());
        let control = slacker_certificate_with(&mdp, &r_train, &zero, &mu, selection, TieTolerance::Relative)
            .map_err(|e| e.to_string())?;
        check(control.true_value_gap == 0.0, || {
            format!("{name}: zero control gap {}", control.true_value_gap)
        })?;
        gaps.push(format!("{name} {:.4}", cert.true_value_gap));
    }
    Ok(format!(
        "grader, twopath_missing: 3/3 conditions, gap > 0 and = brute force +- 1e-9 ({}); r_missing = 0 gives gap 0",
        gaps.join(", ")
    ))
}

fn c6_softmax_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for alpha in [0.1, 1.0, 10.0] {
        let t = Temperature::new(alpha).map_err(|e| e.to_string())?;
        for trial in 0..1000 {
            let n = rng.random_range(1..=8);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let rep = softmax_l1_bound_report(&x, &y, t).map_err(|e| e.to_string())?;
            check(rep.l1 <= rep.bound + 1e-10, || {
                format!("alpha {alpha} trial {trial}: l1 {} > {}", rep.l1, rep.bound)
            })?;
        }
    }
    let delta = 1e-4;
    let rep = softmax_l1_bound_report(
        &[0.0, 0.0],
        &[delta / 2.0, -delta / 2.0],
        Temperature::new(1.0).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let ratio = rep.l1 / rep.bound;
    check(ratio >= 0.99, || format!("tightness ratio {ratio}"))?;
    Ok(format!(
        "3000 pairs l1 <= linf/alpha + 1e-10 for alpha in {{0.1,1,10}}; p = 1/2 pair ratio {ratio:.6} >= 0.99"
    ))
}

fn c7_soft_stability() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for alpha in [0.1, 1.0] {
        let t = Temperature::new(alpha).map_err(|e| e.to_string())?;
        for trial in 0..1000 {
            let gamma = [0.5, 0.9][trial % 2];
            let ns = rng.random_range(1..=5);
            let na = rng.random_range(1..=4);
            let mdp = random_mdp(&mut rng, ns, na, gamma);
            let r1 = random_reward(&mut rng, ns, na, 1.0);
            let scale = 10f64.powf(rng.random_range(-3.0..0.0));
            let r2 = r1.add(&random_reward(&mut rng, ns, na, scale));
            let rep = soft_policy_stability_report(&mdp, &r1, &r2, t).map_err(|e| e.to_string())?;
            check(rep.max_tv <= rep.bound + 1e-8, || {
                format!("alpha {alpha} trial {trial}: tv {} > {}", rep.max_tv, rep.bound)
            })?;
        }
    }

    let mdp = fixtures::two_path();
    let r0 = fixtures::two_path_reward();
    let gamma = mdp.discount();
    let mut slopes = Vec::new();
    for alpha in [0.1, 1.0] {
        let t = Temperature::new(alpha).unwrap();
        let p0 = boltzmann_policy(&soft_q_star(&mdp, &r0, t).map_err(|e| e.to_string())?);
        let mut prev_slope: Option<f64> = None;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let c = discontinuity_sequence(&mdp, &r0, 0, 1, eps, TieTolerance::Relative).map_err(|e| e.to_string())?;
            check(c.tv_jump == 0.5, || format!("eps {eps}: hard TV {}", c.tv_jump))?;
            let p1 = boltzmann_policy(&soft_q_star(&mdp, &c.perturbed_reward, t).map_err(|e| e.to_string())?);
            let soft_tv = tv_distance(p0.row(0), p1.row(0)).map_err(|e| e.to_string())?;
            let bound = eps * (1.0 + gamma) / (2.0 * alpha * (1.0 - gamma));
            check(soft_tv <= bound + 1e-8, || {
                format!("alpha {alpha} eps {eps}: soft TV {soft_tv} > {bound}")
            })?;
            let slope = soft_tv / eps;
            if let Some(prev) = prev_slope {
                check((slope - prev).abs() <= 0.05 * prev, || {
                    format!("alpha {alpha} eps {eps}: TV/eps {slope} drifts from {prev}")
                })?;
            }
            prev_slope = Some(slope);
        }
        slopes.push(format!("alpha {alpha}: TV/eps -> {:.4}", prev_slope.unwrap()));
    }
    Ok(format!(
        "2000 draws tv <= |dr|/(2a(1-g)) + 1e-8; twopath hard TV = 0.5 for eps down to 1e-6 while soft TV/eps stays within 5% ({}); {:.2}s",
        slopes.join(", "),
        start.elapsed().as_secs_f64()
    ))
}

fn c8_effective_reward() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let random_weights = |rng: &mut ChaCha8Rng, ns: usize, k: usize| {
        let rows = (0..ns)
            .map(|_| {
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            })
            .collect();
        WeightTable::new(rows)
    };
    for trial in 0..1000 {
        let (ns, na, k) = (
            rng.random_range(1..=6),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let t1 = RewardTuple::new((0..k).map(|_| random_reward(&mut rng, ns, na, 1.0)).collect()).unwrap();
        let t2 = RewardTuple::new((0..k).map(|_| random_reward(&mut rng, ns, na, 1.0)).collect()).unwrap();
        let w = random_weights(&mut rng, ns, k).map_err(|e| e.to_string())?;
        let rep = effective_lipschitz_report(&t1, &t2, &w).map_err(|e| e.to_string())?;
        check(rep.lhs <= rep.rhs + 1e-12, || {
            format!("trial {trial}: {} > {}", rep.lhs, rep.rhs)
        })?;
    }
    // All weight at one state on the component carrying the largest change.
    let base: Vec<RewardTable> = (0..3).map(|_| random_reward(&mut rng, 4, 2, 1.0)).collect();
    let t1 = RewardTuple::new(base.clone()).unwrap();
    let mut moved = base;
    let bumped = moved[1].get(2, 1) + 0.75;
    moved[1].set(2, 1, bumped);
    let t2 = RewardTuple::new(moved).unwrap();
    let mut rows = vec![vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0]; 4];
    rows[2] = vec![0.0, 1.0, 0.0];
    let w = WeightTable::new(rows).map_err(|e| e.to_string())?;
    let rep = effective_lipschitz_report(&t1, &t2, &w).map_err(|e| e.to_string())?;
    check((rep.lhs - rep.rhs).abs() <= 1e-12, || {
        format!("concentrated weights: {} vs {}", rep.lhs, rep.rhs)
    })?;
    Ok(format!(
        "1000 tuple pairs |dR_eff| <= max_k |dR_k| + 1e-12; concentrated weights give equality ({:.3e} difference)",
        (rep.lhs - rep.rhs).abs()
    ))
}

fn c9_multi_discontinuity() -> Outcome {
    let s = builtin("mixture2").map_err(|e| e.to_string())?;
    let mdp = s.build_mdp().map_err(|e| e.to_string())?;
    let spec = s.reward_tuple.expect("tuple scenario");
    let gamma = mdp.discount();
    for eps in [1e-1, 1e-3, 1e-6] {
        let c = multi_discontinuity_sequence(&mdp, &spec.components, &spec.weights, 0, 1, eps, TieTolerance::Relative)
            .map_err(|e| e.to_string())?;
        check(c.valid, || format!("eps {eps}: certificate invalid"))?;
        check(c.tuple_distance <= eps * (1.0 + gamma) * (1.0 + 1e-12), || {
            format!("eps {eps}: tuple distance {}", c.tuple_distance)
        })?;
        check(c.switched_action_set().actions == [1], || {
            format!("eps {eps}: set {:?}", c.switched_action_set().actions)
        })?;
        let m = c.effective.original_action_set.len() as f64;
        check(c.tv_jump() == (m - 1.0) / m, || {
            format!("eps {eps}: TV {} vs {}", c.tv_jump(), (m - 1.0) / m)
        })?;
    }

    let mdp = fixtures::three_path();
    let r = fixtures::three_path_reward();
    for eps in [1e-1, 1e-4] {
        let single = discontinuity_sequence(&mdp, &r, 0, 2, eps, TieTolerance::Relative).map_err(|e| e.to_string())?;
        let tuple = RewardTuple::new(vec![r.clone()]).unwrap();
        let w = WeightTable::constant(mdp.n_states(), &[1.0]).unwrap();
        let multi = multi_discontinuity_sequence(&mdp, &tuple, &w, 0, 2, eps, TieTolerance::Relative)
            .map_err(|e| e.to_string())?;
        check(multi.effective == single, || {
            format!("eps {eps}: N=1 certificate differs")
        })?;
        check(
            multi.tuple_distance.to_bits() == single.reward_distance.to_bits(),
            || {
                format!(
                    "eps {eps}: tuple distance {} vs {}",
                    multi.tuple_distance, single.reward_distance
                )
            },
        )?;
        check(multi.perturbed_tuple.components()[0] == single.perturbed_reward, || {
            format!("eps {eps}: perturbed reward differs")
        })?;
    }
    Ok("mixture2 valid for eps in {1e-1,1e-3,1e-6}: tuple distance <= eps(1+g), set {a2}, TV = (m-1)/m; N=1 bit-matches single reward".into())
}

fn c10_lcpo() -> Outcome {
    let start = Instant::now();
    let (mdp, r_train, r_penalty, _, _) = slacker_parts("lcpo_chain")?;
    let r_true = r_train.add(&r_penalty);
    let mut sets = Vec::new();
    for (label, r) in [("with penalty", &r_true), ("without penalty", &r_train)] {
        let vi = optimal_action_set(&q_star(&mdp, r).map_err(|e| e.to_string())?, 0, TieTolerance::Relative);
        let bf = optimal_action_set(
            &brute_force_q_star(&mdp, r).map_err(|e| e.to_string())?,
            0,
            TieTolerance::Relative,
        );
        check(vi.actions == bf.actions, || {
            format!(
                "{label}: value iteration {:?} vs brute force {:?}",
                vi.actions, bf.actions
            )
        })?;
        sets.push(bf.actions);
    }
    check(sets[0] == [0], || {
        format!("with penalty the prompt set is {:?}", sets[0])
    })?;
    check(sets[1] == [0, 1], || {
        format!("without penalty the prompt set is {:?}", sets[1])
    })?;
    Ok(format!(
        "alpha = 0.0003: prompt optimal set {{short}} with penalty, {{short, long}} without; matches 2^16-policy enumeration; {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn c11_cli() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_policy-lab");
    let names = builtin_names();
    for name in &names {
        let out = Command::new(bin)
            .args(["run", "--builtin", name])
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.code() == Some(0), || {
            format!(
                "{name}: exit {:?}\n{}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            )
        })?;
    }
    let run = || {
        Command::new(bin)
            .args(["run", "--builtin", "twopath_soft", "--seed", "42"])
            .output()
            .map(|o| o.stdout)
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    check(!a.is_empty() && a == b, || "json reports differ between replays".into())?;
    Ok(format!(
        "{} built-ins exit 0; twopath_soft --seed 42 json byte-identical across two runs",
        names.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("discontinuity reproduction", c1_discontinuity),
        ("Q* Lipschitz bound", c2_q_lipschitz),
        ("oracle equivalence", c3_oracle),
        ("tie-breaker gap", c4_tie_breaker),
        ("clever-slacker certificate", c5_slacker),
        ("softmax lemma", c6_softmax_lemma),
        ("soft-policy stability", c7_soft_stability),
        ("effective reward Lipschitz", c8_effective_reward),
        ("multi-reward discontinuity", c9_multi_discontinuity),
        ("length-penalty chain", c10_lcpo),
        ("CLI contract", c11_cli),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL  {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
