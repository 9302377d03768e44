use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::format::{Expectations, Experiment, ScenarioFile};
use super::report::{ExperimentReport, RunRecord, Verdict};
use crate::error::Result;
use crate::incomplete::{optimal_set_shift, slacker_certificate_with};
use crate::mdp::{
    deterministic_policies, deterministic_policy_count, greedy_policy, policy_evaluation, policy_values, q_star,
    FiniteMdp, PolicyTable, RewardTable, Selection, TieTolerance, MAX_ENUMERATED_POLICIES,
};
use crate::multi::{effective_reward, mixture_objective, multi_discontinuity_sequence};
use crate::perturbation::{discontinuity_sequence, tie_breaker_report, tv_distance};
use crate::soft::{boltzmann_policy, soft_policy_stability_report, soft_q_star, Temperature};

/// Expected TV jumps are exact fractions; this absorbs the rounding of `1/m`.
const TV_MATCH_TOLERANCE: f64 = 1e-12;
/// Gap between the certificate and the brute-force oracle.
const ORACLE_GAP_TOLERANCE: f64 = 1e-9;
/// A value gap at or below this is treated as zero.
const ZERO_GAP: f64 = 1e-12;

const MIXTURE_NOTE: &str = "qualitative reproduction only: a small perturbation applied to every reward \
component shifts the aggregated optimal policy; no benchmark-scale effect sizes are modeled";

pub fn run_experiment(scenario: &ScenarioFile) -> ExperimentReport {
    run_experiment_with_seed(scenario, scenario.params.seed)
}

/// Runs the experiment with `seed` in place of the scenario's own seed.
pub fn run_experiment_with_seed(scenario: &ScenarioFile, seed: u64) -> ExperimentReport {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut oracle_verdicts = Vec::new();
    let runs = match scenario.build_mdp() {
        Err(e) => vec![RunRecord::new(0, "build_mdp").failed(e)],
        Ok(mdp) => {
            let ctx = Ctx {
                mdp: &mdp,
                scenario,
                tie: scenario.params.tie(),
                selection: scenario.params.selection,
                seed,
            };
            match &scenario.experiment {
                Experiment::DiscontinuitySweep {
                    state,
                    target,
                    epsilons,
                } => ctx.discontinuity(*state, *target, epsilons),
                Experiment::TieBreakerSweep {
                    state,
                    demoted,
                    promoted,
                    epsilons,
                } => ctx.tie_breaker(*state, *demoted, *promoted, epsilons),
                Experiment::SoftStabilitySweep {
                    state,
                    target,
                    epsilons,
                    alphas,
                    random_draws,
                    random_scale,
                } => ctx.soft(*state, *target, epsilons, alphas, *random_draws, *random_scale),
                Experiment::SlackerCheck {
                    missing_reward,
                    initial_distribution,
                    focus_state,
                } => {
                    let (record, verdicts) = ctx.slacker(missing_reward, initial_distribution, *focus_state);
                    oracle_verdicts = verdicts;
                    vec![record]
                }
                Experiment::MixturePerturbation {
                    state,
                    target,
                    epsilons,
                    mixture,
                } => {
                    notes.push(MIXTURE_NOTE.to_string());
                    ctx.mixture(*state, *target, epsilons, mixture.as_ref())
                }
            }
        }
    };

    let mut verdicts = vec![runs_hold_verdict(&runs)];
    verdicts.extend(oracle_verdicts);
    if let Some(expect) = &scenario.expect {
        verdicts.extend(expectation_verdicts(expect, &runs));
    }
    let all_hold = verdicts.iter().all(|v| v.holds);
    ExperimentReport {
        scenario_id: scenario.id.clone(),
        experiment: scenario.experiment.kind().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        runs,
        verdicts,
        all_hold,
        notes,
        wall_clock: start.elapsed(),
    }
}

struct Ctx<'a> {
    mdp: &'a FiniteMdp,
    scenario: &'a ScenarioFile,
    tie: TieTolerance,
    selection: Selection,
    seed: u64,
}

/// Fills `record` through `body`; an error marks the run failed instead of
/// aborting the sweep.
fn attempt(mut record: RunRecord, body: impl FnOnce(&mut RunRecord) -> Result<()>) -> RunRecord {
    match body(&mut record) {
        Ok(()) => record,
        Err(e) => record.failed(e),
    }
}

fn pick(selection: Selection, uniform: f64, lowest: f64) -> f64 {
    match selection {
        Selection::UniformOverTies => uniform,
        Selection::LowestIndex => lowest,
    }
}

impl Ctx<'_> {
    fn reward(&self) -> &RewardTable {
        self.scenario
            .reward
            .as_ref()
            .expect("validated scenario has a single reward")
    }

    fn discontinuity(&self, state: usize, target: usize, epsilons: &[f64]) -> Vec<RunRecord> {
        let r0 = self.reward();
        epsilons
            .par_iter()
            .enumerate()
            .map(|(i, &eps)| {
                let mut rec = RunRecord::new(i, "discontinuity");
                rec.epsilon = Some(eps);
                attempt(rec, |rec| {
                    let c = discontinuity_sequence(self.mdp, r0, state, target, eps, self.tie)?;
                    rec.lhs = Some(c.reward_distance);
                    rec.rhs = Some(c.distance_bound);
                    rec.holds = c.valid;
                    rec.tv_jump = Some(pick(self.selection, c.tv_jump, c.tv_jump_lowest_index));
                    rec.set_before = c.original_action_set.actions;
                    rec.set_after = c.switched_action_set.actions;
                    let gap_error = c.tied_gaps.iter().map(|(_, g)| (g - eps).abs()).fold(0.0, f64::max);
                    rec.extra.insert("tied_gap_error".into(), gap_error);
                    rec.extra.insert("tv_jump_uniform".into(), c.tv_jump);
                    rec.extra.insert("tv_jump_lowest_index".into(), c.tv_jump_lowest_index);
                    Ok(())
                })
            })
            .collect()
    }

    fn tie_breaker(&self, state: usize, demoted: usize, promoted: usize, epsilons: &[f64]) -> Vec<RunRecord> {
        let r0 = self.reward();
        let n_actions = self.mdp.n_actions();
        epsilons
            .par_iter()
            .enumerate()
            .map(|(i, &eps)| {
                let mut rec = RunRecord::new(i, "tie_breaker");
                rec.epsilon = Some(eps);
                attempt(rec, |rec| {
                    let rep = tie_breaker_report(self.mdp, r0, state, demoted, promoted, eps, self.tie)?;
                    rec.lhs = Some(rep.gap);
                    rec.rhs = Some(rep.expected_gap);
                    rec.holds = rep.holds && rep.reward_distance <= eps * (1.0 + 1e-12);
                    rec.tv_jump = Some(tv_distance(
                        &self.selection.row(&rep.optimal_set_before, n_actions),
                        &self.selection.row(&rep.optimal_set_after, n_actions),
                    )?);
                    rec.set_before = rep.optimal_set_before.actions;
                    rec.set_after = rep.optimal_set_after.actions;
                    rec.extra.insert("reward_distance".into(), rep.reward_distance);
                    Ok(())
                })
            })
            .collect()
    }

    fn soft(
        &self,
        state: usize,
        target: usize,
        epsilons: &[f64],
        alphas: &[f64],
        random_draws: usize,
        random_scale: f64,
    ) -> Vec<RunRecord> {
        let r0 = self.reward();
        let mut grid: Vec<(f64, Option<f64>, usize)> = Vec::new();
        for &alpha in alphas {
            grid.extend(epsilons.iter().map(|&eps| (alpha, Some(eps), 0)));
        }
        for &alpha in alphas {
            grid.extend((0..random_draws).map(|d| (alpha, None, d)));
        }
        grid.par_iter()
            .enumerate()
            .map(|(i, &(alpha, eps, draw))| match eps {
                Some(eps) => {
                    let mut rec = RunRecord::new(i, "soft_stability");
                    rec.epsilon = Some(eps);
                    rec.alpha = Some(alpha);
                    attempt(rec, |rec| {
                        let temp = Temperature::new(alpha)?;
                        let c = discontinuity_sequence(self.mdp, r0, state, target, eps, self.tie)?;
                        let rep = soft_policy_stability_report(self.mdp, r0, &c.perturbed_reward, temp)?;
                        let p0 = boltzmann_policy(&soft_q_star(self.mdp, r0, temp)?);
                        let p1 = boltzmann_policy(&soft_q_star(self.mdp, &c.perturbed_reward, temp)?);
                        rec.lhs = Some(rep.max_tv);
                        rec.rhs = Some(rep.bound);
                        rec.holds = rep.holds;
                        rec.tv_jump = Some(pick(self.selection, c.tv_jump, c.tv_jump_lowest_index));
                        rec.set_before = c.original_action_set.actions;
                        rec.set_after = c.switched_action_set.actions;
                        rec.extra
                            .insert("soft_tv_at_state".into(), tv_distance(p0.row(state), p1.row(state))?);
                        rec.extra.insert("reward_distance".into(), c.reward_distance);
                        Ok(())
                    })
                }
                None => {
                    let mut rec = RunRecord::new(i, "soft_stability_random");
                    rec.alpha = Some(alpha);
                    attempt(rec, |rec| {
                        let temp = Temperature::new(alpha)?;
                        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                        rng.set_stream(i as u64);
                        let r1 = RewardTable::from_fn(r0.n_states(), r0.n_actions(), |s, a| {
                            r0.get(s, a) + rng.random_range(-random_scale..=random_scale)
                        });
                        let rep = soft_policy_stability_report(self.mdp, r0, &r1, temp)?;
                        rec.lhs = Some(rep.max_tv);
                        rec.rhs = Some(rep.bound);
                        rec.holds = rep.holds;
                        rec.extra.insert("draw".into(), draw as f64);
                        rec.extra.insert("reward_distance".into(), r0.sup_distance(&r1));
                        Ok(())
                    })
                }
            })
            .collect()
    }

    fn slacker(&self, missing: &RewardTable, mu: &[f64], focus: Option<usize>) -> (RunRecord, Vec<Verdict>) {
        let r_train = self.reward();
        let mut verdicts = Vec::new();
        let rec = attempt(RunRecord::new(0, "slacker_certificate"), |rec| {
            let cert = slacker_certificate_with(self.mdp, r_train, missing, mu, self.selection, self.tie)?;
            let gap = cert.true_value_gap;
            rec.lhs = Some(gap);
            rec.value_gap = Some(gap);
            let sound = !cert.all_conditions() || gap > ZERO_GAP;
            rec.holds = sound;
            if let Some((s, a)) = cert.witness() {
                rec.extra.insert("witness_state".into(), s as f64);
                rec.extra.insert("witness_action".into(), a as f64);
                rec.extra.insert("advantage_missing".into(), cert.advantage_missing);
                rec.extra.insert("reachability".into(), cert.reachability);
            }
            rec.extra.insert("witness_count".into(), cert.witness_count as f64);

            let focus = focus.or(cert.state).unwrap_or(0);
            let shift = optimal_set_shift(self.mdp, r_train, missing, focus, self.tie)?;
            rec.extra.insert("focus_state".into(), focus as f64);

            let r_true = r_train.add(missing);
            if let Some(oracle) = brute_force_values(self.mdp, r_train, &r_true, mu, focus)? {
                let (_, v_train) = policy_evaluation(self.mdp, &cert.train_policy, &r_true)?;
                let brute_gap = oracle.best_true - v_train.weighted(mu);
                rec.rhs = Some(brute_gap);
                rec.extra.insert("brute_force_gap".into(), brute_gap);
                rec.holds = sound && (gap - brute_gap).abs() <= ORACLE_GAP_TOLERANCE;
                if let (Some(train), Some(truth)) = (oracle.train_focus_set, oracle.true_focus_set) {
                    verdicts.push(set_verdict(
                        "brute_force_train_optimal_set",
                        &shift.train.actions,
                        &train,
                    ));
                    verdicts.push(set_verdict(
                        "brute_force_true_optimal_set",
                        &shift.truth.actions,
                        &truth,
                    ));
                }
            }
            rec.set_before = shift.train.actions;
            rec.set_after = shift.truth.actions;
            Ok(())
        });
        (rec, verdicts)
    }

    fn mixture(
        &self,
        state: usize,
        target: usize,
        epsilons: &[f64],
        mix: Option<&crate::multi::MixtureSpec>,
    ) -> Vec<RunRecord> {
        let spec = self
            .scenario
            .reward_tuple
            .as_ref()
            .expect("validated scenario has a reward tuple");
        let (tuple, weights) = (&spec.components, &spec.weights);
        epsilons
            .par_iter()
            .enumerate()
            .map(|(i, &eps)| {
                let mut rec = RunRecord::new(i, "mixture_discontinuity");
                rec.epsilon = Some(eps);
                attempt(rec, |rec| {
                    let c = multi_discontinuity_sequence(self.mdp, tuple, weights, state, target, eps, self.tie)?;
                    rec.lhs = Some(c.tuple_distance);
                    rec.rhs = Some(eps * (1.0 + self.mdp.discount()));
                    rec.holds = c.valid;
                    rec.tv_jump = Some(pick(
                        self.selection,
                        c.effective.tv_jump,
                        c.effective.tv_jump_lowest_index,
                    ));
                    rec.set_before = c.effective.original_action_set.actions.clone();
                    rec.set_after = c.effective.switched_action_set.actions.clone();
                    rec.extra.insert("aggregation_residual".into(), c.aggregation_residual);
                    if let Some(mix) = mix {
                        let before = greedy_policy(
                            &q_star(self.mdp, &effective_reward(tuple, weights)?)?,
                            self.selection,
                            self.tie,
                        );
                        let after_reward = effective_reward(&c.perturbed_tuple, weights)?;
                        let after = greedy_policy(&q_star(self.mdp, &after_reward)?, self.selection, self.tie);
                        rec.extra.insert(
                            "mixture_objective_before".into(),
                            mixture_objective(self.mdp, tuple, mix, &before)?,
                        );
                        rec.extra.insert(
                            "mixture_objective_after".into(),
                            mixture_objective(self.mdp, tuple, mix, &after)?,
                        );
                    }
                    Ok(())
                })
            })
            .collect()
    }
}

struct OracleValues {
    best_true: f64,
    train_focus_set: Option<Vec<usize>>,
    true_focus_set: Option<Vec<usize>>,
}

/// Enumerates deterministic policies for the optimal `μ·V` under the true
/// reward. When `μ` is a point mass on `focus`, also reports which focus
/// actions some optimal policy plays, under each reward.
fn brute_force_values(
    mdp: &FiniteMdp,
    r_train: &RewardTable,
    r_true: &RewardTable,
    mu: &[f64],
    focus: usize,
) -> Result<Option<OracleValues>> {
    match deterministic_policy_count(mdp) {
        Some(c) if c <= MAX_ENUMERATED_POLICIES => {}
        _ => return Ok(None),
    }
    let n_actions = mdp.n_actions();
    let point_mass = mu[focus] == 1.0;
    // Per focus action: best μ·V under r_train and under r_true.
    let per_action = deterministic_policies(mdp.n_states(), n_actions)
        .par_bridge()
        .map(|choices| -> Result<(usize, f64, f64)> {
            let pi = PolicyTable::deterministic(n_actions, &choices);
            let weighted = |v: &[f64]| v.iter().zip(mu).map(|(x, m)| x * m).sum::<f64>();
            if point_mass {
                let v = policy_values(mdp, &pi, &[r_train, r_true])?;
                Ok((choices[focus], weighted(&v[0]), weighted(&v[1])))
            } else {
                let v = policy_values(mdp, &pi, &[r_true])?;
                Ok((choices[focus], f64::NEG_INFINITY, weighted(&v[0])))
            }
        })
        .try_fold(
            || vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); n_actions],
            |mut acc, item| {
                let (a, train, truth) = item?;
                acc[a].0 = acc[a].0.max(train);
                acc[a].1 = acc[a].1.max(truth);
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); n_actions],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| (x.0.max(y.0), x.1.max(y.1))).collect()),
        )?;

    let best_true = per_action.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let near_max = |values: Vec<f64>| {
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = TieTolerance::Relative.resolve(&values);
        (0..values.len())
            .filter(|&a| values[a] >= best - tol)
            .collect::<Vec<_>>()
    };
    let (train_focus_set, true_focus_set) = if point_mass {
        (
            Some(near_max(per_action.iter().map(|p| p.0).collect())),
            Some(near_max(per_action.iter().map(|p| p.1).collect())),
        )
    } else {
        (None, None)
    };
    Ok(Some(OracleValues {
        best_true,
        train_focus_set,
        true_focus_set,
    }))
}

fn show_set(s: &[usize]) -> String {
    format!("{s:?}")
}

fn set_verdict(name: &str, expected: &[usize], observed: &[usize]) -> Verdict {
    Verdict {
        name: name.into(),
        expected: show_set(expected),
        observed: show_set(observed),
        holds: expected == observed,
    }
}

fn runs_hold_verdict(runs: &[RunRecord]) -> Verdict {
    let failed: Vec<usize> = runs.iter().filter(|r| !r.holds).map(|r| r.index).collect();
    Verdict {
        name: "all_runs_hold".into(),
        expected: "no failed runs".into(),
        observed: if failed.is_empty() {
            format!("{} runs hold", runs.len())
        } else {
            format!("failed runs {failed:?}")
        },
        holds: failed.is_empty() && !runs.is_empty(),
    }
}

fn expectation_verdicts(expect: &Expectations, runs: &[RunRecord]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let sweep: Vec<&RunRecord> = runs.iter().filter(|r| r.epsilon.is_some()).collect();
    let slacker = runs.iter().find(|r| r.check == "slacker_certificate");

    if let Some(tv) = expect.tv_jump {
        let observed: Vec<Option<f64>> = sweep.iter().map(|r| r.tv_jump).collect();
        out.push(Verdict {
            name: "tv_jump".into(),
            expected: format!("{tv} on every sweep run"),
            observed: format!("{observed:?}"),
            holds: !observed.is_empty()
                && observed
                    .iter()
                    .all(|o| o.is_some_and(|v| (v - tv).abs() <= TV_MATCH_TOLERANCE)),
        });
    }
    if let Some(set) = &expect.switched_set {
        let observed: Vec<&Vec<usize>> = sweep.iter().map(|r| &r.set_after).collect();
        out.push(Verdict {
            name: "switched_set".into(),
            expected: format!("{} on every sweep run", show_set(set)),
            observed: format!("{observed:?}"),
            holds: !observed.is_empty() && observed.iter().all(|o| *o == set),
        });
    }
    if let Some((s, a)) = expect.witness {
        let observed = slacker.and_then(|r| {
            Some((
                *r.extra.get("witness_state")? as usize,
                *r.extra.get("witness_action")? as usize,
            ))
        });
        out.push(Verdict {
            name: "witness".into(),
            expected: format!("{:?}", (s, a)),
            observed: observed.map_or("none".into(), |w| format!("{w:?}")),
            holds: observed == Some((s, a)),
        });
    }
    if let Some(positive) = expect.positive_gap {
        let gap = slacker.and_then(|r| r.value_gap);
        out.push(Verdict {
            name: "positive_gap".into(),
            expected: positive.to_string(),
            observed: gap.map_or("none".into(), |g| g.to_string()),
            holds: gap.is_some_and(|g| (g > ZERO_GAP) == positive),
        });
    }
    for (name, expected, observed) in [
        (
            "train_optimal_set",
            &expect.train_optimal_set,
            slacker.map(|r| &r.set_before),
        ),
        (
            "true_optimal_set",
            &expect.true_optimal_set,
            slacker.map(|r| &r.set_after),
        ),
    ] {
        if let Some(set) = expected {
            out.push(match observed {
                Some(o) => set_verdict(name, set, o),
                None => Verdict {
                    name: name.into(),
                    expected: show_set(set),
                    observed: "none".into(),
                    holds: false,
                },
            });
        }
    }
    if let Some(want) = expect.soft_tv_vanishes {
        let soft: Vec<&RunRecord> = runs.iter().filter(|r| r.check == "soft_stability").collect();
        let observed = soft_tv_vanishes(&soft);
        out.push(Verdict {
            name: "soft_tv_vanishes".into(),
            expected: want.to_string(),
            observed: observed.to_string(),
            holds: observed == want,
        });
    }
    out
}

/// For each temperature: the soft TV at the perturbed state shrinks with ε
/// and stays under a bound proportional to ε.
fn soft_tv_vanishes(runs: &[&RunRecord]) -> bool {
    let mut alphas: Vec<f64> = runs.iter().filter_map(|r| r.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    !alphas.is_empty()
        && alphas.iter().all(|&alpha| {
            let mut pts: Vec<(f64, f64, f64)> = runs
                .iter()
                .filter(|r| r.alpha == Some(alpha))
                .filter_map(|r| Some((r.epsilon?, *r.extra.get("soft_tv_at_state")?, r.rhs?)))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.len() >= 2 && pts.windows(2).all(|w| w[0].1 <= w[1].1) && pts.iter().all(|&(_, tv, bound)| tv <= bound)
        })
}
