//! The JSON scenario file: an MDP with sparse transitions, rewards, one
//! experiment block, run parameters, and optional expected verdicts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::mdp::{FiniteMdp, RewardTable, Selection, TieTolerance};
use crate::multi::{MixtureSpec, RewardTuple, WeightTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub mdp: MdpSpec,
    /// Single reward; the training reward for `slacker_check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_tuple: Option<TupleSpec>,
    pub experiment: Experiment,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectations>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSpec {
    pub n_states: usize,
    pub n_actions: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub state_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub action_labels: Vec<String>,
    pub discount: f64,
    /// `[state, action, next_state, probability]` entries; omitted entries are zero.
    pub transitions: Vec<(usize, usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleSpec {
    pub components: RewardTuple,
    pub weights: WeightTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    DiscontinuitySweep {
        state: usize,
        target: usize,
        epsilons: Vec<f64>,
    },
    TieBreakerSweep {
        state: usize,
        demoted: usize,
        promoted: usize,
        epsilons: Vec<f64>,
    },
    SoftStabilitySweep {
        state: usize,
        target: usize,
        epsilons: Vec<f64>,
        alphas: Vec<f64>,
        /// Extra random reward perturbations per temperature.
        #[serde(default)]
        random_draws: usize,
        #[serde(default = "default_random_scale")]
        random_scale: f64,
    },
    SlackerCheck {
        missing_reward: RewardTable,
        initial_distribution: Vec<f64>,
        /// State whose optimal sets are reported before and after adding
        /// the missing reward.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        focus_state: Option<usize>,
    },
    MixturePerturbation {
        state: usize,
        target: usize,
        epsilons: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mixture: Option<MixtureSpec>,
    },
}

fn default_random_scale() -> f64 {
    0.1
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::DiscontinuitySweep { .. } => "discontinuity_sweep",
            Experiment::TieBreakerSweep { .. } => "tie_breaker_sweep",
            Experiment::SoftStabilitySweep { .. } => "soft_stability_sweep",
            Experiment::SlackerCheck { .. } => "slacker_check",
            Experiment::MixturePerturbation { .. } => "mixture_perturbation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Absolute tie band; when absent the relative default is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_tolerance: Option<f64>,
    #[serde(default = "default_selection")]
    pub selection: Selection,
    #[serde(default)]
    pub seed: u64,
}

fn default_selection() -> Selection {
    Selection::UniformOverTies
}

impl Default for Params {
    fn default() -> Self {
        Self {
            tie_tolerance: None,
            selection: default_selection(),
            seed: 0,
        }
    }
}

impl Params {
    pub fn tie(&self) -> TieTolerance {
        self.tie_tolerance
            .map_or(TieTolerance::Relative, TieTolerance::Absolute)
    }
}

/// Expected verdicts a scenario asserts about its own report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_jump: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switched_set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_gap: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_optimal_set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_optimal_set: Option<Vec<usize>>,
    /// Soft TV must shrink at least linearly as ε decreases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_tv_vanishes: Option<bool>,
}

impl ScenarioFile {
    pub fn build_mdp(&self) -> Result<FiniteMdp, ScenarioError> {
        let m = &self.mdp;
        FiniteMdp::from_sparse(m.n_states, m.n_actions, &m.transitions, m.discount)
            .map_err(|e| ScenarioError::Validation(format!("mdp: {e}")))
    }

    /// Checks every cross-field invariant not enforced while parsing.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Validation(m));
        if self.id.trim().is_empty() {
            return invalid("id must be nonempty".into());
        }
        let mdp = self.build_mdp()?;
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        if !self.mdp.state_labels.is_empty() && self.mdp.state_labels.len() != ns {
            return invalid(format!(
                "mdp.state_labels has {} entries for {ns} states",
                self.mdp.state_labels.len()
            ));
        }
        if !self.mdp.action_labels.is_empty() && self.mdp.action_labels.len() != na {
            return invalid(format!(
                "mdp.action_labels has {} entries for {na} actions",
                self.mdp.action_labels.len()
            ));
        }
        let shape_ok = |what: &str, r: &RewardTable| {
            if (r.n_states(), r.n_actions()) == (ns, na) {
                Ok(())
            } else {
                Err(ScenarioError::Validation(format!(
                    "{what} is {}x{}, mdp is {ns}x{na}",
                    r.n_states(),
                    r.n_actions()
                )))
            }
        };
        match (&self.reward, &self.reward_tuple) {
            (Some(r), None) => shape_ok("reward", r)?,
            (None, Some(t)) => {
                for (k, c) in t.components.components().iter().enumerate() {
                    shape_ok(&format!("reward_tuple.components[{k}]"), c)?;
                }
                if t.weights.n_states() != ns || t.weights.n_components() != t.components.len() {
                    return invalid(format!(
                        "reward_tuple.weights is {}x{}, expected {ns}x{}",
                        t.weights.n_states(),
                        t.weights.n_components(),
                        t.components.len()
                    ));
                }
            }
            _ => return invalid("exactly one of reward and reward_tuple must be given".into()),
        }
        if let Some(t) = self.params.tie_tolerance {
            if !t.is_finite() || t < 0.0 {
                return invalid(format!("params.tie_tolerance must be nonnegative, got {t}"));
            }
        }

        let state_ok = |field: &str, s: usize| {
            if s < ns {
                Ok(())
            } else {
                Err(ScenarioError::Validation(format!(
                    "experiment.{field} = {s} out of range for {ns} states"
                )))
            }
        };
        let action_ok = |field: &str, a: usize| {
            if a < na {
                Ok(())
            } else {
                Err(ScenarioError::Validation(format!(
                    "experiment.{field} = {a} out of range for {na} actions"
                )))
            }
        };
        let positive_grid = |field: &str, xs: &[f64]| {
            if let Some(x) = xs.iter().find(|x| !x.is_finite() || **x <= 0.0) {
                Err(ScenarioError::Validation(format!(
                    "experiment.{field} contains non-positive value {x}"
                )))
            } else {
                Ok(())
            }
        };
        let needs_single = || {
            if self.reward.is_none() {
                Err(ScenarioError::Validation(format!(
                    "experiment {} needs a single reward",
                    self.experiment.kind()
                )))
            } else {
                Ok(())
            }
        };

        match &self.experiment {
            Experiment::DiscontinuitySweep {
                state,
                target,
                epsilons,
            } => {
                needs_single()?;
                state_ok("state", *state)?;
                action_ok("target", *target)?;
                positive_grid("epsilons", epsilons)?;
            }
            Experiment::TieBreakerSweep {
                state,
                demoted,
                promoted,
                epsilons,
            } => {
                needs_single()?;
                state_ok("state", *state)?;
                action_ok("demoted", *demoted)?;
                action_ok("promoted", *promoted)?;
                positive_grid("epsilons", epsilons)?;
            }
            Experiment::SoftStabilitySweep {
                state,
                target,
                epsilons,
                alphas,
                random_scale,
                ..
            } => {
                needs_single()?;
                state_ok("state", *state)?;
                action_ok("target", *target)?;
                positive_grid("epsilons", epsilons)?;
                positive_grid("alphas", alphas)?;
                positive_grid("random_scale", &[*random_scale])?;
            }
            Experiment::SlackerCheck {
                missing_reward,
                initial_distribution,
                focus_state,
            } => {
                needs_single()?;
                shape_ok("experiment.missing_reward", missing_reward)?;
                if initial_distribution.len() != ns {
                    return invalid(format!(
                        "experiment.initial_distribution has {} entries for {ns} states",
                        initial_distribution.len()
                    ));
                }
                crate::mdp::check_distribution(initial_distribution)
                    .map_err(|m| ScenarioError::Validation(format!("experiment.initial_distribution: {m}")))?;
                if let Some(s) = focus_state {
                    state_ok("focus_state", *s)?;
                }
            }
            Experiment::MixturePerturbation {
                state,
                target,
                epsilons,
                mixture,
            } => {
                let Some(t) = &self.reward_tuple else {
                    return invalid("experiment mixture_perturbation needs reward_tuple".into());
                };
                state_ok("state", *state)?;
                action_ok("target", *target)?;
                positive_grid("epsilons", epsilons)?;
                if let Some(mix) = mixture {
                    MixtureSpec::new(mix.class_priors.clone(), mix.initial_distributions.clone())
                        .map_err(|e| ScenarioError::Validation(format!("experiment.mixture: {e}")))?;
                    if mix.class_priors.len() != t.components.len() {
                        return invalid(format!(
                            "experiment.mixture has {} classes for {} reward components",
                            mix.class_priors.len(),
                            t.components.len()
                        ));
                    }
                    if let Some(k) = mix.initial_distributions.iter().position(|d| d.len() != ns) {
                        return invalid(format!(
                            "experiment.mixture.initial_distributions[{k}] must have {ns} entries"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses and validates scenario text; `origin` names the source in errors.
pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioFile, ScenarioError> {
    let scenario: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// Reads, parses, and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, &path.display().to_string())
}
