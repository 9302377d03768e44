//! Several reward components aggregated through fixed per-state weights.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::mdp::{check_distribution, policy_evaluation, FiniteMdp, PolicyTable, RewardTable, TieTolerance};
use crate::perturbation::{certify, lift, DiscontinuityCertificate};
use crate::soft::{stability_with_distance, SoftStabilityReport, Temperature};

/// `N ≥ 1` reward tables of a common shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RewardTable>", into = "Vec<RewardTable>")]
pub struct RewardTuple {
    components: Vec<RewardTable>,
}

impl RewardTuple {
    pub fn new(components: Vec<RewardTable>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| LabError::InvalidArgument("reward tuple needs at least one component".into()))?;
        let shape = (first.n_states(), first.n_actions());
        if let Some(k) = components.iter().position(|c| (c.n_states(), c.n_actions()) != shape) {
            return Err(LabError::Dimension(format!(
                "component {k} differs in shape from component 0"
            )));
        }
        Ok(Self { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[RewardTable] {
        &self.components
    }

    pub fn n_states(&self) -> usize {
        self.components[0].n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.components[0].n_actions()
    }

    /// `max_k ‖R_k‖∞`.
    pub fn tuple_norm(&self) -> f64 {
        self.components.iter().map(RewardTable::sup_norm).fold(0.0, f64::max)
    }

    /// `max_k ‖R_k − S_k‖∞`. Panics if the tuples differ in length or shape.
    pub fn tuple_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "tuple lengths differ");
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sup_distance(b))
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "tuple lengths differ");
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    /// Adds the same table to every component.
    pub fn shift_all(&self, delta: &RewardTable) -> Self {
        Self {
            components: self.components.iter().map(|c| c.add(delta)).collect(),
        }
    }

    pub fn map_components(&self, mut f: impl FnMut(usize, &RewardTable) -> RewardTable) -> Result<Self> {
        Self::new(self.components.iter().enumerate().map(|(k, c)| f(k, c)).collect())
    }
}

impl TryFrom<Vec<RewardTable>> for RewardTuple {
    type Error = LabError;

    fn try_from(v: Vec<RewardTable>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RewardTuple> for Vec<RewardTable> {
    fn from(t: RewardTuple) -> Self {
        t.components
    }
}

/// Aggregation weights `w_k(s)`: one probability row per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct WeightTable {
    rows: Vec<Vec<f64>>,
}

impl WeightTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 {
            return Err(LabError::Dimension("weight table must be nonempty".into()));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LabError::Dimension(format!(
                    "weight row {s} has {} entries, expected {n}",
                    row.len()
                )));
            }
            check_distribution(row).map_err(|m| LabError::InvalidArgument(format!("weight row {s}: {m}")))?;
        }
        Ok(Self { rows })
    }

    /// The same weight row at every state.
    pub fn constant(n_states: usize, weights: &[f64]) -> Result<Self> {
        Self::new(vec![weights.to_vec(); n_states])
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_components(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, state: usize, component: usize) -> f64 {
        self.rows[state][component]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }
}

impl TryFrom<Vec<Vec<f64>>> for WeightTable {
    type Error = LabError;

    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightTable> for Vec<Vec<f64>> {
    fn from(w: WeightTable) -> Self {
        w.rows
    }
}

/// Class priors `p_k` and one initial-state distribution `D_k` per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub class_priors: Vec<f64>,
    pub initial_distributions: Vec<Vec<f64>>,
}

impl MixtureSpec {
    pub fn new(class_priors: Vec<f64>, initial_distributions: Vec<Vec<f64>>) -> Result<Self> {
        check_distribution(&class_priors).map_err(|m| LabError::InvalidArgument(format!("class priors: {m}")))?;
        if class_priors.iter().any(|p| *p <= 0.0) {
            return Err(LabError::InvalidArgument(
                "class priors must be strictly positive".into(),
            ));
        }
        if initial_distributions.len() != class_priors.len() {
            return Err(LabError::Dimension(format!(
                "{} priors but {} initial distributions",
                class_priors.len(),
                initial_distributions.len()
            )));
        }
        for (k, d) in initial_distributions.iter().enumerate() {
            check_distribution(d).map_err(|m| LabError::InvalidArgument(format!("initial distribution {k}: {m}")))?;
        }
        Ok(Self {
            class_priors,
            initial_distributions,
        })
    }
}

fn check_weights(tuple: &RewardTuple, weights: &WeightTable) -> Result<()> {
    if weights.n_states() != tuple.n_states() || weights.n_components() != tuple.len() {
        return Err(LabError::Dimension(format!(
            "weights are {}x{}, tuple has {} states and {} components",
            weights.n_states(),
            weights.n_components(),
            tuple.n_states(),
            tuple.len()
        )));
    }
    Ok(())
}

/// `R_eff(s,a) = Σ_k w_k(s) R_k(s,a)`.
pub fn effective_reward(tuple: &RewardTuple, weights: &WeightTable) -> Result<RewardTable> {
    check_weights(tuple, weights)?;
    Ok(RewardTable::from_fn(tuple.n_states(), tuple.n_actions(), |s, a| {
        tuple
            .components
            .iter()
            .zip(weights.row(s))
            .map(|(c, w)| w * c.get(s, a))
            .sum()
    }))
}

/// Both sides of `‖R_eff(t1) − R_eff(t2)‖∞ ≤ max_k ‖t1_k − t2_k‖∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveLipschitzReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn effective_lipschitz_report(
    t1: &RewardTuple,
    t2: &RewardTuple,
    weights: &WeightTable,
) -> Result<EffectiveLipschitzReport> {
    if t1.len() != t2.len() {
        return Err(LabError::Dimension(format!(
            "tuples have {} and {} components",
            t1.len(),
            t2.len()
        )));
    }
    let lhs = effective_reward(t1, weights)?.sup_distance(&effective_reward(t2, weights)?);
    let rhs = t1.tuple_distance(t2);
    Ok(EffectiveLipschitzReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// `J(π) = Σ_k p_k Σ_s D_k(s) V^π_{R_k}(s)`.
pub fn mixture_objective(mdp: &FiniteMdp, tuple: &RewardTuple, mix: &MixtureSpec, policy: &PolicyTable) -> Result<f64> {
    if mix.class_priors.len() != tuple.len() {
        return Err(LabError::Dimension(format!(
            "{} class priors for {} reward components",
            mix.class_priors.len(),
            tuple.len()
        )));
    }
    let mut total = 0.0;
    for ((p, d), r) in mix
        .class_priors
        .iter()
        .zip(&mix.initial_distributions)
        .zip(&tuple.components)
    {
        if d.len() != mdp.n_states() {
            return Err(LabError::Dimension(format!(
                "initial distribution has {} entries, MDP has {} states",
                d.len(),
                mdp.n_states()
            )));
        }
        let (_, v) = policy_evaluation(mdp, policy, r)?;
        total += p * v.weighted(d);
    }
    Ok(total)
}

/// Tuple-level policy-switch evidence. `effective` holds the certificate of
/// the aggregated single-reward problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiDiscontinuityCertificate {
    pub perturbed_tuple: RewardTuple,
    /// `max_k ‖R_{k,ε} − R_{k,0}‖∞`.
    pub tuple_distance: f64,
    /// Largest `|Σ_k w_k(s) δ_k(s,a) − ΔR_ε(s,a)|`; zero up to rounding since
    /// the weight rows sum to one.
    pub aggregation_residual: f64,
    pub effective: DiscontinuityCertificate,
    pub valid: bool,
}

impl MultiDiscontinuityCertificate {
    pub fn switched_action_set(&self) -> &crate::mdp::ActionSet {
        &self.effective.switched_action_set
    }

    pub fn tv_jump(&self) -> f64 {
        self.effective.tv_jump
    }
}

/// Weight rows sum to one only up to rounding, so the aggregated perturbation
/// is accepted within this slack.
pub const AGGREGATION_TOLERANCE: f64 = 1e-12;

/// Applies the single-reward construction to `R_eff` and adds the resulting
/// `ΔR_ε` identically to every component.
pub fn multi_discontinuity_sequence(
    mdp: &FiniteMdp,
    tuple: &RewardTuple,
    weights: &WeightTable,
    state: usize,
    target: usize,
    epsilon: f64,
    tie: impl Into<TieTolerance>,
) -> Result<MultiDiscontinuityCertificate> {
    let tie = tie.into();
    let r_eff = effective_reward(tuple, weights)?;
    mdp.check_shape("reward tuple", r_eff.n_states(), r_eff.n_actions())?;
    let lifted = lift(mdp, &r_eff, state, target, epsilon, tie)?;
    let delta = lifted.delta.clone();
    let perturbed_tuple = tuple.shift_all(&delta);
    // Every component moves by exactly δ.
    let tuple_distance = delta.sup_norm();

    let aggregated = RewardTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        weights.row(s).iter().map(|w| w * delta.get(s, a)).sum()
    });
    let aggregation_residual = aggregated.sup_distance(&delta);

    let effective = certify(mdp, &r_eff, state, target, epsilon, tie, lifted)?;
    let valid = effective.valid
        && tuple_distance <= epsilon * (1.0 + mdp.discount()) * (1.0 + 1e-12)
        && aggregation_residual <= AGGREGATION_TOLERANCE * delta.sup_norm().max(1.0);
    Ok(MultiDiscontinuityCertificate {
        perturbed_tuple,
        tuple_distance,
        aggregation_residual,
        effective,
        valid,
    })
}

/// Soft-policy stability for reward tuples, measured against the tuple norm.
pub fn soft_tuple_stability_report(
    mdp: &FiniteMdp,
    t1: &RewardTuple,
    t2: &RewardTuple,
    weights: &WeightTable,
    alpha: Temperature,
) -> Result<SoftStabilityReport> {
    let r1 = effective_reward(t1, weights)?;
    let r2 = effective_reward(t2, weights)?;
    mdp.check_shape("reward tuple", r1.n_states(), r1.n_actions())?;
    stability_with_distance(mdp, &r1, &r2, t1.tuple_distance(t2), alpha)
}
