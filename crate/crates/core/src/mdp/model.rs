use crate::error::{LabError, Result};

/// Transition rows must sum to one within this slack.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A finite discounted MDP `(S, A, P, γ)`; rewards are supplied separately.
///
/// Transitions are stored densely, indexed `(state, action, next_state)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    discount: f64,
}

impl FiniteMdp {
    /// Builds an MDP from a dense row-major transition tensor.
    pub fn new(n_states: usize, n_actions: usize, transition: Vec<f64>, discount: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(LabError::InvalidModel(
                "state and action counts must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(LabError::InvalidModel(format!(
                "discount must lie in [0, 1), got {discount}"
            )));
        }
        let expected = n_states * n_actions * n_states;
        if transition.len() != expected {
            return Err(LabError::Dimension(format!(
                "transition tensor has {} entries, expected {expected}",
                transition.len()
            )));
        }
        let mdp = Self {
            n_states,
            n_actions,
            transition,
            discount,
        };
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = mdp.row(s, a);
                if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                    return Err(LabError::InvalidModel(format!(
                        "transition row (state {s}, action {a}) has invalid entry {p}"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(LabError::InvalidModel(format!(
                        "transition row (state {s}, action {a}) sums to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(mdp)
    }

    /// Builds an MDP from sparse `(state, action, next_state, probability)`
    /// triples. Repeated entries accumulate.
    pub fn from_sparse(
        n_states: usize,
        n_actions: usize,
        entries: &[(usize, usize, usize, f64)],
        discount: f64,
    ) -> Result<Self> {
        let mut transition = vec![0.0; n_states * n_actions * n_states];
        for &(s, a, next, p) in entries {
            if s >= n_states || next >= n_states || a >= n_actions {
                return Err(LabError::Dimension(format!(
                    "transition entry ({s}, {a}, {next}) out of range for {n_states} states and {n_actions} actions"
                )));
            }
            transition[(s * n_actions + a) * n_states + next] += p;
        }
        Self::new(n_states, n_actions, transition, discount)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Next-state distribution for `(state, action)`.
    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.n_actions + action) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.row(state, action)[next]
    }

    /// `Σ_{s'} P(s'|s,a) · values[s']`.
    pub fn expect(&self, state: usize, action: usize, values: &[f64]) -> f64 {
        self.row(state, action).iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Nonzero transitions as sparse triples in lexicographic order.
    pub fn sparse_entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                for (next, &p) in self.row(s, a).iter().enumerate() {
                    if p != 0.0 {
                        out.push((s, a, next, p));
                    }
                }
            }
        }
        out
    }

    /// Same dynamics with a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(self.n_states, self.n_actions, self.transition.clone(), discount)
    }

    pub(crate) fn check_shape(&self, what: &str, n_states: usize, n_actions: usize) -> Result<()> {
        if n_states != self.n_states || n_actions != self.n_actions {
            return Err(LabError::Dimension(format!(
                "{what} is {n_states}x{n_actions}, MDP is {}x{}",
                self.n_states, self.n_actions
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_row() {
        let err = FiniteMdp::from_sparse(2, 1, &[(0, 0, 1, 0.9), (1, 0, 1, 1.0)], 0.5).unwrap_err();
        assert!(matches!(err, LabError::InvalidModel(ref m) if m.contains("state 0, action 0")));
    }

    #[test]
    fn rejects_discount_out_of_range() {
        for bad in [-0.1, 1.0, 1.5, f64::NAN] {
            assert!(FiniteMdp::from_sparse(1, 1, &[(0, 0, 0, 1.0)], bad).is_err());
        }
    }

    #[test]
    fn rejects_negative_entry() {
        let err = FiniteMdp::from_sparse(2, 1, &[(0, 0, 0, 1.5), (0, 0, 1, -0.5), (1, 0, 1, 1.0)], 0.5);
        assert!(err.is_err());
    }

    #[test]
    fn sparse_round_trip() {
        let entries = vec![(0, 0, 1, 0.25), (0, 0, 0, 0.75), (1, 0, 1, 1.0)];
        let mdp = FiniteMdp::from_sparse(2, 1, &entries, 0.5).unwrap();
        let back = FiniteMdp::from_sparse(2, 1, &mdp.sparse_entries(), 0.5).unwrap();
        assert_eq!(mdp, back);
        assert_eq!(mdp.prob(0, 0, 0), 0.75);
    }
}
