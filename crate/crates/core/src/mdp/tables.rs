//! Dense `(state, action)` and `(state)` tables.
//!
//! All tables serialize as nested arrays, one inner array per state.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Row sums of a probability table must match one within this slack.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// Row-major real matrix shared by the table newtypes.
#[derive(Debug, Clone, PartialEq)]
struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || cols == 0 {
            return Err(LabError::Dimension("table must be nonempty".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(LabError::Dimension(format!(
                "row {i} has {} entries, expected {cols}",
                r.len()
            )));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument(format!(
                "non-finite entry at ({}, {})",
                i / cols,
                i % cols
            )));
        }
        Ok(Self {
            rows: n_rows,
            cols,
            data,
        })
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

macro_rules! state_action_table {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
        pub struct $name {
            grid: Grid,
        }

        impl $name {
            pub fn zeros(n_states: usize, n_actions: usize) -> Self {
                Self::filled(n_states, n_actions, 0.0)
            }

            pub fn filled(n_states: usize, n_actions: usize, value: f64) -> Self {
                Self {
                    grid: Grid {
                        rows: n_states,
                        cols: n_actions,
                        data: vec![value; n_states * n_actions],
                    },
                }
            }

            /// Builds a table from one row per state. Rejects ragged or
            /// non-finite input.
            pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
                Ok(Self { grid: Grid::from_rows(rows)? })
            }

            /// Builds a table by evaluating `f(state, action)`.
            pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
                let mut data = Vec::with_capacity(n_states * n_actions);
                for s in 0..n_states {
                    for a in 0..n_actions {
                        data.push(f(s, a));
                    }
                }
                Self { grid: Grid { rows: n_states, cols: n_actions, data } }
            }

            pub fn n_states(&self) -> usize {
                self.grid.rows
            }

            pub fn n_actions(&self) -> usize {
                self.grid.cols
            }

            pub fn get(&self, state: usize, action: usize) -> f64 {
                self.grid.data[state * self.grid.cols + action]
            }

            pub fn set(&mut self, state: usize, action: usize, value: f64) {
                self.grid.data[state * self.grid.cols + action] = value;
            }

            pub fn row(&self, state: usize) -> &[f64] {
                let c = self.grid.cols;
                &self.grid.data[state * c..(state + 1) * c]
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.grid.data
            }

            pub fn to_rows(&self) -> Vec<Vec<f64>> {
                self.grid.to_rows()
            }

            /// Largest absolute entry.
            pub fn sup_norm(&self) -> f64 {
                self.grid.data.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            /// `sup |self − other|`. Panics on shape mismatch.
            pub fn sup_distance(&self, other: &Self) -> f64 {
                assert_eq!(
                    (self.n_states(), self.n_actions()),
                    (other.n_states(), other.n_actions()),
                    "table shapes differ"
                );
                self.grid
                    .data
                    .iter()
                    .zip(&other.grid.data)
                    .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
            }

            /// Entrywise `self + other`. Panics on shape mismatch.
            pub fn add(&self, other: &Self) -> Self {
                self.zip_with(other, |a, b| a + b)
            }

            /// Entrywise `self − other`. Panics on shape mismatch.
            pub fn sub(&self, other: &Self) -> Self {
                self.zip_with(other, |a, b| a - b)
            }

            pub fn scale(&self, k: f64) -> Self {
                self.map(|v| v * k)
            }

            pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
                Self {
                    grid: Grid {
                        rows: self.grid.rows,
                        cols: self.grid.cols,
                        data: self.grid.data.iter().map(|&v| f(v)).collect(),
                    },
                }
            }

            pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
                assert_eq!(
                    (self.n_states(), self.n_actions()),
                    (other.n_states(), other.n_actions()),
                    "table shapes differ"
                );
                Self {
                    grid: Grid {
                        rows: self.grid.rows,
                        cols: self.grid.cols,
                        data: self
                            .grid
                            .data
                            .iter()
                            .zip(&other.grid.data)
                            .map(|(&a, &b)| f(a, b))
                            .collect(),
                    },
                }
            }

            /// Row maximum.
            pub fn row_max(&self, state: usize) -> f64 {
                self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }

        impl From<$name> for Vec<Vec<f64>> {
            fn from(t: $name) -> Self {
                t.grid.to_rows()
            }
        }

        impl TryFrom<Vec<Vec<f64>>> for $name {
            type Error = LabError;

            fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
                Self::from_rows(rows)
            }
        }
    };
}

state_action_table!(
    /// A reward value per `(state, action)`, measured in the sup norm.
    RewardTable
);

state_action_table!(
    /// Action values, either an optimal `Q*` or a fixed-policy `Q^π`.
    QTable
);

impl QTable {
    /// State values `max_a q(s, a)`.
    pub fn greedy_values(&self) -> Vec<f64> {
        (0..self.n_states()).map(|s| self.row_max(s)).collect()
    }

    /// Reinterprets action values as a reward table of the same shape.
    pub fn into_reward(self) -> RewardTable {
        RewardTable { grid: self.grid }
    }
}

impl RewardTable {
    /// Reinterprets rewards as an action-value table of the same shape.
    pub fn into_q(self) -> QTable {
        QTable { grid: self.grid }
    }
}

/// Per-state values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueTable {
    values: Vec<f64>,
}

impl ValueTable {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_s μ(s) V(s)`.
    pub fn weighted(&self, mu: &[f64]) -> f64 {
        self.values.iter().zip(mu).map(|(v, m)| v * m).sum()
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Stochastic policy: one probability row per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct PolicyTable {
    grid: Grid,
}

impl PolicyTable {
    /// Validates that every row is a probability distribution.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let grid = Grid::from_rows(rows)?;
        for (s, row) in grid.data.chunks(grid.cols).enumerate() {
            check_distribution(row).map_err(|m| LabError::InvalidArgument(format!("policy row {s}: {m}")))?;
        }
        Ok(Self { grid })
    }

    /// Point-mass policy selecting `choices[s]` at each state.
    pub fn deterministic(n_actions: usize, choices: &[usize]) -> Self {
        let mut data = vec![0.0; choices.len() * n_actions];
        for (s, &a) in choices.iter().enumerate() {
            data[s * n_actions + a] = 1.0;
        }
        Self {
            grid: Grid {
                rows: choices.len(),
                cols: n_actions,
                data,
            },
        }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            grid: Grid {
                rows: n_states,
                cols: n_actions,
                data: vec![1.0 / n_actions as f64; n_states * n_actions],
            },
        }
    }

    pub(crate) fn from_raw(n_states: usize, n_actions: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_states * n_actions);
        Self {
            grid: Grid {
                rows: n_states,
                cols: n_actions,
                data,
            },
        }
    }

    pub fn n_states(&self) -> usize {
        self.grid.rows
    }

    pub fn n_actions(&self) -> usize {
        self.grid.cols
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.grid.data[state * self.grid.cols + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let c = self.grid.cols;
        &self.grid.data[state * c..(state + 1) * c]
    }

    /// Replaces one state's row, keeping the others.
    pub fn with_row(&self, state: usize, row: &[f64]) -> Result<Self> {
        check_distribution(row).map_err(LabError::InvalidArgument)?;
        if row.len() != self.grid.cols {
            return Err(LabError::Dimension(format!(
                "row has {} entries, expected {}",
                row.len(),
                self.grid.cols
            )));
        }
        let mut out = self.clone();
        let c = self.grid.cols;
        out.grid.data[state * c..(state + 1) * c].copy_from_slice(row);
        Ok(out)
    }

    /// The chosen action when every row is a point mass.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        (0..self.n_states())
            .map(|s| {
                let row = self.row(s);
                let ones: Vec<usize> = (0..row.len()).filter(|&a| row[a] == 1.0).collect();
                (ones.len() == 1).then(|| ones[0])
            })
            .collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.grid.to_rows()
    }
}

impl From<PolicyTable> for Vec<Vec<f64>> {
    fn from(p: PolicyTable) -> Self {
        p.grid.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for PolicyTable {
    type Error = LabError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

/// Checks that `row` is nonnegative, finite, and sums to one.
pub fn check_distribution(row: &[f64]) -> std::result::Result<(), String> {
    if row.is_empty() {
        return Err("empty distribution".into());
    }
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(format!("invalid probability {p}"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(format!("probabilities sum to {sum}"));
    }
    Ok(())
}

/// How wide a band below the row maximum still counts as a tie.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieTolerance {
    /// `1e-9 · max(1, max_a |q(s, a)|)`, resolved per row.
    #[default]
    Relative,
    Absolute(f64),
}

impl From<f64> for TieTolerance {
    fn from(v: f64) -> Self {
        TieTolerance::Absolute(v)
    }
}

impl TieTolerance {
    pub const RELATIVE_SCALE: f64 = 1e-9;

    pub fn resolve(self, row: &[f64]) -> f64 {
        match self {
            TieTolerance::Relative => {
                let mag = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                Self::RELATIVE_SCALE * mag.max(1.0)
            }
            TieTolerance::Absolute(v) => v,
        }
    }
}

/// Rule for turning an optimal action set into a policy row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    LowestIndex,
    UniformOverTies,
}

impl Selection {
    pub const ALL: [Selection; 2] = [Selection::LowestIndex, Selection::UniformOverTies];

    /// Policy row over `n_actions` placing mass on `set` according to the rule.
    pub fn row(self, set: &ActionSet, n_actions: usize) -> Vec<f64> {
        let mut row = vec![0.0; n_actions];
        match self {
            Selection::LowestIndex => row[set.actions[0]] = 1.0,
            Selection::UniformOverTies => {
                let m = set.actions.len() as f64;
                for &a in &set.actions {
                    row[a] = 1.0 / m;
                }
            }
        }
        row
    }
}

/// The near-maximizing actions `A*(s)` at one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    pub state: usize,
    /// Sorted ascending, never empty.
    pub actions: Vec<usize>,
    pub tie_tolerance: f64,
}

impl ActionSet {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn contains(&self, action: usize) -> bool {
        self.actions.binary_search(&action).is_ok()
    }

    pub fn is_singleton(&self) -> bool {
        self.actions.len() == 1
    }
}
