//! Environment-agnostic tabular Q-learning: the table, the update rule,
//! and greedy / epsilon-greedy action selection.
//!
//! The same single-table arithmetic serves both the single-agent case and
//! the multi-agent case; in the latter the caller feeds in rewards that
//! were produced under the joint action of all agents.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `|S| x |A|` table of state-action values, stored row-major and
/// initialized to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    values: Vec<f64>,
    n_states: usize,
    n_actions: usize,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            values: vec![0.0; n_states * n_actions],
            n_states,
            n_actions,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let start = state * self.n_actions;
        &self.values[start..start + self.n_actions]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Flat numeric text form: one whitespace-separated row per state.
    /// Values are written in Rust's shortest round-trip notation, so a
    /// parse of the output reproduces the table exactly.
    pub fn to_flat_text(&self) -> String {
        let mut out = String::new();
        for s in 0..self.n_states {
            let row: Vec<String> = self.row(s).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_flat_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| {
                        Error::Format(format!("line {}: bad value {tok:?}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Format(format!(
                        "line {}: expected {} values, found {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format("empty Q-table text".into()));
        }
        let n_states = rows.len();
        let n_actions = rows[0].len();
        Ok(Self {
            values: rows.into_iter().flatten().collect(),
            n_states,
            n_actions,
        })
    }
}

/// Learning-rate, discount and exploration settings.
///
/// `epsilon` applies only during the first `epsilon_active_fraction` of the
/// total iterations; afterwards selection is purely greedy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_active_fraction: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.9,
            epsilon: 0.1,
            epsilon_active_fraction: 0.8,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} not in [0,1]",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma {} not in [0,1)",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} not in [0,1]",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon_active_fraction) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_active_fraction {} not in [0,1]",
                self.epsilon_active_fraction
            )));
        }
        Ok(())
    }
}

/// One-step update `Q(s,a) := (1-a) Q(s,a) + a (r + g max_b Q(s',b))`.
/// Exactly one table entry changes.
pub fn q_update(
    table: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    params: &LearningParams,
) -> Result<()> {
    if state >= table.n_states() || next_state >= table.n_states() {
        return Err(Error::IndexOutOfRange(format!(
            "state {state} or next state {next_state} >= {}",
            table.n_states()
        )));
    }
    if action >= table.n_actions() {
        return Err(Error::IndexOutOfRange(format!(
            "action {action} >= {}",
            table.n_actions()
        )));
    }
    let alpha = params.alpha;
    let target = reward + params.gamma * table.max_value(next_state);
    let updated = (1.0 - alpha) * table.get(state, action) + alpha * target;
    table.set(state, action, updated);
    Ok(())
}

/// Index of the largest value; ties resolve to the lowest index so runs
/// replay deterministically.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn select_action_greedy(table: &QTable, state: usize) -> usize {
    argmax_lowest(table.row(state))
}

/// Whether iteration `t` of `t_total` falls inside the exploration window.
pub fn exploration_active(params: &LearningParams, t: usize, t_total: usize) -> bool {
    let active_iterations = (params.epsilon_active_fraction * t_total as f64).round() as usize;
    t < active_iterations
}

/// Epsilon-greedy selection: inside the exploration window a uniformly
/// random action is taken with probability `epsilon`, otherwise (and always
/// after the window) the greedy action.
pub fn select_action_epsilon<R: Rng>(
    table: &QTable,
    state: usize,
    params: &LearningParams,
    t: usize,
    t_total: usize,
    rng: &mut R,
) -> usize {
    if exploration_active(params, t, t_total) && rng.gen::<f64>() < params.epsilon {
        rng.gen_range(0..table.n_actions())
    } else {
        select_action_greedy(table, state)
    }
}
