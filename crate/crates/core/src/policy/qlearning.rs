//! Tabular Q-learning over (prediction variance, measurement variance) states
//! with bandwidths as actions.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::discretizer::Discretizer;
use super::ActionSet;
use crate::error::{Error, Result};
use crate::fileio;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QHyperParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Exploration rate used while training.
    pub epsilon: f64,
    /// Penalty for losing the track.
    #[serde(rename = "C")]
    pub c: f64,
    /// Number of past (state, action) pairs refreshed by a lookahead update.
    #[serde(rename = "L")]
    pub lookahead: usize,
}

impl Default for QHyperParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.2,
            c: 2.0,
            lookahead: 5,
        }
    }
}

impl QHyperParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha <= 1.0
            && (0.0..1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.epsilon)
            && self.c > 0.0
            && self.c.is_finite()
            && self.lookahead >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid Q-learning hyperparameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    n_actions: usize,
    pub actions: ActionSet,
    pub discretizer: Discretizer,
    pub hyper: QHyperParams,
}

impl QTable {
    pub fn zeros(actions: ActionSet, discretizer: Discretizer, hyper: QHyperParams) -> Self {
        let n_actions = actions.len();
        Self {
            values: vec![0.0; discretizer.n_states() * n_actions],
            n_actions,
            actions,
            discretizer,
            hyper,
        }
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_actions
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
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action; ties go to the lowest index.
    pub fn best_action(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, &q) in row.iter().enumerate().skip(1) {
            if q > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = QTableDoc {
            alpha: self.hyper.alpha,
            gamma: self.hyper.gamma,
            epsilon: self.hyper.epsilon,
            c: self.hyper.c,
            lookahead: self.hyper.lookahead,
            actions_hz: self.actions.bandwidths().to_vec(),
            pred_var_edges: self.discretizer.pred_var_edges.clone(),
            meas_var_edges: self.discretizer.meas_var_edges.clone(),
            values: self.values.chunks(self.n_actions).map(<[f64]>::to_vec).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: QTableDoc = serde_json::from_str(text)?;
        let hyper = QHyperParams {
            alpha: doc.alpha,
            gamma: doc.gamma,
            epsilon: doc.epsilon,
            c: doc.c,
            lookahead: doc.lookahead,
        };
        hyper.validate()?;
        let actions = ActionSet::new(doc.actions_hz)?;
        let discretizer = Discretizer::new(doc.pred_var_edges, doc.meas_var_edges)?;
        let n_states = discretizer.n_states();
        if doc.values.len() != n_states {
            return Err(Error::ShapeMismatch(format!(
                "expected {n_states} rows, found {}",
                doc.values.len()
            )));
        }
        if let Some(bad) = doc.values.iter().position(|r| r.len() != actions.len()) {
            return Err(Error::ShapeMismatch(format!(
                "row {bad} has {} columns, expected {}",
                doc.values[bad].len(),
                actions.len()
            )));
        }
        let values: Vec<f64> = doc.values.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite Q value".into()));
        }
        Ok(Self {
            n_actions: actions.len(),
            values,
            actions,
            discretizer,
            hyper,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fileio::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fileio::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct QTableDoc {
    alpha: f64,
    gamma: f64,
    epsilon: f64,
    #[serde(rename = "C")]
    c: f64,
    #[serde(rename = "L")]
    lookahead: usize,
    actions_hz: Vec<f64>,
    pred_var_edges: Vec<f64>,
    meas_var_edges: Vec<f64>,
    values: Vec<Vec<f64>>,
}

/// −C when the track is lost, otherwise the range error in km clipped at C.
pub fn reward(range_error: f64, lost: bool, c: f64) -> f64 {
    if lost {
        -c
    } else {
        -(range_error / 1000.0).min(c)
    }
}

fn td_update(table: &mut QTable, state: usize, action: usize, r: f64, next: Option<usize>) {
    let bootstrap = next.map_or(0.0, |s| table.hyper.gamma * table.max_value(s));
    let q = table.get(state, action);
    table.set(state, action, q + table.hyper.alpha * (r + bootstrap - q));
}

/// One-step Q-learning update of `(s_prev, a_prev)`.
///
/// `s_now = None` marks a terminal transition (no bootstrap term).
pub fn q_update(table: &mut QTable, s_prev: usize, a_prev: usize, r: f64, s_now: Option<usize>) {
    td_update(table, s_prev, a_prev, r, s_now);
}

/// Last `L` (state, action) pairs, oldest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionBuffer {
    pairs: VecDeque<(usize, usize)>,
    capacity: usize,
}

impl TransitionBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, state: usize, action: usize) {
        if self.capacity == 0 {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((state, action));
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Most recent first.
    pub fn iter_recent(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().rev().copied()
    }
}

/// Applies the same reward and bootstrap target to every buffered pair,
/// newest (m = 1) first, each against the table as already modified.
pub fn lookahead_update(table: &mut QTable, buffer: &TransitionBuffer, r: f64, s_now: Option<usize>) {
    for (state, action) in buffer.iter_recent() {
        td_update(table, state, action, r, s_now);
    }
}

/// ε-greedy selection; `epsilon = 0` is pure exploitation and draws nothing from `rng`.
pub fn select_action<R: Rng + ?Sized>(table: &QTable, state: usize, epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..table.n_actions())
    } else {
        table.best_action(state)
    }
}

/// Q-learning agent for one episode at a time. The pending (state, action)
/// is updated once the next state is observed.
#[derive(Debug, Clone, PartialEq)]
pub struct QAgent {
    pub table: QTable,
    pub lookahead: bool,
    buffer: TransitionBuffer,
    pending_reward: Option<f64>,
}

impl QAgent {
    pub fn new(table: QTable, lookahead: bool) -> Self {
        let capacity = if lookahead { table.hyper.lookahead } else { 1 };
        Self {
            table,
            lookahead,
            buffer: TransitionBuffer::new(capacity),
            pending_reward: None,
        }
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.pending_reward = None;
    }

    fn learn(&mut self, r: f64, next: Option<usize>) {
        if self.lookahead {
            lookahead_update(&mut self.table, &self.buffer, r, next);
        } else if let Some((s, a)) = self.buffer.iter_recent().next() {
            q_update(&mut self.table, s, a, r, next);
        }
    }

    /// Picks an action for `state`, first settling the previous transition if learning.
    pub fn act<R: Rng + ?Sized>(&mut self, state: usize, learning: bool, rng: &mut R) -> usize {
        if let Some(r) = self.pending_reward.take() {
            if learning {
                self.learn(r, Some(state));
            }
        }
        let epsilon = if learning { self.table.hyper.epsilon } else { 0.0 };
        let action = select_action(&self.table, state, epsilon, rng);
        self.buffer.push(state, action);
        action
    }

    /// Records the reward of the latest action. A lost track ends the episode
    /// and is learned from immediately as a terminal transition.
    pub fn feedback(&mut self, r: f64, lost: bool, learning: bool) {
        if lost {
            if learning {
                self.learn(r, None);
            }
            self.pending_reward = None;
        } else {
            self.pending_reward = Some(r);
        }
    }
}
