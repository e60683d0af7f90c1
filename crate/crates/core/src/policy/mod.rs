//! Waveform-selection policies behind a single decision interface.

mod discretizer;
mod qlearning;
mod scaling;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use discretizer::{Discretizer, DEFAULT_MEAS_BINS, DEFAULT_PRED_BINS};
pub use qlearning::{
    lookahead_update, q_update, reward, select_action, QAgent, QHyperParams, QTable, TransitionBuffer,
};
pub use scaling::{bandwidth_scaling_step, BandwidthScaling, DOUBLING_STREAK};

use crate::error::{Error, Result};
use crate::radar::RadarConfig;

/// What the transmitter knows before choosing the next waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyContext {
    /// (H·P⁻·Hᵀ)_rr of the current prediction (m²).
    pub predicted_range_variance: f64,
    /// R_rr of the previous transmission (m²).
    pub last_measurement_range_variance: f64,
    pub last_correlated: bool,
    pub correlated_streak: usize,
    /// 1-based transmission index.
    pub step: usize,
}

/// Candidate bandwidths (Hz), strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ActionSet(Vec<f64>);

impl Default for ActionSet {
    fn default() -> Self {
        Self(vec![0.5e6, 1e6, 2.5e6, 5e6, 7.5e6, 10e6])
    }
}

impl ActionSet {
    pub fn new(bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::InvalidConfig("empty action set".into()));
        }
        if bandwidths.iter().any(|b| !(b.is_finite() && *b > 0.0))
            || bandwidths.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(format!(
                "action bandwidths must be positive and strictly increasing: {bandwidths:?}"
            )));
        }
        Ok(Self(bandwidths))
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, action: usize) -> f64 {
        self.0[action]
    }

    pub fn check_within(&self, radar: &RadarConfig) -> Result<()> {
        self.0.iter().try_for_each(|&b| radar.check_bandwidth(b))
    }
}

impl TryFrom<Vec<f64>> for ActionSet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActionSet> for Vec<f64> {
    fn from(a: ActionSet) -> Self {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub bandwidth: f64,
    /// Set for table-driven policies only.
    pub state: Option<usize>,
    pub action: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Fixed(f64),
    Scaling(BandwidthScaling),
    QLearning(QAgent),
}

impl Policy {
    pub fn fixed(bandwidth: f64, radar: &RadarConfig) -> Result<Self> {
        radar.check_bandwidth(bandwidth)?;
        Ok(Policy::Fixed(bandwidth))
    }

    pub fn scaling(radar: &RadarConfig) -> Self {
        Policy::Scaling(BandwidthScaling::new(radar.min_bw, radar.max_bw))
    }

    pub fn qlearning(table: QTable, lookahead: bool) -> Self {
        Policy::QLearning(QAgent::new(table, lookahead))
    }

    pub fn q_table(&self) -> Option<&QTable> {
        match self {
            Policy::QLearning(agent) => Some(&agent.table),
            _ => None,
        }
    }

    pub fn into_q_table(self) -> Option<QTable> {
        match self {
            Policy::QLearning(agent) => Some(agent.table),
            _ => None,
        }
    }

    pub fn begin_episode(&mut self) {
        match self {
            Policy::Fixed(_) => {}
            Policy::Scaling(s) => s.reset(),
            Policy::QLearning(agent) => agent.reset(),
        }
    }

    pub fn decide<R: Rng + ?Sized>(&mut self, ctx: &PolicyContext, learning: bool, rng: &mut R) -> Decision {
        match self {
            Policy::Fixed(b) => Decision {
                bandwidth: *b,
                state: None,
                action: None,
            },
            Policy::Scaling(s) => Decision {
                bandwidth: s.next(ctx.last_correlated),
                state: None,
                action: None,
            },
            Policy::QLearning(agent) => {
                let state = agent
                    .table
                    .discretizer
                    .state_index(ctx.predicted_range_variance, ctx.last_measurement_range_variance);
                let action = agent.act(state, learning, rng);
                Decision {
                    bandwidth: agent.table.actions.get(action),
                    state: Some(state),
                    action: Some(action),
                }
            }
        }
    }

    pub fn feedback(&mut self, reward: f64, lost: bool, learning: bool) {
        if let Policy::QLearning(agent) = self {
            agent.feedback(reward, lost, learning);
        }
    }
}

/// Policy selector in `name[:param]` form, e.g. `fixed:5e6`, `scaling`, `qlearn-lookahead`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Fixed(f64),
    Scaling,
    QLearn,
    QLearnLookahead,
}

impl PolicySpec {
    pub fn is_learned(&self) -> bool {
        matches!(self, PolicySpec::QLearn | PolicySpec::QLearnLookahead)
    }

    /// Filesystem-safe label.
    pub fn label(&self) -> String {
        self.to_string().replace([':', '+'], "_")
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Fixed(b) => write!(f, "fixed:{b:e}"),
            PolicySpec::Scaling => f.write_str("scaling"),
            PolicySpec::QLearn => f.write_str("qlearn"),
            PolicySpec::QLearnLookahead => f.write_str("qlearn-lookahead"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        match (name, param) {
            ("fixed", Some(p)) => p
                .parse::<f64>()
                .map(PolicySpec::Fixed)
                .map_err(|e| Error::Parse(format!("bad bandwidth {p:?}: {e}"))),
            ("fixed", None) => Err(Error::Parse("fixed policy needs a bandwidth, e.g. fixed:1e6".into())),
            ("scaling", None) => Ok(PolicySpec::Scaling),
            ("qlearn", None) => Ok(PolicySpec::QLearn),
            ("qlearn-lookahead", None) => Ok(PolicySpec::QLearnLookahead),
            _ => Err(Error::Parse(format!(
                "unknown policy {s:?} (expected fixed:<hz>, scaling, qlearn, qlearn-lookahead)"
            ))),
        }
    }
}
