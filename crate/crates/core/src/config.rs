//! One JSON document holding every knob of an experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::EpisodeConfig;
use crate::fileio;
use crate::policy::{ActionSet, QHyperParams, DEFAULT_MEAS_BINS, DEFAULT_PRED_BINS};
use crate::radar::RadarConfig;
use crate::tracker::{InitialUncertainty, ProcessModel};
use crate::trajectory::TrajectoryConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QLearningConfig {
    #[serde(flatten)]
    pub hyper: QHyperParams,
    pub actions_hz: ActionSet,
    pub pred_bins: usize,
    pub meas_bins: usize,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            hyper: QHyperParams::default(),
            actions_hz: ActionSet::default(),
            pred_bins: DEFAULT_PRED_BINS,
            meas_bins: DEFAULT_MEAS_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub trajectory: TrajectoryConfig,
    /// Seed of the target path (terminal maneuvers); fixed across runs.
    pub trajectory_seed: u64,
    pub radar: RadarConfig,
    pub process: ProcessModel,
    pub initial_uncertainty: InitialUncertainty,
    pub episode: EpisodeConfig,
    pub qlearning: QLearningConfig,
    pub calibration_runs: usize,
    pub training_runs: usize,
    pub evaluation_runs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            trajectory: TrajectoryConfig::default(),
            trajectory_seed: 1,
            radar: RadarConfig::default(),
            process: ProcessModel::default(),
            initial_uncertainty: InitialUncertainty::default(),
            episode: EpisodeConfig::default(),
            qlearning: QLearningConfig::default(),
            calibration_runs: 100,
            training_runs: 200,
            evaluation_runs: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        self.radar.validate()?;
        self.process.validate()?;
        self.episode.validate()?;
        self.qlearning.hyper.validate()?;
        self.qlearning.actions_hz.check_within(&self.radar)?;
        self.radar.check_bandwidth(self.episode.initial_bandwidth)?;
        if self.qlearning.pred_bins < 2 || self.qlearning.meas_bins < 2 {
            return Err(Error::InvalidConfig("need at least 2 bins per variance".into()));
        }
        if self.process.dt != self.trajectory.dt {
            return Err(Error::InvalidConfig(format!(
                "process dt {} differs from trajectory dt {}",
                self.process.dt, self.trajectory.dt
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fileio::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
