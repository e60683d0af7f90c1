//! Closed-loop episodes and the training / evaluation campaigns built on them.
//!
//! Per transmission: predict, build the policy context, choose a bandwidth,
//! measure, gate, update or coast, advance the track status, score, learn.

mod io;
mod metrics;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use io::{histogram_to_csv, metrics_to_csv, run_to_csv, summary_to_csv, SummaryRow};
pub use metrics::{
    mean_windowed_mse, pooled_windowed_mse, success_histogram, successful_segment, windowed_min, Histogram,
    MetricsReport, DEFAULT_HISTOGRAM_BIN, MSE_WINDOW,
};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::policy::{reward, Discretizer, Policy, PolicyContext, QTable};
use crate::radar::{measure_scaled, observe};
use crate::tracker::{
    coast, gate, initialize, innovation, predict, predicted_range_variance, step_status, update, TrackState,
    TrackStatus, DEFAULT_MISS_LIMIT,
};
use crate::trajectory::TruthPoint;

/// Stream ids carved out of each run's seed.
const NOISE_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub n_transmissions: usize,
    pub miss_limit: usize,
    /// Base seed of a campaign; run `i` uses `seed + i`.
    pub seed: u64,
    /// Bandwidth of the measurement that starts the track (Hz).
    pub initial_bandwidth: f64,
    /// Multiplier on the drawn measurement noise (1 = nominal, 0 = exact measurements).
    /// The gate still uses the nominal covariance.
    pub noise_scale: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            n_transmissions: 160,
            miss_limit: DEFAULT_MISS_LIMIT,
            seed: 0,
            initial_bandwidth: 10e6,
            noise_scale: 1.0,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_transmissions == 0 || self.miss_limit == 0 {
            return Err(Error::InvalidConfig(
                "n_transmissions and miss_limit must be >= 1".into(),
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_scale must be >= 0, got {}",
                self.noise_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based transmission index.
    pub step: usize,
    pub bandwidth: f64,
    /// |estimated range − true range| after this transmission (m).
    pub range_error_true: f64,
    pub range_innovation: f64,
    pub range_window: f64,
    pub correlated: bool,
    pub reward: f64,
    pub state_index: Option<usize>,
    pub action_index: Option<usize>,
    /// State features the policy saw before choosing (m²).
    pub pred_var: f64,
    pub meas_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<StepRecord>,
    /// Transmission count at which the track was declared lost.
    pub lost_at: Option<usize>,
    pub successful: bool,
}

/// Seed bases for the three campaigns derived from one user seed, kept far
/// apart so evaluation never replays training noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub calibration: u64,
    pub training: u64,
    pub evaluation: u64,
}

impl SeedPlan {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            calibration: seed.wrapping_add(1_000_000_000),
            training: seed.wrapping_add(2_000_000_000),
            evaluation: seed,
        }
    }
}

fn run_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    noise.set_stream(NOISE_STREAM);
    let mut policy = ChaCha8Rng::seed_from_u64(seed);
    policy.set_stream(POLICY_STREAM);
    (noise, policy)
}

fn true_range_error(track: &TrackState, truth: &TruthPoint, cfg: &ExperimentConfig) -> Result<f64> {
    let radar_pos = cfg.radar.position();
    let est = observe(&track.x, &radar_pos)?[0];
    let actual = observe(&truth.state(), &radar_pos)?[0];
    Ok((est - actual).abs())
}

/// Runs one episode, starting the track from a measurement of the first
/// trajectory sample. Transmissions use samples `1..=n_transmissions`.
pub fn run_episode(
    trajectory: &[TruthPoint],
    policy: &mut Policy,
    cfg: &ExperimentConfig,
    seed: u64,
    learning: bool,
) -> Result<RunResult> {
    let need = cfg.episode.n_transmissions + 1;
    if trajectory.len() < need {
        return Err(Error::TrajectoryTooShort {
            have: trajectory.len(),
            need,
        });
    }
    let (mut noise_rng, policy_rng) = run_rngs(seed);
    let waveform = cfg.radar.waveform(cfg.episode.initial_bandwidth)?;
    let z0 = measure_scaled(&trajectory[0], waveform, &cfg.radar, cfg.episode.noise_scale, &mut noise_rng)?;
    let track = initialize(&z0, &cfg.radar, cfg.initial_uncertainty);
    run_from_track(
        trajectory,
        policy,
        cfg,
        track,
        z0.range_variance(),
        noise_rng,
        policy_rng,
        learning,
    )
}

/// Same as [`run_episode`] but starting from a caller-supplied track.
pub fn run_episode_from_track(
    trajectory: &[TruthPoint],
    policy: &mut Policy,
    cfg: &ExperimentConfig,
    track: TrackState,
    seed: u64,
    learning: bool,
) -> Result<RunResult> {
    let need = cfg.episode.n_transmissions + 1;
    if trajectory.len() < need {
        return Err(Error::TrajectoryTooShort {
            have: trajectory.len(),
            need,
        });
    }
    let (noise_rng, policy_rng) = run_rngs(seed);
    let waveform = cfg.radar.waveform(cfg.episode.initial_bandwidth)?;
    let snr = crate::radar::snr_at_range(observe(&trajectory[0].state(), &cfg.radar.position())?[0], &cfg.radar);
    let meas_var = crate::radar::measurement_noise_cov(&waveform, snr, &cfg.radar)[(0, 0)];
    run_from_track(trajectory, policy, cfg, track, meas_var, noise_rng, policy_rng, learning)
}

#[allow(clippy::too_many_arguments)]
fn run_from_track(
    trajectory: &[TruthPoint],
    policy: &mut Policy,
    cfg: &ExperimentConfig,
    mut track: TrackState,
    initial_meas_var: f64,
    mut noise_rng: ChaCha8Rng,
    mut policy_rng: ChaCha8Rng,
    learning: bool,
) -> Result<RunResult> {
    let c = cfg.qlearning.hyper.c;
    let mut status = TrackStatus::default();
    let mut last_meas_var = initial_meas_var;
    let mut last_correlated = true;
    let mut streak = 0usize;
    let mut records = Vec::with_capacity(cfg.episode.n_transmissions);

    policy.begin_episode();
    for (k, truth) in trajectory
        .iter()
        .enumerate()
        .skip(1)
        .take(cfg.episode.n_transmissions)
    {
        let predicted = predict(&track, &cfg.process, truth.phase)?;
        let ctx = PolicyContext {
            predicted_range_variance: predicted_range_variance(&predicted, &cfg.radar)?,
            last_measurement_range_variance: last_meas_var,
            last_correlated,
            correlated_streak: streak,
            step: k,
        };
        let decision = policy.decide(&ctx, learning, &mut policy_rng);
        let waveform = cfg.radar.waveform(decision.bandwidth)?;
        let z = measure_scaled(truth, waveform, &cfg.radar, cfg.episode.noise_scale, &mut noise_rng)?;
        let (innov, _) = innovation(&predicted, &z, &cfg.radar)?;
        let g = gate(&innov, &z);
        track = if g.correlated {
            update(&predicted, &z, &cfg.radar)?.0
        } else {
            coast(&predicted)
        };
        status = step_status(status, g.correlated, cfg.episode.miss_limit)?;
        let range_error = true_range_error(&track, truth, cfg)?;
        let r = reward(range_error, status.lost, c);
        policy.feedback(r, status.lost, learning);

        records.push(StepRecord {
            step: k,
            bandwidth: decision.bandwidth,
            range_error_true: range_error,
            range_innovation: g.range_innovation,
            range_window: g.range_window,
            correlated: g.correlated,
            reward: r,
            state_index: decision.state,
            action_index: decision.action,
            pred_var: ctx.predicted_range_variance,
            meas_var: ctx.last_measurement_range_variance,
        });

        last_meas_var = z.range_variance();
        last_correlated = g.correlated;
        streak = if g.correlated { streak + 1 } else { 0 };
        if status.lost {
            break;
        }
    }
    Ok(RunResult {
        records,
        lost_at: status.lost_at_step,
        successful: !status.lost,
    })
}

/// Trains `table` in place over `n_runs` ε-greedy episodes (seeds `base_seed + i`).
pub fn train_qlearning(
    trajectory: &[TruthPoint],
    table: QTable,
    lookahead: bool,
    n_runs: usize,
    cfg: &ExperimentConfig,
    base_seed: u64,
) -> Result<QTable> {
    let mut policy = Policy::qlearning(table, lookahead);
    for run in 0..n_runs {
        run_episode(trajectory, &mut policy, cfg, base_seed.wrapping_add(run as u64), true)?;
    }
    Ok(policy.into_q_table().expect("q-learning policy"))
}

/// Runs `n_runs` frozen episodes of `policy` and aggregates the metrics.
pub fn evaluate(
    trajectory: &[TruthPoint],
    policy: &Policy,
    n_runs: usize,
    cfg: &ExperimentConfig,
    base_seed: u64,
) -> Result<(Vec<RunResult>, MetricsReport)> {
    let results = (0..n_runs)
        .map(|run| {
            let mut p = policy.clone();
            run_episode(trajectory, &mut p, cfg, base_seed.wrapping_add(run as u64), false)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = MetricsReport::from_runs(&results, cfg.episode.n_transmissions);
    Ok((results, report))
}

/// Pilot runs cycling through every fixed action; their state features set
/// log-spaced discretizer edges between the 1st and 99th percentiles.
pub fn calibrate_discretizer(
    trajectory: &[TruthPoint],
    cfg: &ExperimentConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<Discretizer> {
    let actions = cfg.qlearning.actions_hz.bandwidths();
    let mut pred = Vec::new();
    let mut meas = Vec::new();
    for run in 0..n_runs {
        let mut policy = Policy::fixed(actions[run % actions.len()], &cfg.radar)?;
        let result = run_episode(trajectory, &mut policy, cfg, base_seed.wrapping_add(run as u64), false)?;
        for rec in &result.records {
            pred.push(rec.pred_var);
            meas.push(rec.meas_var);
        }
    }
    Discretizer::calibrate(&pred, &meas, cfg.qlearning.pred_bins, cfg.qlearning.meas_bins)
}

/// A zero table over a discretizer calibrated on `trajectory`.
pub fn fresh_q_table(
    trajectory: &[TruthPoint],
    cfg: &ExperimentConfig,
    calibration_seed: u64,
) -> Result<QTable> {
    let discretizer = calibrate_discretizer(trajectory, cfg, cfg.calibration_runs, calibration_seed)?;
    Ok(QTable::zeros(
        cfg.qlearning.actions_hz.clone(),
        discretizer,
        cfg.qlearning.hyper,
    ))
}
