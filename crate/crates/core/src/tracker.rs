//! Constant-velocity EKF, with gravity as a known input, and a range-only validation gate.
//!
//! A transmission whose range innovation falls outside three range windows is
//! uncorrelated: the measurement is dropped and the track coasts on its
//! prediction. `miss_limit` uncorrelated transmissions in a row lose the track.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Matrix6, SMatrix, Vector3, Vector4, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::{observe, observe_jacobian, Measurement, ObservationJacobian, RadarConfig};
use crate::trajectory::Phase;

/// Two-sided 95% quantile of the standard normal.
pub const WINDOW_Z: f64 = 1.96;
/// Gate half-width in range windows.
pub const GATE_WINDOWS: f64 = 3.0;
pub const DEFAULT_MISS_LIMIT: usize = 5;
const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    pub x: Vector6<f64>,
    pub p: Matrix6<f64>,
    pub t: f64,
}

impl TrackState {
    pub fn position(&self) -> Vector3<f64> {
        self.x.fixed_rows::<3>(0).into()
    }
}

/// White-noise acceleration std per flight phase (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoise {
    pub boost: f64,
    pub midcourse: f64,
    pub terminal: f64,
}

impl PhaseNoise {
    pub fn get(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Boost => self.boost,
            Phase::MidCourse => self.midcourse,
            Phase::Terminal => self.terminal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessModel {
    pub dt: f64,
    pub accel_noise_std: PhaseNoise,
    /// Known downward acceleration applied as a control input (m/s²); 0 gives a pure CV model.
    pub gravity: f64,
}

impl Default for ProcessModel {
    fn default() -> Self {
        Self {
            dt: 2.0,
            accel_noise_std: PhaseNoise {
                boost: 32.2,
                midcourse: 5.18,
                terminal: 48.0,
            },
            gravity: 9.81,
        }
    }
}

impl ProcessModel {
    pub fn validate(&self) -> Result<()> {
        let n = &self.accel_noise_std;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("process dt must be > 0, got {}", self.dt)));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::InvalidConfig(format!("process gravity must be >= 0, got {}", self.gravity)));
        }
        if [n.boost, n.midcourse, n.terminal]
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::InvalidConfig("accel noise std must be > 0 in every phase".into()));
        }
        Ok(())
    }

    pub fn transition(&self) -> Matrix6<f64> {
        let mut f = Matrix6::identity();
        f.fixed_view_mut::<3, 3>(0, 3).fill_diagonal(self.dt);
        f
    }

    /// Displacement of the state over one step due to gravity.
    pub fn control(&self) -> Vector6<f64> {
        let dt = self.dt;
        Vector6::new(0.0, 0.0, -0.5 * self.gravity * dt * dt, 0.0, 0.0, -self.gravity * dt)
    }

    /// Discrete white-noise acceleration covariance for one step.
    pub fn process_noise(&self, phase: Phase) -> Matrix6<f64> {
        let dt = self.dt;
        let q = self.accel_noise_std.get(phase).powi(2);
        let i = Matrix3::<f64>::identity();
        let mut out = Matrix6::zeros();
        out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(i * (q * dt.powi(4) / 4.0)));
        out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(i * (q * dt.powi(3) / 2.0)));
        out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(i * (q * dt.powi(3) / 2.0)));
        out.fixed_view_mut::<3, 3>(3, 3).copy_from(&(i * (q * dt * dt)));
        out
    }
}

/// Prior covariance used when a track is started from a single measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialUncertainty {
    pub position_std: f64,
    pub velocity_std: f64,
}

impl Default for InitialUncertainty {
    fn default() -> Self {
        Self {
            position_std: 1_000.0,
            velocity_std: 500.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovation {
    /// z − h(x⁻), azimuth and elevation wrapped to (−π, π].
    pub nu: Vector4<f64>,
    pub s: Matrix4<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateResult {
    pub correlated: bool,
    pub range_window: f64,
    pub range_innovation: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackStatus {
    /// Transmissions processed so far.
    pub transmissions: usize,
    pub consecutive_misses: usize,
    pub lost: bool,
    /// 1-based transmission count at which the loss was declared.
    pub lost_at_step: Option<usize>,
}

fn symmetrize(p: &Matrix6<f64>) -> Matrix6<f64> {
    (p + p.transpose()) * 0.5
}

fn ensure_finite(track: &TrackState) -> Result<()> {
    if track.x.iter().chain(track.p.iter()).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t: track.t })
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Starts a track at the Cartesian point implied by `z`, with zero velocity.
pub fn initialize(z: &Measurement, radar: &RadarConfig, prior: InitialUncertainty) -> TrackState {
    let (se, ce) = z.elevation.sin_cos();
    let (sa, ca) = z.azimuth.sin_cos();
    let p = radar.position() + Vector3::new(ce * ca, ce * sa, se) * z.range;
    let x = Vector6::new(p.x, p.y, p.z, 0.0, 0.0, 0.0);
    let mut diag = Vector6::from_element(prior.position_std.powi(2));
    diag.fixed_rows_mut::<3>(3).fill(prior.velocity_std.powi(2));
    TrackState {
        x,
        p: Matrix6::from_diagonal(&diag),
        t: z.t,
    }
}

pub fn predict(track: &TrackState, model: &ProcessModel, phase: Phase) -> Result<TrackState> {
    ensure_finite(track)?;
    let f = model.transition();
    let out = TrackState {
        x: f * track.x + model.control(),
        p: symmetrize(&(f * track.p * f.transpose() + model.process_noise(phase))),
        t: track.t + model.dt,
    };
    ensure_finite(&out)?;
    Ok(out)
}

/// Range entry of H·P·Hᵀ: the prior's variance projected onto range.
pub fn predicted_range_variance(track: &TrackState, radar: &RadarConfig) -> Result<f64> {
    let h = observe_jacobian(&track.x, &radar.position())?;
    let row = h.row(0);
    Ok((row * track.p * row.transpose())[(0, 0)])
}

/// Innovation of `z` against the (predicted) `track`, plus the Jacobian used.
pub fn innovation(
    track: &TrackState,
    z: &Measurement,
    radar: &RadarConfig,
) -> Result<(Innovation, ObservationJacobian)> {
    let radar_pos = radar.position();
    let predicted = observe(&track.x, &radar_pos)?;
    let h = observe_jacobian(&track.x, &radar_pos)?;
    let mut nu = z.as_vector() - predicted;
    nu[2] = wrap_angle(nu[2]);
    nu[3] = wrap_angle(nu[3]);
    let s = h * track.p * h.transpose() + z.noise_cov;
    let s = (s + s.transpose()) * 0.5;
    Ok((Innovation { nu, s }, h))
}

/// EKF measurement update in Joseph form.
pub fn update(
    track: &TrackState,
    z: &Measurement,
    radar: &RadarConfig,
) -> Result<(TrackState, Innovation)> {
    let (innov, h) = innovation(track, z, radar)?;
    let s_inv = invert_innovation_cov(&innov.s)?;
    let k: SMatrix<f64, 6, 4> = track.p * h.transpose() * s_inv;
    let i_kh = Matrix6::identity() - k * h;
    let p = i_kh * track.p * i_kh.transpose() + k * z.noise_cov * k.transpose();
    let out = TrackState {
        x: track.x + k * innov.nu,
        p: symmetrize(&p),
        t: track.t,
    };
    ensure_finite(&out)?;
    Ok((out, innov))
}

/// The conditioning check runs on the correlation form of `s`, so the mix of
/// metres and radians on the diagonal does not count as ill-conditioning.
fn invert_innovation_cov(s: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let d = s.diagonal();
    if !d.iter().all(|v| *v > 0.0 && v.is_finite()) {
        return Err(Error::DegenerateInnovation(f64::INFINITY));
    }
    let scale = Matrix4::from_diagonal(&d.map(|v| 1.0 / v.sqrt()));
    let eig = (scale * s * scale).symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond.is_nan() || cond > MAX_INNOVATION_CONDITION {
        return Err(Error::DegenerateInnovation(cond));
    }
    s.try_inverse().ok_or(Error::DegenerateInnovation(cond))
}

/// Range gate: |ν_range| ≤ 3 · 1.96 · σ_range(θ).
pub fn gate(innovation: &Innovation, z: &Measurement) -> GateResult {
    let range_window = WINDOW_Z * z.range_variance().sqrt();
    let range_innovation = innovation.nu[0];
    GateResult {
        correlated: range_innovation.abs() <= GATE_WINDOWS * range_window,
        range_window,
        range_innovation,
    }
}

pub fn step_status(status: TrackStatus, correlated: bool, miss_limit: usize) -> Result<TrackStatus> {
    if status.lost {
        return Err(Error::TrackAlreadyLost);
    }
    let mut next = status;
    next.transmissions += 1;
    if correlated {
        next.consecutive_misses = 0;
    } else {
        next.consecutive_misses += 1;
        if next.consecutive_misses >= miss_limit {
            next.lost = true;
            next.lost_at_step = Some(next.transmissions);
        }
    }
    Ok(next)
}

/// An uncorrelated transmission leaves the predicted state untouched.
pub fn coast(track: &TrackState) -> TrackState {
    *track
}
