//! Measurement model: range, range rate, azimuth and elevation seen from a
//! fixed radar, corrupted by Gaussian noise whose range term shrinks with the
//! transmitted bandwidth.

use nalgebra::{Matrix4, SMatrix, Vector3, Vector4, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::TruthPoint;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// ∂h/∂[p; v].
pub type ObservationJacobian = SMatrix<f64, 4, 6>;

/// One transmit decision: pulse repetition frequency and chirp bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformParams {
    pub prf: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarConfig {
    pub position: [f64; 3],
    pub carrier_freq: f64,
    pub pulse_duration: f64,
    /// Only enters through `snr_ref`; kept so the waveform is fully described.
    pub transmit_energy: f64,
    /// SNR of a target at `range_ref`.
    pub snr_ref: f64,
    pub range_ref: f64,
    /// Azimuth and elevation noise std (rad), independent of the waveform.
    pub angle_noise_std: f64,
    pub min_bw: f64,
    pub max_bw: f64,
    /// Held constant for every transmission.
    pub prf: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            position: [-125.0, 295_000.0, 0.0],
            carrier_freq: 3.0e9,
            pulse_duration: 1e-3,
            transmit_energy: 1.0,
            snr_ref: 9.31,
            range_ref: 100_000.0,
            angle_noise_std: 1.0e-3,
            min_bw: 0.5e6,
            max_bw: 10.0e6,
            prf: 1.0e3,
        }
    }
}

impl RadarConfig {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("pulse_duration", self.pulse_duration),
            ("snr_ref", self.snr_ref),
            ("range_ref", self.range_ref),
            ("angle_noise_std", self.angle_noise_std),
            ("min_bw", self.min_bw),
            ("prf", self.prf),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.max_bw >= self.min_bw && self.max_bw.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < min_bw <= max_bw, got [{}, {}]",
                self.min_bw, self.max_bw
            )));
        }
        Ok(())
    }

    pub fn waveform(&self, bandwidth: f64) -> Result<WaveformParams> {
        self.check_bandwidth(bandwidth)?;
        Ok(WaveformParams {
            prf: self.prf,
            bandwidth,
        })
    }

    pub fn check_bandwidth(&self, bandwidth: f64) -> Result<()> {
        if bandwidth >= self.min_bw && bandwidth <= self.max_bw {
            Ok(())
        } else {
            Err(Error::BandwidthOutOfRange {
                bandwidth,
                min: self.min_bw,
                max: self.max_bw,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub range: f64,
    pub range_rate: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub noise_cov: Matrix4<f64>,
    pub waveform: WaveformParams,
    pub t: f64,
}

impl Measurement {
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.range, self.range_rate, self.azimuth, self.elevation)
    }

    pub fn range_variance(&self) -> f64 {
        self.noise_cov[(0, 0)]
    }
}

fn line_of_sight(state: &Vector6<f64>, radar_position: &Vector3<f64>) -> Result<(Vector3<f64>, f64)> {
    let d = state.fixed_rows::<3>(0) - radar_position;
    let r = d.norm();
    if r > 0.0 {
        Ok((d, r))
    } else {
        Err(Error::TargetAtRadar)
    }
}

/// h(x): (range, range rate, azimuth, elevation).
pub fn observe(state: &Vector6<f64>, radar_position: &Vector3<f64>) -> Result<Vector4<f64>> {
    let (d, r) = line_of_sight(state, radar_position)?;
    let v = state.fixed_rows::<3>(3);
    Ok(Vector4::new(
        r,
        d.dot(&v) / r,
        d.y.atan2(d.x),
        (d.z / r).clamp(-1.0, 1.0).asin(),
    ))
}

pub fn observe_jacobian(
    state: &Vector6<f64>,
    radar_position: &Vector3<f64>,
) -> Result<ObservationJacobian> {
    let (d, r) = line_of_sight(state, radar_position)?;
    let v: Vector3<f64> = state.fixed_rows::<3>(3).into();
    let u = d / r;
    let rho2 = d.x * d.x + d.y * d.y;
    let rho = rho2.sqrt();
    let rr = d.dot(&v) / r;

    let mut h = ObservationJacobian::zeros();
    for i in 0..3 {
        h[(0, i)] = u[i];
        // d(range_rate)/dp = (v - rr·u) / r
        h[(1, i)] = (v[i] - rr * u[i]) / r;
        h[(1, i + 3)] = u[i];
    }
    if rho > 0.0 {
        h[(2, 0)] = -d.y / rho2;
        h[(2, 1)] = d.x / rho2;
        let r2 = r * r;
        h[(3, 0)] = -d.x * d.z / (r2 * rho);
        h[(3, 1)] = -d.y * d.z / (r2 * rho);
        h[(3, 2)] = rho / r2;
    }
    Ok(h)
}

/// Radar-equation SNR, falling off as range⁻⁴.
pub fn snr_at_range(range: f64, config: &RadarConfig) -> f64 {
    config.snr_ref * (config.range_ref / range).powi(4)
}

/// Diagonal R(θ): matched-filter range and Doppler accuracies plus fixed angle noise.
pub fn measurement_noise_cov(waveform: &WaveformParams, snr: f64, config: &RadarConfig) -> Matrix4<f64> {
    let root = (2.0 * snr).sqrt();
    let sigma_range = SPEED_OF_LIGHT / (2.0 * waveform.bandwidth * root);
    let sigma_range_rate = SPEED_OF_LIGHT / (2.0 * config.carrier_freq * config.pulse_duration * root);
    let sigma_angle = config.angle_noise_std;
    Matrix4::from_diagonal(&Vector4::new(
        sigma_range * sigma_range,
        sigma_range_rate * sigma_range_rate,
        sigma_angle * sigma_angle,
        sigma_angle * sigma_angle,
    ))
}

/// Noisy observation of `truth` with waveform `waveform`.
pub fn measure<R: Rng + ?Sized>(
    truth: &TruthPoint,
    waveform: WaveformParams,
    config: &RadarConfig,
    rng: &mut R,
) -> Result<Measurement> {
    measure_scaled(truth, waveform, config, 1.0, rng)
}

/// Like [`measure`], but the drawn noise is multiplied by `noise_scale` while the
/// reported covariance stays nominal. `noise_scale = 0` gives exact measurements.
pub fn measure_scaled<R: Rng + ?Sized>(
    truth: &TruthPoint,
    waveform: WaveformParams,
    config: &RadarConfig,
    noise_scale: f64,
    rng: &mut R,
) -> Result<Measurement> {
    let clean = observe(&truth.state(), &config.position())?;
    let snr = snr_at_range(clean[0], config);
    let noise_cov = measurement_noise_cov(&waveform, snr, config);
    let mut z = clean;
    for i in 0..4 {
        let n: f64 = rng.sample(StandardNormal);
        z[i] += noise_scale * noise_cov[(i, i)].sqrt() * n;
    }
    Ok(Measurement {
        range: z[0],
        range_rate: z[1],
        azimuth: z[2],
        elevation: z[3],
        noise_cov,
        waveform,
        t: truth.t,
    })
}
