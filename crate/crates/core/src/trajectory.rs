//! Synthetic ballistic ground truth.
//!
//! Flat Earth, constant gravity, 3-DOF point mass integrated with a fixed-step
//! RK4. The only randomness is the lateral maneuver acceleration applied in
//! the terminal phase, so two seeds produce the same path up to re-entry.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fileio;

/// Hard stop for runaway integrations (e.g. escape trajectories).
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Boost,
    MidCourse,
    Terminal,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Boost => "boost",
            Phase::MidCourse => "midcourse",
            Phase::Terminal => "terminal",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boost" => Ok(Phase::Boost),
            "midcourse" => Ok(Phase::MidCourse),
            "terminal" => Ok(Phase::Terminal),
            other => Err(Error::Parse(format!("unknown phase {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    /// Launch point (m); z is altitude.
    pub launch_position: [f64; 3],
    /// Launch direction above the horizon (rad).
    pub launch_elevation_angle: f64,
    /// Launch direction measured from +x towards +y (rad).
    pub launch_azimuth: f64,
    /// Speed along the launch direction at t = 0 (m/s).
    pub launch_speed: f64,
    /// Thrust acceleration along the velocity vector during boost (m/s²).
    pub thrust_accel: f64,
    pub boost_duration: f64,
    /// Cd·A/m (m²/kg).
    pub drag_coeff_times_area_over_mass: f64,
    pub atmosphere_scale_height: f64,
    pub sea_level_density: f64,
    pub gravity: f64,
    /// Integration step, also the spacing of the emitted samples (s).
    pub dt: f64,
    /// Std of each lateral maneuver acceleration component in the terminal phase (m/s²).
    pub terminal_maneuver_accel_std: f64,
    /// Terminal phase starts at the first descending crossing of this altitude (m).
    pub reentry_altitude: f64,
}

impl Default for TrajectoryConfig {
    /// The hard, maneuvering reference trajectory.
    fn default() -> Self {
        Self {
            launch_position: [0.0, 0.0, 0.0],
            launch_elevation_angle: 80f64.to_radians(),
            launch_azimuth: 0.0,
            launch_speed: 50.0,
            thrust_accel: 62.5,
            boost_duration: 30.0,
            drag_coeff_times_area_over_mass: 5.0e-5,
            atmosphere_scale_height: 7200.0,
            sea_level_density: 1.225,
            gravity: 9.81,
            dt: 2.0,
            terminal_maneuver_accel_std: 2.0,
            reentry_altitude: 40_000.0,
        }
    }
}

impl TrajectoryConfig {
    /// A gentler flight: a softer, longer burn and no terminal maneuvering.
    pub fn gentle() -> Self {
        Self {
            thrust_accel: 50.0,
            boost_duration: 45.0,
            terminal_maneuver_accel_std: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("boost_duration", self.boost_duration),
            ("atmosphere_scale_height", self.atmosphere_scale_height),
            ("gravity", self.gravity),
            ("dt", self.dt),
            ("reentry_altitude", self.reentry_altitude),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("launch_speed", self.launch_speed),
            ("thrust_accel", self.thrust_accel),
            ("drag_coeff_times_area_over_mass", self.drag_coeff_times_area_over_mass),
            ("sea_level_density", self.sea_level_density),
            ("terminal_maneuver_accel_std", self.terminal_maneuver_accel_std),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.launch_position.iter().any(|c| !c.is_finite())
            || !self.launch_elevation_angle.is_finite()
            || !self.launch_azimuth.is_finite()
        {
            return Err(Error::InvalidConfig("non-finite launch geometry".into()));
        }
        Ok(())
    }

    fn launch_direction(&self) -> Vector3<f64> {
        let (se, ce) = self.launch_elevation_angle.sin_cos();
        let (sa, ca) = self.launch_azimuth.sin_cos();
        Vector3::new(ce * ca, ce * sa, se)
    }

    fn density(&self, altitude: f64) -> f64 {
        self.sea_level_density * (-altitude.max(0.0) / self.atmosphere_scale_height).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthPoint {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub phase: Phase,
}

impl TruthPoint {
    pub fn altitude(&self) -> f64 {
        self.position.z
    }

    /// `[p; v]` as a 6-vector.
    pub fn state(&self) -> nalgebra::Vector6<f64> {
        nalgebra::Vector6::new(
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
        )
    }
}

/// Integrates the configured flight until the target reaches the ground.
///
/// The returned sequence starts at the launch point (t = 0) and ends with the
/// first sample at or below zero altitude.
pub fn generate_trajectory(config: &TrajectoryConfig, seed: u64) -> Result<Vec<TruthPoint>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maneuver = Normal::new(0.0, config.terminal_maneuver_accel_std)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let launch_dir = config.launch_direction();
    let mut p = Vector3::from(config.launch_position);
    let mut v = launch_dir * config.launch_speed;
    let mut t = 0.0;
    let mut been_above_reentry = p.z >= config.reentry_altitude;
    let mut phase = Phase::Boost;
    let mut out = vec![TruthPoint {
        t,
        position: p,
        velocity: v,
        phase,
    }];

    for step in 0..MAX_STEPS {
        let lateral = if phase == Phase::Terminal && config.terminal_maneuver_accel_std > 0.0 {
            let (e1, e2) = lateral_basis(&v);
            e1 * maneuver.sample(&mut rng) + e2 * maneuver.sample(&mut rng)
        } else {
            Vector3::zeros()
        };

        let accel = |tau: f64, vel: &Vector3<f64>, pos: &Vector3<f64>| -> Vector3<f64> {
            let mut a = Vector3::new(0.0, 0.0, -config.gravity);
            if tau < config.boost_duration {
                let speed = vel.norm();
                let dir = if speed > 1e-9 { vel / speed } else { launch_dir };
                a += dir * config.thrust_accel;
            }
            let k = config.drag_coeff_times_area_over_mass;
            if k > 0.0 {
                a -= vel * (0.5 * config.density(pos.z) * k * vel.norm());
            }
            a + lateral
        };

        let dt = config.dt;
        let k1v = accel(t, &v, &p);
        let k1p = v;
        let v2 = v + k1v * (dt / 2.0);
        let p2 = p + k1p * (dt / 2.0);
        let k2v = accel(t + dt / 2.0, &v2, &p2);
        let k2p = v2;
        let v3 = v + k2v * (dt / 2.0);
        let p3 = p + k2p * (dt / 2.0);
        let k3v = accel(t + dt / 2.0, &v3, &p3);
        let k3p = v3;
        let v4 = v + k3v * dt;
        let p4 = p + k3p * dt;
        let k4v = accel(t + dt, &v4, &p4);
        let k4p = v4;
        p += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        // Multiply rather than accumulate so sample times stay exact multiples of dt.
        t = (step + 1) as f64 * dt;

        if !(p.iter().chain(v.iter()).all(|c| c.is_finite())) {
            return Err(Error::NonFinite { t });
        }
        if step == 0 && p.z <= config.launch_position[2].min(0.0) {
            return Err(Error::DegenerateTrajectory(
                "target never leaves the ground".into(),
            ));
        }

        been_above_reentry |= p.z >= config.reentry_altitude;
        phase = if t < config.boost_duration {
            Phase::Boost
        } else if phase == Phase::Terminal
            || (been_above_reentry && v.z < 0.0 && p.z < config.reentry_altitude)
        {
            Phase::Terminal
        } else {
            Phase::MidCourse
        };
        out.push(TruthPoint {
            t,
            position: p,
            velocity: v,
            phase,
        });
        if p.z <= 0.0 {
            return Ok(out);
        }
    }
    Err(Error::DegenerateTrajectory(format!(
        "no ground impact within {MAX_STEPS} steps"
    )))
}

/// Two unit vectors spanning the plane normal to `v`.
fn lateral_basis(v: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let along = v
        .try_normalize(1e-12)
        .unwrap_or_else(|| Vector3::new(0.0, 0.0, 1.0));
    let reference = if along.z.abs() < 0.9 {
        Vector3::z()
    } else {
        Vector3::x()
    };
    let e1 = along.cross(&reference).normalize();
    let e2 = e1.cross(&along);
    (e1, e2)
}

/// Times of the Boost→MidCourse and MidCourse→Terminal transitions.
pub fn phase_boundaries(trajectory: &[TruthPoint]) -> Result<(f64, f64)> {
    if trajectory.is_empty() {
        return Err(Error::InvalidConfig("empty trajectory".into()));
    }
    let first_of = |phase: Phase| trajectory.iter().find(|p| p.phase == phase).map(|p| p.t);
    let boost_end = first_of(Phase::MidCourse).ok_or(Error::MissingPhase("mid-course"))?;
    let terminal_start = first_of(Phase::Terminal).ok_or(Error::MissingPhase("terminal"))?;
    if trajectory[0].phase != Phase::Boost {
        return Err(Error::MissingPhase("boost"));
    }
    Ok((boost_end, terminal_start))
}

pub const TRAJECTORY_CSV_HEADER: [&str; 8] = ["t", "px", "py", "pz", "vx", "vy", "vz", "phase"];

pub fn trajectory_to_csv(trajectory: &[TruthPoint]) -> Result<Vec<u8>> {
    fileio::csv_bytes(
        &TRAJECTORY_CSV_HEADER,
        trajectory.iter().map(|pt| {
            let mut row: Vec<String> = std::iter::once(pt.t)
                .chain(pt.position.iter().copied())
                .chain(pt.velocity.iter().copied())
                .map(fileio::fmt_f64)
                .collect();
            row.push(pt.phase.to_string());
            row
        }),
    )
}

pub fn trajectory_from_csv(data: &[u8]) -> Result<Vec<TruthPoint>> {
    let mut reader = csv::Reader::from_reader(data);
    let header = reader.headers()?.clone();
    if header.iter().ne(TRAJECTORY_CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected trajectory header {header:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("column {}: {e}", TRAJECTORY_CSV_HEADER[i])))
        };
        out.push(TruthPoint {
            t: num(0)?,
            position: Vector3::new(num(1)?, num(2)?, num(3)?),
            velocity: Vector3::new(num(4)?, num(5)?, num(6)?),
            phase: record[7].parse()?,
        });
    }
    Ok(out)
}

pub fn write_trajectory_csv(path: &Path, trajectory: &[TruthPoint]) -> Result<()> {
    fileio::write_atomic(path, &trajectory_to_csv(trajectory)?)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TruthPoint>> {
    trajectory_from_csv(fileio::read_to_string(path)?.as_bytes())
}
