//! Closed-loop simulation of a tracking radar that picks its transmit
//! bandwidth every dwell while following a ballistic target.
//!
//! The pieces, bottom-up:
//!
//! - [`trajectory`]: three-phase point-mass ground truth (boost, mid-course,
//!   terminal) integrated with RK4.
//! - [`radar`]: observation function, its Jacobian and the
//!   bandwidth-dependent measurement covariance.
//! - [`tracker`]: EKF with range gating, coasting and track-loss logic.
//! - [`policy`]: fixed bandwidth, bandwidth scaling and tabular Q-learning
//!   (with optional L-step lookahead updates).
//! - [`experiment`]: episode runner, training/evaluation campaigns and the
//!   windowed-min error / success histogram metrics.
//! - [`cli`]: the `cogtrack` command line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod policy;
pub mod radar;
pub mod tracker;
pub mod trajectory;

mod fileio;

pub use error::{Error, Result};
