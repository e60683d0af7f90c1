use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PRED_BINS: usize = 10;
pub const DEFAULT_MEAS_BINS: usize = 8;

/// Maps (predicted range variance, measurement range variance) to a state index.
///
/// Bins are half-open `[lo, hi)`: a value equal to an edge lands in the upper bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub pred_var_edges: Vec<f64>,
    pub meas_var_edges: Vec<f64>,
}

impl Discretizer {
    pub fn new(pred_var_edges: Vec<f64>, meas_var_edges: Vec<f64>) -> Result<Self> {
        let d = Self {
            pred_var_edges,
            meas_var_edges,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, edges) in [("pred_var_edges", &self.pred_var_edges), ("meas_var_edges", &self.meas_var_edges)] {
            if edges.iter().any(|e| !e.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
            if edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(format!("{name} must be strictly ascending")));
            }
        }
        Ok(())
    }

    /// Log-spaced edges between the 1st and 99th percentile of each sample set.
    pub fn calibrate(
        pred_var_samples: &[f64],
        meas_var_samples: &[f64],
        pred_bins: usize,
        meas_bins: usize,
    ) -> Result<Self> {
        Self::new(
            log_edges(pred_var_samples, pred_bins)?,
            log_edges(meas_var_samples, meas_bins)?,
        )
    }

    pub fn pred_bins(&self) -> usize {
        self.pred_var_edges.len() + 1
    }

    pub fn meas_bins(&self) -> usize {
        self.meas_var_edges.len() + 1
    }

    pub fn n_states(&self) -> usize {
        self.pred_bins() * self.meas_bins()
    }

    pub fn state_index(&self, predicted_range_variance: f64, measurement_range_variance: f64) -> usize {
        let pred = bin(&self.pred_var_edges, predicted_range_variance);
        let meas = bin(&self.meas_var_edges, measurement_range_variance);
        pred * self.meas_bins() + meas
    }
}

fn bin(edges: &[f64], value: f64) -> usize {
    edges.partition_point(|&e| e <= value)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn log_edges(samples: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 bins, got {bins}")));
    }
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
    if sorted.is_empty() {
        return Err(Error::InvalidConfig("no positive calibration samples".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let lo = percentile(&sorted, 0.01).ln();
    let mut hi = percentile(&sorted, 0.99).ln();
    if hi - lo < 1e-6 {
        // Degenerate spread: widen by a decade so the edges stay distinct.
        hi = lo + std::f64::consts::LN_10;
    }
    let n_edges = bins - 1;
    if n_edges == 1 {
        return Ok(vec![((lo + hi) / 2.0).exp()]);
    }
    Ok((0..n_edges)
        .map(|i| (lo + (hi - lo) * i as f64 / (n_edges - 1) as f64).exp())
        .collect())
}
