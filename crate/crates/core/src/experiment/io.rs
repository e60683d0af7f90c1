use super::{Histogram, MetricsReport, RunResult};
use crate::error::Result;
use crate::fileio::{csv_bytes, fmt_f64};

fn opt(v: Option<usize>) -> String {
    v.map(|i| i.to_string()).unwrap_or_default()
}

pub fn run_to_csv(run: &RunResult) -> Result<Vec<u8>> {
    csv_bytes(
        &[
            "step",
            "bandwidth_hz",
            "range_error_m",
            "innovation_m",
            "window_m",
            "correlated",
            "reward",
            "state",
            "action",
        ],
        run.records.iter().map(|r| {
            vec![
                r.step.to_string(),
                fmt_f64(r.bandwidth),
                fmt_f64(r.range_error_true),
                fmt_f64(r.range_innovation),
                fmt_f64(r.range_window),
                r.correlated.to_string(),
                fmt_f64(r.reward),
                opt(r.state_index),
                opt(r.action_index),
            ]
        }),
    )
}

/// `step` is the first transmission of each window.
pub fn metrics_to_csv(report: &MetricsReport) -> Result<Vec<u8>> {
    csv_bytes(
        &["step", "mean_windowed_min_mse"],
        report
            .mean_windowed_mse
            .iter()
            .enumerate()
            .map(|(i, v)| vec![(i + 1).to_string(), fmt_f64(*v)]),
    )
}

pub fn histogram_to_csv(hist: &Histogram) -> Result<Vec<u8>> {
    let rows = hist
        .bins
        .iter()
        .map(|(lo, hi, n)| vec![lo.to_string(), hi.to_string(), n.to_string()])
        .chain(std::iter::once(vec![
            "full_track".to_string(),
            String::new(),
            hist.full_track.to_string(),
        ]));
    csv_bytes(&["bin_lo", "bin_hi", "count"], rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: String,
    pub runs: usize,
    pub full_track_successes: usize,
    pub pooled_mse: f64,
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["policy", "runs", "full_track_successes", "mean_windowed_min_mse"],
        rows.iter().map(|r| {
            vec![
                r.policy.clone(),
                r.runs.to_string(),
                r.full_track_successes.to_string(),
                fmt_f64(r.pooled_mse),
            ]
        }),
    )
}
