use super::RunResult;

/// Sliding-window length of the spike-robust error metric.
pub const MSE_WINDOW: usize = 3;
pub const DEFAULT_HISTOGRAM_BIN: usize = 20;

/// Minimum over each full window: `out[i] = min(series[i..i + window])`.
pub fn windowed_min(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be >= 1");
    series
        .windows(window)
        .map(|w| w.iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

/// Records of a run that precede the miss streak which lost it.
pub fn successful_segment(run: &RunResult) -> &[super::StepRecord] {
    if run.successful {
        return &run.records;
    }
    let trailing_misses = run.records.iter().rev().take_while(|r| !r.correlated).count();
    &run.records[..run.records.len() - trailing_misses]
}

fn windowed_squared_errors(run: &RunResult, window: usize) -> Vec<f64> {
    let sq: Vec<f64> = successful_segment(run)
        .iter()
        .map(|r| r.range_error_true * r.range_error_true)
        .collect();
    windowed_min(&sq, window)
}

/// Per-step mean of the windowed-min squared range error, averaging only the
/// runs that still have a value at that step.
pub fn mean_windowed_mse(results: &[RunResult], window: usize) -> Vec<f64> {
    let per_run: Vec<Vec<f64>> = results.iter().map(|r| windowed_squared_errors(r, window)).collect();
    let len = per_run.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let alive: Vec<f64> = per_run.iter().filter_map(|s| s.get(i).copied()).collect();
            alive.iter().sum::<f64>() / alive.len() as f64
        })
        .collect()
}

/// Mean of every windowed-min squared error across all runs and steps.
/// `NaN` when no run has a full window.
pub fn pooled_windowed_mse(results: &[RunResult], window: usize) -> f64 {
    let (sum, n) = results
        .iter()
        .flat_map(|r| windowed_squared_errors(r, window))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `(lo, hi, count)` over transmissions-before-loss, `[lo, hi)`.
    pub bins: Vec<(usize, usize, usize)>,
    /// Runs that kept the track through every transmission.
    pub full_track: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.2).sum::<usize>() + self.full_track
    }
}

/// Histogram of when tracks were lost, with a final bin for complete tracks.
pub fn success_histogram(results: &[RunResult], bin_width: usize, n_transmissions: usize) -> Histogram {
    assert!(bin_width >= 1, "bin width must be >= 1");
    let n_bins = n_transmissions / bin_width + 1;
    let mut bins: Vec<(usize, usize, usize)> = (0..n_bins)
        .map(|i| (i * bin_width, (i + 1) * bin_width, 0))
        .collect();
    let mut full_track = 0;
    for r in results {
        match r.lost_at {
            None => full_track += 1,
            Some(step) => {
                let i = (step / bin_width).min(n_bins - 1);
                bins[i].2 += 1;
            }
        }
    }
    Histogram { bins, full_track }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub runs: usize,
    pub mean_windowed_mse: Vec<f64>,
    /// Scalar summary used when comparing policies.
    pub pooled_mse: f64,
    pub histogram: Histogram,
    pub full_track_successes: usize,
}

impl MetricsReport {
    pub fn from_runs(results: &[RunResult], n_transmissions: usize) -> Self {
        let histogram = success_histogram(results, DEFAULT_HISTOGRAM_BIN, n_transmissions);
        Self {
            runs: results.len(),
            mean_windowed_mse: mean_windowed_mse(results, MSE_WINDOW),
            pooled_mse: pooled_windowed_mse(results, MSE_WINDOW),
            full_track_successes: histogram.full_track,
            histogram,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::StepRecord;
    use super::*;

    fn run(errors: &[f64], lost: bool) -> RunResult {
        let n = errors.len();
        let records = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| StepRecord {
                step: i + 1,
                bandwidth: 1e6,
                range_error_true: e,
                range_innovation: 0.0,
                range_window: 1.0,
                correlated: !(lost && i + 5 >= n),
                reward: 0.0,
                state_index: None,
                action_index: None,
                pred_var: 1.0,
                meas_var: 1.0,
            })
            .collect();
        RunResult {
            records,
            lost_at: lost.then_some(n),
            successful: !lost,
        }
    }

    #[test]
    fn windowed_min_examples() {
        assert_eq!(windowed_min(&[5.0, 1.0, 9.0, 2.0], 3), vec![1.0, 1.0]);
        assert_eq!(windowed_min(&[5.0, 1.0, 9.0], 1), vec![5.0, 1.0, 9.0]);
        assert_eq!(windowed_min(&[4.0; 6], 3), vec![4.0; 4]);
        assert!(windowed_min(&[1.0, 2.0], 3).is_empty());
    }

    #[test]
    fn single_run_mse() {
        let r = run(&[1.0, 3.0, 2.0, 5.0], false);
        assert_eq!(mean_windowed_mse(std::slice::from_ref(&r), 1), vec![1.0, 9.0, 4.0, 25.0]);
        assert_eq!(mean_windowed_mse(&[r], 3), vec![1.0, 4.0]);
        assert_eq!(mean_windowed_mse(&[run(&[0.0; 10], false)], 3), vec![0.0; 8]);
    }

    #[test]
    fn two_constant_runs_average() {
        let (e1, e2) = (3.0, 5.0);
        let out = mean_windowed_mse(&[run(&[e1; 12], false), run(&[e2; 12], false)], 3);
        assert_eq!(out, vec![(e1 * e1 + e2 * e2) / 2.0; 10]);
    }

    #[test]
    fn lost_runs_drop_out_and_lose_their_final_streak() {
        let long = run(&[2.0; 20], false);
        let short = run(&[4.0; 12], true);
        assert_eq!(successful_segment(&short).len(), 7);
        let out = mean_windowed_mse(&[long, short], 3);
        assert_eq!(out.len(), 18);
        assert_eq!(out[0], (4.0 + 16.0) / 2.0);
        assert_eq!(out[4], (4.0 + 16.0) / 2.0);
        assert_eq!(out[5], 4.0);
    }

    #[test]
    fn histogram_bins() {
        let all_ok: Vec<_> = (0..4).map(|_| run(&[1.0; 30], false)).collect();
        let h = success_histogram(&all_ok, 20, 160);
        assert_eq!(h.full_track, 4);
        assert!(h.bins.iter().all(|b| b.2 == 0));

        let lost = run(&[1.0; 12], true);
        let h = success_histogram(&[lost, run(&[1.0; 5], false)], 20, 160);
        assert_eq!(h.bins[0], (0, 20, 1));
        assert_eq!(h.total(), 2);
    }
}
