//! Bandwidth scaling: start wide, halve on every uncorrelated transmission,
//! double after a run of correlated ones.

/// Correlated transmissions in a row needed before the bandwidth doubles.
pub const DOUBLING_STREAK: usize = 5;

/// One step of the scaling rule. Returns the next bandwidth and streak.
///
/// The streak resets after each doubling so the next doubling needs another
/// full run of correlated transmissions.
pub fn bandwidth_scaling_step(
    prev_bw: f64,
    correlated: bool,
    correlated_streak: usize,
    min_bw: f64,
    max_bw: f64,
) -> (f64, usize) {
    if !correlated {
        return ((prev_bw / 2.0).max(min_bw), 0);
    }
    let streak = correlated_streak + 1;
    if streak >= DOUBLING_STREAK {
        ((prev_bw * 2.0).min(max_bw), 0)
    } else {
        (prev_bw, streak)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthScaling {
    pub min_bw: f64,
    pub max_bw: f64,
    bw: Option<f64>,
    streak: usize,
}

impl BandwidthScaling {
    pub fn new(min_bw: f64, max_bw: f64) -> Self {
        Self {
            min_bw,
            max_bw,
            bw: None,
            streak: 0,
        }
    }

    pub fn reset(&mut self) {
        self.bw = None;
        self.streak = 0;
    }

    /// Bandwidth for the next transmission given whether the last one correlated.
    /// The first call of an episode returns `max_bw`.
    pub fn next(&mut self, last_correlated: bool) -> f64 {
        let bw = match self.bw {
            None => {
                self.streak = 0;
                self.max_bw
            }
            Some(prev) => {
                let (bw, streak) =
                    bandwidth_scaling_step(prev, last_correlated, self.streak, self.min_bw, self.max_bw);
                self.streak = streak;
                bw
            }
        };
        self.bw = Some(bw);
        bw
    }
}
