//! Steady-state detection on the stored-grain series.

use crate::error::{Error, Result};

/// Prefix sums of `y` and `i·y`, exact in 128-bit integers.
struct Prefix {
    y: Vec<i128>,
    iy: Vec<i128>,
}

impl Prefix {
    fn new(series: &[u64]) -> Self {
        let mut y = Vec::with_capacity(series.len() + 1);
        let mut iy = Vec::with_capacity(series.len() + 1);
        y.push(0);
        iy.push(0);
        for (i, &v) in series.iter().enumerate() {
            y.push(y[i] + v as i128);
            iy.push(iy[i] + i as i128 * v as i128);
        }
        Prefix { y, iy }
    }

    /// Least-squares slope over `series[t..t + w]` divided by the mean there.
    fn normalized_slope(&self, t: usize, w: usize) -> f64 {
        let sy = self.y[t + w] - self.y[t];
        // Σ (i - t) y_i over the window
        let sjy = self.iy[t + w] - self.iy[t] - t as i128 * sy;
        let n = w as i128;
        let sj = n * (n - 1) / 2;
        let sjj = (n - 1) * n * (2 * n - 1) / 6;
        let num = n * sjy - sj * sy;
        let den = n * sjj - sj * sj;
        if num == 0 {
            return 0.0;
        }
        if sy == 0 {
            return f64::INFINITY;
        }
        // slope / mean = (num / den) / (sy / n)
        (num as f64 / den as f64) * (n as f64 / sy as f64)
    }
}

/// Earliest `t` whose window `[t, t + window)` has `|slope| / mean < slope_tol`.
pub fn detect_steady_state(stored: &[u64], window: usize, slope_tol: f64) -> Result<usize> {
    if window < 2 {
        return Err(Error::Config("steady-state window must be at least 2".into()));
    }
    if stored.len() < 2 * window {
        return Err(Error::Config(format!(
            "series of {} points is shorter than two windows of {window}",
            stored.len()
        )));
    }
    let prefix = Prefix::new(stored);
    let last = stored.len() - window;
    (0..=last)
        .find(|&t| prefix.normalized_slope(t, window).abs() < slope_tol)
        .ok_or_else(|| Error::TransientNotConverged { final_slope: prefix.normalized_slope(last, window) })
}
