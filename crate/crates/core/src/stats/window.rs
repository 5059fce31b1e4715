//! Detection of the power-law region of a size distribution.

use super::fit::{fit_power_law_truncated, PowerLawFit, SMinPolicy};
use super::histogram::LogHistogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowOptions {
    /// Allowed deviation of a bin's local slope from `-gamma`.
    pub slope_tol: f64,
    /// Bins with fewer samples are too noisy to carry a slope.
    pub min_count: u64,
    /// Odd number of consecutive bins in each local slope fit.
    pub stencil: usize,
    pub max_iterations: usize,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions { slope_tol: 0.15, min_count: 100, stencil: 5, max_iterations: 20 }
    }
}

/// A contiguous run of histogram bins following `P(S) ∝ S^{-gamma}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawWindow {
    pub first_bin: usize,
    pub last_bin: usize,
    /// Lower edge of the first bin.
    pub s_lo: u64,
    /// Largest size inside the last bin.
    pub s_hi: u64,
    /// Maximum-likelihood fit restricted to `[s_lo, s_hi]`.
    pub fit: PowerLawFit,
}

impl PowerLawWindow {
    /// Width of the window in decades of S.
    pub fn bandwidth_decades(&self) -> f64 {
        ((self.s_hi + 1) as f64 / self.s_lo as f64).log10()
    }

    /// `(log10 lower edge, log10 upper edge)`.
    pub fn log_range(&self) -> (f64, f64) {
        ((self.s_lo as f64).log10(), ((self.s_hi + 1) as f64).log10())
    }
}

/// Least-squares slope of log10 density against log10 bin centre over a
/// centred stencil, for every bin whose stencil is fully populated.
pub fn local_slopes(hist: &LogHistogram, opts: &WindowOptions) -> Vec<Option<f64>> {
    let half = opts.stencil / 2;
    let n = hist.bins();
    let ok = |k: usize| hist.counts[k] >= opts.min_count.max(1);
    (0..n)
        .map(|k| {
            if k < half || k + half >= n || !(k - half..=k + half).all(ok) {
                return None;
            }
            let pts: Vec<(f64, f64)> = (k - half..=k + half)
                .map(|j| (hist.center(j).log10(), hist.density[j].log10()))
                .collect();
            let m = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(sxy / sxx)
        })
        .collect()
}

/// Longest run (in decades) of consecutive bins whose slope is within
/// `tol` of `-gamma`.
fn longest_run(hist: &LogHistogram, slopes: &[Option<f64>], gamma: f64, tol: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut start = None;
    for k in 0..=slopes.len() {
        let inside = k < slopes.len() && slopes[k].is_some_and(|s| (s + gamma).abs() <= tol);
        match (inside, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                let width = (hist.edges[k] / hist.edges[s]).log10();
                if best.map_or(true, |b| width > b.2) {
                    best = Some((s, k - 1, width));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.map(|(a, b, _)| (a, b))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Finds the widest run of bins whose local slope matches `-gamma`, where
/// `gamma` is the maximum-likelihood exponent of the run itself. Iterates
/// from the median local slope to a fixed point.
pub fn find_power_law_window(sizes: &[u64], hist: &LogHistogram, opts: &WindowOptions) -> Result<PowerLawWindow> {
    if opts.stencil < 2 || opts.stencil % 2 == 0 {
        return Err(Error::Config(format!("stencil must be odd and at least 3, got {}", opts.stencil)));
    }
    let slopes = local_slopes(hist, opts);
    let valid: Vec<f64> = slopes.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::NoDynamicRange);
    }
    let mut gamma = -median(valid);
    let mut current: Option<PowerLawWindow> = None;
    for _ in 0..opts.max_iterations {
        let Some((first, last)) = longest_run(hist, &slopes, gamma, opts.slope_tol) else {
            break;
        };
        if current.is_some_and(|w| (w.first_bin, w.last_bin) == (first, last)) {
            break;
        }
        let s_lo = hist.edges[first] as u64;
        let s_hi = hist.edges[last + 1] as u64 - 1;
        let fit = fit_power_law_truncated(sizes, SMinPolicy::Fixed(s_lo), Some(s_hi))?;
        gamma = fit.gamma;
        current = Some(PowerLawWindow { first_bin: first, last_bin: last, s_lo, s_hi, fit });
    }
    current.ok_or(Error::NoDynamicRange)
}

/// Intersection of two windows in log10 S, the second mapped by `S → S/a`.
pub fn joint_log_range(reference: &PowerLawWindow, test: &PowerLawWindow, a: f64) -> Option<(f64, f64)> {
    let (rlo, rhi) = reference.log_range();
    let (tlo, thi) = test.log_range();
    let shift = a.log10();
    let lo = rlo.max(tlo - shift);
    let hi = rhi.min(thi - shift);
    (hi > lo).then_some((lo, hi))
}
