//! The two drive comparisons: same pile under two drive rates, and a pile
//! scaled up together with its drive.

use std::fmt::Write as _;

use super::config::{ExperimentConfig, TransientPolicy};
use super::experiment::{run_experiment, RunOutput};
use crate::error::{Error, Result};
use crate::stats::{joint_log_range, rescale_and_compare, CollapseReport};

/// Rescaling applied to the faster-driven run in both comparisons.
pub const FIGURE_SCALE_FACTOR: f64 = 16.0;

/// Upper size bound for the small-avalanche comparison.
pub const SMALL_AVALANCHE_BOUND: f64 = 10.0;

/// A comparison outcome; the error is kept as its message.
pub type Outcome<T> = std::result::Result<T, String>;

fn collapse_text(s: &mut String, name: &str, r: &Outcome<CollapseReport>) {
    let _ = writeln!(s, "\n[{name}]");
    match r {
        Ok(c) => {
            let _ = writeln!(s, "scale_factor = {}", c.scale_factor);
            let _ = writeln!(s, "overlap_lo = {}", c.overlap_lo);
            let _ = writeln!(s, "overlap_hi = {}", c.overlap_hi);
            let _ = writeln!(s, "distance = {}", c.distance);
            let _ = writeln!(s, "decades_compared = {}", c.decades_compared);
        }
        Err(e) => {
            let _ = writeln!(s, "error = {e}");
        }
    }
}

fn fit_text(s: &mut String, name: &str, run: &RunOutput) {
    let _ = writeln!(s, "\n[{name}]");
    let sm = &run.summary;
    let _ = writeln!(s, "side = {}", sm.config.side);
    let _ = writeln!(s, "grains_per_event = {}", sm.config.drive.grains_per_event);
    let _ = writeln!(s, "seed = {}", sm.config.seed);
    let _ = writeln!(s, "avalanches = {}", sm.avalanches);
    match &sm.window {
        Some(w) => {
            let _ = writeln!(s, "gamma = {}", w.fit.gamma);
            let _ = writeln!(s, "std_error = {}", w.fit.std_error);
            let _ = writeln!(s, "window_s_lo = {}", w.s_lo);
            let _ = writeln!(s, "window_s_hi = {}", w.s_hi);
            let _ = writeln!(s, "bandwidth_decades = {}", w.bandwidth_decades());
        }
        None => {
            let _ = writeln!(s, "error = {}", sm.analysis_error.as_deref().unwrap_or("no window"));
        }
    }
}

fn window_or_missing(reference: &RunOutput, test: &RunOutput, a: f64) -> Outcome<(f64, f64)> {
    match (&reference.summary.window, &test.summary.window) {
        (Some(r), Some(t)) => joint_log_range(r, t, a).ok_or_else(|| Error::NoOverlap.to_string()),
        _ => Err(Error::NoDynamicRange.to_string()),
    }
}

fn compare(reference: &RunOutput, test: &RunOutput, a: f64, window: (f64, f64)) -> Outcome<CollapseReport> {
    rescale_and_compare(&reference.histogram, &test.histogram, a, Some(window)).map_err(|e| e.to_string())
}

fn gamma_agreement(reference: &RunOutput, test: &RunOutput) -> Option<bool> {
    Some(reference.summary.fit()?.agrees_with(test.summary.fit()?, 2.0))
}

#[derive(Debug, Clone)]
pub struct Figure1Report {
    pub reference: RunOutput,
    pub test: RunOutput,
    /// Joint power-law window in log10 S of the reference frame.
    pub joint_window: Outcome<(f64, f64)>,
    /// Test sizes mapped `S → S/16`, compared over the joint window.
    pub rescaled: Outcome<CollapseReport>,
    /// No rescaling, same window.
    pub unscaled: Outcome<CollapseReport>,
    /// Probability of `S ≤ 10` in each run.
    pub small_mass: (f64, f64),
    /// Exponents agree within two joint standard errors.
    pub gamma_agree: Option<bool>,
}

impl Figure1Report {
    /// True when the faster drive has less mass and no more density in
    /// every bin at `S ≤ 10`, with at least one bin strictly lower.
    pub fn small_avalanches_suppressed(&self) -> bool {
        let r = &self.reference.histogram;
        let t = &self.test.histogram;
        let density_at = |h: &crate::stats::LogHistogram, s: u64| {
            (0..h.bins())
                .find(|&k| h.edges[k] <= s as f64 && (s as f64) < h.edges[k + 1])
                .map_or(0.0, |k| h.density[k])
        };
        let mut strictly = false;
        for s in 1..=SMALL_AVALANCHE_BOUND as u64 {
            let (dr, dt) = (density_at(r, s), density_at(t, s));
            if dt > dr {
                return false;
            }
            strictly |= dt < dr;
        }
        strictly && self.small_mass.1 < self.small_mass.0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# drive comparison at fixed system size\n");
        fit_text(&mut s, "reference", &self.reference);
        fit_text(&mut s, "test", &self.test);
        let _ = writeln!(s, "\n[comparison]");
        match &self.joint_window {
            Ok((lo, hi)) => {
                let _ = writeln!(s, "joint_window = {lo} {hi}");
            }
            Err(e) => {
                let _ = writeln!(s, "joint_window = none ({e})");
            }
        }
        let _ = writeln!(s, "small_mass_reference = {}", self.small_mass.0);
        let _ = writeln!(s, "small_mass_test = {}", self.small_mass.1);
        let _ = writeln!(s, "small_avalanches_suppressed = {}", self.small_avalanches_suppressed());
        let agree = self.gamma_agree.map_or("none".to_string(), |b| b.to_string());
        let _ = writeln!(s, "gamma_agree_2sigma = {agree}");
        collapse_text(&mut s, "rescaled", &self.rescaled);
        collapse_text(&mut s, "unscaled", &self.unscaled);
        s
    }
}

/// Compares two finished runs, mapping the test run's sizes by `S → S/16`.
pub fn figure1_from_runs(reference: RunOutput, test: RunOutput) -> Figure1Report {
    let a = FIGURE_SCALE_FACTOR;
    let joint_window = window_or_missing(&reference, &test, a);
    let (rescaled, unscaled) = match joint_window {
        Ok(w) => (compare(&reference, &test, a, w), compare(&reference, &test, 1.0, w)),
        Err(ref e) => (Err(e.clone()), Err(e.clone())),
    };
    let small_mass = (
        reference.histogram.mass_below(SMALL_AVALANCHE_BOUND),
        test.histogram.mass_below(SMALL_AVALANCHE_BOUND),
    );
    let gamma_agree = gamma_agreement(&reference, &test);
    Figure1Report { reference, test, joint_window, rescaled, unscaled, small_mass, gamma_agree }
}

/// `side = 100` corner-driven piles with 4 and 16 grains per event.
pub fn figure1_configs(seed: u64, target_avalanches: u64) -> (ExperimentConfig, ExperimentConfig) {
    (
        ExperimentConfig::corner_driven(100, 4, seed, target_avalanches),
        ExperimentConfig::corner_driven(100, 16, seed, target_avalanches),
    )
}

pub fn figure1_experiment(seed: u64, target_avalanches: u64) -> Result<Figure1Report> {
    let (r, t) = figure1_configs(seed, target_avalanches);
    Ok(figure1_from_runs(run_experiment(&r)?, run_experiment(&t)?))
}

#[derive(Debug, Clone)]
pub struct Figure2Report {
    pub reference: RunOutput,
    pub test: RunOutput,
    pub joint_window: Outcome<(f64, f64)>,
    /// log10 of the largest size in the reference frame.
    pub top: f64,
    /// Joint window with the largest decade of S removed.
    pub excluded: Outcome<CollapseReport>,
    /// Joint window extended through the largest decade.
    pub included: Outcome<CollapseReport>,
    pub gamma_agree: Option<bool>,
}

impl Figure2Report {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# joint rescaling of drive and system size\n");
        fit_text(&mut s, "reference", &self.reference);
        fit_text(&mut s, "test", &self.test);
        let _ = writeln!(s, "\n[comparison]");
        match &self.joint_window {
            Ok((lo, hi)) => {
                let _ = writeln!(s, "joint_window = {lo} {hi}");
            }
            Err(e) => {
                let _ = writeln!(s, "joint_window = none ({e})");
            }
        }
        let _ = writeln!(s, "log10_largest_size = {}", self.top);
        let agree = self.gamma_agree.map_or("none".to_string(), |b| b.to_string());
        let _ = writeln!(s, "gamma_agree_2sigma = {agree}");
        collapse_text(&mut s, "top_decade_excluded", &self.excluded);
        collapse_text(&mut s, "top_decade_included", &self.included);
        s
    }
}

pub fn figure2_from_runs(reference: RunOutput, test: RunOutput) -> Figure2Report {
    let a = FIGURE_SCALE_FACTOR;
    let largest = (reference.summary.max_size as f64).max(test.summary.max_size as f64 / a);
    let top = largest.log10();
    let joint_window = window_or_missing(&reference, &test, a);
    let (excluded, included) = match joint_window {
        Ok((lo, hi)) => (
            compare(&reference, &test, a, (lo, hi.min(top - 1.0))),
            compare(&reference, &test, a, (lo, hi.max(top))),
        ),
        Err(ref e) => (Err(e.clone()), Err(e.clone())),
    };
    let gamma_agree = gamma_agreement(&reference, &test);
    Figure2Report { reference, test, joint_window, top, excluded, included, gamma_agree }
}

/// `(side 100, 4 grains)` against `(side 400, 16 grains)`. The larger pile
/// collects `test_avalanches` avalanches under its own transient policy.
pub fn figure2_configs(
    seed: u64,
    target_avalanches: u64,
    test_avalanches: u64,
    test_transient: TransientPolicy,
) -> (ExperimentConfig, ExperimentConfig) {
    let reference = ExperimentConfig::corner_driven(100, 4, seed, target_avalanches);
    let mut test = ExperimentConfig::corner_driven(400, 16, seed, test_avalanches);
    test.transient = test_transient;
    (reference, test)
}

pub fn figure2_experiment(
    seed: u64,
    target_avalanches: u64,
    test_avalanches: u64,
    test_transient: TransientPolicy,
) -> Result<Figure2Report> {
    let (r, t) = figure2_configs(seed, target_avalanches, test_avalanches, test_transient);
    Ok(figure2_from_runs(run_experiment(&r)?, run_experiment(&t)?))
}
