//! Drive sweep: one run per grains-per-event value, then a bandwidth trend.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, RunOutput, LATTICE_DIMENSION};
use crate::error::{Error, Result};
use crate::pi::{classify_drive_regime, DriveRegime, DEFAULT_REGIME_MARGIN};

/// Allowed bandwidth rise, in decades, between a smaller and a larger drive.
pub const BANDWIDTH_SLACK: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub h_dt: u64,
    pub seed: u64,
    pub regime: DriveRegime,
    pub r_a_configured: f64,
    pub bandwidth_decades: f64,
    pub gamma: Option<f64>,
    pub std_error: Option<f64>,
    /// The run itself; `None` for rows flagged Laminar.
    pub output: Option<RunOutput>,
}

impl SweepRow {
    pub fn is_fitted(&self) -> bool {
        self.gamma.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Bandwidth never rises by more than the slack as the drive grows.
    /// `None` with fewer than two runs.
    pub monotone: Option<bool>,
    /// Every pair of fitted exponents agrees within two joint standard
    /// errors. `None` with fewer than two fits.
    pub gamma_stable: Option<bool>,
}

impl SweepReport {
    pub fn to_text(&self) -> String {
        let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), |v| v.to_string());
        let verdict = |x: Option<bool>| x.map_or_else(|| "none".to_string(), |v| v.to_string());
        let mut s = String::from("h_dt,seed,regime,r_a_configured,bandwidth_decades,gamma,std_error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.h_dt,
                r.seed,
                r.regime.as_str(),
                r.r_a_configured,
                r.bandwidth_decades,
                opt(r.gamma),
                opt(r.std_error)
            );
        }
        let _ = writeln!(s, "# monotone = {}", verdict(self.monotone));
        let _ = writeln!(s, "# gamma_stable = {}", verdict(self.gamma_stable));
        s
    }
}

fn run_row(base: &ExperimentConfig, h_dt: u64, seed: u64) -> Result<SweepRow> {
    let regime = classify_drive_regime(
        h_dt as f64,
        base.threshold as f64,
        base.side as f64,
        LATTICE_DIMENSION,
        DEFAULT_REGIME_MARGIN,
    )?;
    let cells = (base.side * base.side) as f64;
    let mut row = SweepRow {
        h_dt,
        seed,
        regime,
        r_a_configured: 1.0 / cells,
        bandwidth_decades: 0.0,
        gamma: None,
        std_error: None,
        output: None,
    };
    if regime == DriveRegime::Laminar {
        return Ok(row);
    }
    let mut config = *base;
    config.drive.grains_per_event = h_dt;
    config.seed = seed;
    let out = run_experiment(&config)?;
    let s = &out.summary;
    row.r_a_configured = s.r_a_configured;
    row.bandwidth_decades = s.bandwidth_decades();
    row.gamma = s.fit().map(|f| f.gamma);
    row.std_error = s.fit().map(|f| f.std_error);
    row.output = Some(out);
    Ok(row)
}

fn monotone(rows: &[SweepRow]) -> Option<bool> {
    let run: Vec<&SweepRow> = rows.iter().filter(|r| r.output.is_some()).collect();
    (run.len() >= 2).then(|| {
        run.iter()
            .enumerate()
            .all(|(i, a)| run[i + 1..].iter().all(|b| b.bandwidth_decades <= a.bandwidth_decades + BANDWIDTH_SLACK))
    })
}

fn gamma_stable(rows: &[SweepRow]) -> Option<bool> {
    let fits: Vec<_> = rows.iter().filter_map(|r| r.output.as_ref()?.summary.fit()).collect();
    (fits.len() >= 2).then(|| {
        fits.iter().enumerate().all(|(i, a)| fits[i + 1..].iter().all(|b| a.agrees_with(b, 2.0)))
    })
}

/// Runs `base` once per `h_values` entry (strictly increasing) with seed
/// `base.seed + index`, on `jobs` worker threads. Laminar drives are listed
/// but not run.
pub fn bandwidth_sweep(h_values: &[u64], base: &ExperimentConfig, jobs: usize) -> Result<SweepReport> {
    if h_values.is_empty() {
        return Err(Error::Config("sweep needs at least one drive value".into()));
    }
    if h_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sweep drive values must be strictly increasing".into()));
    }
    if h_values.contains(&0) {
        return Err(Error::Config("sweep drive values must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        h_values
            .par_iter()
            .enumerate()
            .map(|(i, &h)| run_row(base, h, base.seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepReport { monotone: monotone(&rows), gamma_stable: gamma_stable(&rows), rows })
}
