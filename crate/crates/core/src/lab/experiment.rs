//! One simulation run: transient, measurement, analysis.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::ExperimentConfig;
use super::steady::detect_steady_state;
use crate::error::{Error, Result};
use crate::pi::{avalanche_relations, classify_drive_regime, DriveRegime, Rational, DEFAULT_REGIME_MARGIN};
use crate::sandpile::{stream, AvalancheRecord, Ledger, Simulation};
use crate::stats::{build_histogram, find_power_law_window, LogHistogram, PowerLawFit, PowerLawWindow};

pub const SUMMARY_FILE: &str = "summary.txt";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const STREAM_FILE: &str = "avalanches.csv";

/// Lattice dimension of the simulator.
pub const LATTICE_DIMENSION: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    /// Ledger at the end of the run.
    pub ledger: Ledger,
    /// Start of the first window judged stationary.
    pub steady_state_reached_at: u64,
    /// First timestep whose avalanches are measured: one window after
    /// `steady_state_reached_at`.
    pub measurement_start: u64,
    pub measurement_steps: u64,
    /// Grains in and out per timestep over the measurement window.
    pub eps_inj: f64,
    pub eps_diss: f64,
    pub regime: DriveRegime,
    /// Drive per node over the dissipation the flux balance demands.
    pub r_a_configured: f64,
    pub r_a_predicted: f64,
    /// Measured drive per node over measured dissipation.
    pub r_a_measured: Option<f64>,
    pub avalanches: u64,
    pub mean_size: f64,
    pub max_size: u64,
    pub window: Option<PowerLawWindow>,
    /// Why no power-law window was found.
    pub analysis_error: Option<String>,
}

impl RunSummary {
    pub fn flux_imbalance(&self) -> f64 {
        (self.eps_inj - self.eps_diss).abs() / self.eps_inj
    }

    pub fn fit(&self) -> Option<&PowerLawFit> {
        self.window.as_ref().map(|w| &w.fit)
    }

    /// Decades spanned by the power-law window; zero without one.
    pub fn bandwidth_decades(&self) -> f64 {
        self.window.map_or(0.0, |w| w.bandwidth_decades())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let l = &self.ledger;
        let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), |v| v.to_string());
        let _ = writeln!(s, "# run summary\n");
        s.push_str(&self.config.to_text());
        let _ = writeln!(s, "\n[ledger]");
        let _ = writeln!(s, "grains_in = {}", l.grains_in);
        let _ = writeln!(s, "grains_out = {}", l.grains_out);
        let _ = writeln!(s, "stored = {}", l.stored);
        let _ = writeln!(s, "timesteps = {}", l.timesteps);
        let _ = writeln!(s, "balanced = {}", l.is_balanced());
        let _ = writeln!(s, "\n[steady_state]");
        let _ = writeln!(s, "reached_at = {}", self.steady_state_reached_at);
        let _ = writeln!(s, "measurement_start = {}", self.measurement_start);
        let _ = writeln!(s, "measurement_steps = {}", self.measurement_steps);
        let _ = writeln!(s, "eps_inj = {}", self.eps_inj);
        let _ = writeln!(s, "eps_diss = {}", self.eps_diss);
        let _ = writeln!(s, "flux_imbalance = {}", self.flux_imbalance());
        let _ = writeln!(s, "\n[control]");
        let _ = writeln!(s, "regime = {}", self.regime.as_str());
        let _ = writeln!(s, "r_a_configured = {}", self.r_a_configured);
        let _ = writeln!(s, "r_a_predicted = {}", self.r_a_predicted);
        let _ = writeln!(s, "r_a_measured = {}", opt(self.r_a_measured));
        let _ = writeln!(s, "\n[avalanches]");
        let _ = writeln!(s, "count = {}", self.avalanches);
        let _ = writeln!(s, "mean_size = {}", self.mean_size);
        let _ = writeln!(s, "max_size = {}", self.max_size);
        let _ = writeln!(s, "histogram = {HISTOGRAM_FILE}");
        let _ = writeln!(s, "stream = {STREAM_FILE}");
        let _ = writeln!(s, "\n[fit]");
        match (&self.window, &self.analysis_error) {
            (Some(w), _) => {
                let _ = writeln!(s, "gamma = {}", w.fit.gamma);
                let _ = writeln!(s, "std_error = {}", w.fit.std_error);
                let _ = writeln!(s, "s_min = {}", w.fit.s_min);
                let _ = writeln!(s, "s_max = {}", w.fit.s_max);
                let _ = writeln!(s, "ks_distance = {}", w.fit.ks_distance);
                let _ = writeln!(s, "n_tail = {}", w.fit.n_tail);
                let _ = writeln!(s, "bandwidth_decades = {}", w.bandwidth_decades());
            }
            (None, err) => {
                let _ = writeln!(s, "error = {}", err.as_deref().unwrap_or("unknown"));
                let _ = writeln!(s, "bandwidth_decades = 0");
            }
        }
        s
    }
}

/// A finished run: summary, measured avalanches and their histogram.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<AvalancheRecord>,
    pub histogram: LogHistogram,
}

impl RunOutput {
    pub fn sizes(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.size).collect()
    }

    /// Writes the summary, histogram and avalanche stream into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(SUMMARY_FILE);
        fs::write(&path, self.summary.to_text()).map_err(|e| Error::io(&path, e))?;
        let path = dir.join(HISTOGRAM_FILE);
        let mut buf = Vec::new();
        self.histogram.write_csv(&mut buf).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        let path = dir.join(STREAM_FILE);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        stream::write_records(&mut w, &self.records).map_err(|e| Error::io(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Runs until the stored-grain series settles, skips one further window,
/// then collects `target_avalanches` avalanches (size ≥ 1) and analyses them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let window = config.transient_window() as usize;
    let max_steps = config.transient_max_steps() as usize;
    let mut sim = Simulation::new(config.new_lattice()?, config.drive, config.seed)?;

    // ledgers[k] is the ledger after k timesteps
    let mut ledgers = vec![Ledger::default()];
    let mut stored = Vec::new();
    let mut early = Vec::new();
    let steady_at = loop {
        if let Some(r) = sim.step()? {
            if r.size > 0 {
                early.push(r);
            }
        }
        let l = *sim.lattice().ledger();
        ledgers.push(l);
        stored.push(l.stored);
        let n = stored.len();
        if n >= 2 * window && (n - 2 * window) % window == 0 {
            match detect_steady_state(&stored, window, config.transient.slope_tol) {
                Ok(t) => break t,
                Err(e @ Error::TransientNotConverged { .. }) if n >= max_steps => return Err(e),
                Err(Error::TransientNotConverged { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    };
    let start = steady_at + window;
    let at_start = ledgers[start];
    drop(ledgers);
    drop(stored);

    let target = config.target_avalanches as usize;
    let mut records: Vec<AvalancheRecord> = early.into_iter().filter(|r| r.timestep >= start as u64).collect();
    records.truncate(target);
    while records.len() < target {
        if let Some(r) = sim.step()? {
            if r.size > 0 {
                records.push(r);
            }
        }
    }
    let end = *sim.lattice().ledger();
    let steps = end.timesteps - start as u64;
    let eps_inj = (end.grains_in - at_start.grains_in) as f64 / steps as f64;
    let eps_diss = (end.grains_out - at_start.grains_out) as f64 / steps as f64;

    let side = config.side as f64;
    let h_dt = config.drive.grains_per_event as f64;
    let mean_drive = h_dt * config.drive.event_probability;
    let cells = side * side;
    let relations = avalanche_relations(
        mean_drive / cells,
        mean_drive,
        side,
        LATTICE_DIMENSION,
        Rational::from_integer(LATTICE_DIMENSION as i128),
    )?;
    let regime = classify_drive_regime(h_dt, config.threshold as f64, side, LATTICE_DIMENSION, DEFAULT_REGIME_MARGIN)?;
    let r_a_measured = (eps_diss > 0.0).then(|| eps_inj / cells / eps_diss);

    let sizes: Vec<u64> = records.iter().map(|r| r.size).collect();
    let histogram = build_histogram(&sizes, config.analysis.histogram_base)?;
    let (window_fit, analysis_error) = match find_power_law_window(&sizes, &histogram, &config.analysis.window) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = RunSummary {
        config: *config,
        ledger: end,
        steady_state_reached_at: steady_at as u64,
        measurement_start: start as u64,
        measurement_steps: steps,
        eps_inj,
        eps_diss,
        regime,
        r_a_configured: relations.r_a,
        r_a_predicted: relations.r_a_predicted,
        r_a_measured,
        avalanches: sizes.len() as u64,
        mean_size: sizes.iter().map(|&s| s as f64).sum::<f64>() / sizes.len() as f64,
        max_size: sizes.iter().copied().max().unwrap_or(0),
        window: window_fit,
        analysis_error,
    };
    Ok(RunOutput { summary, records, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandpile::Boundaries;

    fn small(seed: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::corner_driven(12, 4, seed, 2_000);
        c.transient.window = Some(500);
        c
    }

    #[test]
    fn small_run_balances_and_records() {
        let out = run_experiment(&small(1)).unwrap();
        let s = &out.summary;
        assert!(s.ledger.is_balanced());
        assert_eq!(out.records.len(), 2_000);
        assert!(out.records.iter().all(|r| r.size > 0 && r.timestep >= s.measurement_start));
        assert_eq!(s.measurement_start, s.steady_state_reached_at + 500);
        assert_eq!(s.eps_inj, 4.0);
        assert!((s.r_a_configured - 1.0 / 144.0).abs() < 1e-15);
        assert_eq!(s.r_a_configured, s.r_a_predicted);
        assert_eq!(out.histogram.total, 2_000);
    }

    #[test]
    fn same_seed_same_summary() {
        let mut c = small(5);
        c.drive.site_policy = crate::sandpile::SitePolicy::UniformRandom;
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.summary.to_text(), b.summary.to_text());
        assert_eq!(a.records, b.records);
        c.seed = 6;
        let d = run_experiment(&c).unwrap();
        assert_ne!(a.records, d.records);
    }

    #[test]
    fn tiny_open_lattice_completes() {
        let mut c = ExperimentConfig::corner_driven(2, 1, 3, 1_000);
        c.boundaries = Boundaries::all_open();
        // 10·L² = 40 steps is too short to average out the height noise
        c.transient.window = Some(2_000);
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.summary.avalanches, 1_000);
        assert!(out.summary.ledger.is_balanced());
        assert!(out.summary.window.is_none());
        assert!(out.summary.to_text().contains("error = no dynamic range"));
    }

    #[test]
    fn unsettled_transient_is_reported() {
        let mut c = small(1);
        c.transient.slope_tol = 1e-30;
        c.transient.max_steps = Some(1_000);
        assert!(matches!(run_experiment(&c), Err(Error::TransientNotConverged { .. })));
    }
}
