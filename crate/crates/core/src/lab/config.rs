//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! [lattice]
//! side = 100
//! threshold = 4
//! north = closed
//! south = open
//! east = open
//! west = closed
//!
//! [drive]
//! grains_per_event = 4
//! site_policy = corner
//! event_probability = 1
//!
//! [run]
//! seed = 1
//! target_avalanches = 1000000
//!
//! [transient]
//! window = auto
//! slope_tol = 0.0001
//! max_steps = auto
//!
//! [analysis]
//! histogram_base = 1.2589254117941673
//! window_slope_tol = 0.15
//! window_min_count = 100
//! window_stencil = 5
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sandpile::{Boundaries, Boundary, DriveSpec, Lattice, SitePolicy};
use crate::stats::{WindowOptions, DEFAULT_BASE};

/// Statistics-producing runs need at least this many avalanches.
pub const MIN_TARGET_AVALANCHES: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientPolicy {
    /// Steady-state window in timesteps; `None` means `10 · side²`.
    pub window: Option<u64>,
    /// Bound on `|slope| / mean` of `stored` over one window.
    pub slope_tol: f64,
    /// Give up after this many timesteps; `None` means `100 · window`.
    pub max_steps: Option<u64>,
}

impl Default for TransientPolicy {
    fn default() -> Self {
        TransientPolicy { window: None, slope_tol: 1e-4, max_steps: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub histogram_base: f64,
    pub window: WindowOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { histogram_base: DEFAULT_BASE, window: WindowOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub side: usize,
    pub threshold: u64,
    pub boundaries: Boundaries,
    pub drive: DriveSpec,
    pub seed: u64,
    pub target_avalanches: u64,
    pub transient: TransientPolicy,
    pub analysis: AnalysisOptions,
}

impl ExperimentConfig {
    /// Corner-driven `side × side` pile, threshold 4, north and west closed.
    pub fn corner_driven(side: usize, grains_per_event: u64, seed: u64, target_avalanches: u64) -> Self {
        ExperimentConfig {
            side,
            threshold: 4,
            boundaries: Boundaries::corner_closed(),
            drive: DriveSpec::corner(grains_per_event),
            seed,
            target_avalanches,
            transient: TransientPolicy::default(),
            analysis: AnalysisOptions::default(),
        }
    }

    pub fn transient_window(&self) -> u64 {
        self.transient.window.unwrap_or(10 * (self.side * self.side) as u64)
    }

    pub fn transient_max_steps(&self) -> u64 {
        self.transient.max_steps.unwrap_or(100 * self.transient_window())
    }

    pub fn new_lattice(&self) -> Result<Lattice> {
        Lattice::new(self.side, self.threshold, self.boundaries)
    }

    pub fn validate(&self) -> Result<()> {
        let lattice = self.new_lattice()?;
        self.drive.validate(&lattice)?;
        if self.target_avalanches < MIN_TARGET_AVALANCHES {
            return Err(Error::Config(format!(
                "target_avalanches must be at least {MIN_TARGET_AVALANCHES}, got {}",
                self.target_avalanches
            )));
        }
        if self.transient_window() < 2 {
            return Err(Error::Config("transient window must be at least 2".into()));
        }
        if !(self.transient.slope_tol > 0.0) {
            return Err(Error::Config("transient slope_tol must be positive".into()));
        }
        if self.transient_max_steps() < 2 * self.transient_window() {
            return Err(Error::Config("transient max_steps must cover two windows".into()));
        }
        if !(self.analysis.histogram_base > 1.0 && self.analysis.histogram_base.is_finite()) {
            return Err(Error::Config("histogram_base must exceed 1".into()));
        }
        let w = &self.analysis.window;
        if w.stencil < 3 || w.stencil % 2 == 0 {
            return Err(Error::Config("window_stencil must be odd and at least 3".into()));
        }
        if !(w.slope_tol > 0.0) {
            return Err(Error::Config("window_slope_tol must be positive".into()));
        }
        Ok(())
    }

    /// Serializes every field; `from_text` reads it back unchanged.
    pub fn to_text(&self) -> String {
        let auto = |v: Option<u64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        let b = &self.boundaries;
        let mut s = String::new();
        let _ = writeln!(s, "[lattice]");
        let _ = writeln!(s, "side = {}", self.side);
        let _ = writeln!(s, "threshold = {}", self.threshold);
        let _ = writeln!(s, "north = {}", b.north.as_str());
        let _ = writeln!(s, "south = {}", b.south.as_str());
        let _ = writeln!(s, "east = {}", b.east.as_str());
        let _ = writeln!(s, "west = {}", b.west.as_str());
        let _ = writeln!(s, "\n[drive]");
        let _ = writeln!(s, "grains_per_event = {}", self.drive.grains_per_event);
        let _ = writeln!(s, "site_policy = {}", self.drive.site_policy.name());
        let _ = writeln!(s, "event_probability = {}", self.drive.event_probability);
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "target_avalanches = {}", self.target_avalanches);
        let _ = writeln!(s, "\n[transient]");
        let _ = writeln!(s, "window = {}", auto(self.transient.window));
        let _ = writeln!(s, "slope_tol = {}", self.transient.slope_tol);
        let _ = writeln!(s, "max_steps = {}", auto(self.transient.max_steps));
        let _ = writeln!(s, "\n[analysis]");
        let _ = writeln!(s, "histogram_base = {}", self.analysis.histogram_base);
        let _ = writeln!(s, "window_slope_tol = {}", self.analysis.window.slope_tol);
        let _ = writeln!(s, "window_min_count = {}", self.analysis.window.min_count);
        let _ = writeln!(s, "window_stencil = {}", self.analysis.window.stencil);
        s
    }

    /// Parses a config file. Missing keys keep the defaults of a 100 × 100
    /// corner-driven pile with 4 grains per event; unknown keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let entries = parse_sections(text)?;
        let mut c = ExperimentConfig::corner_driven(100, 4, 1, 1_000_000);
        for ((section, key), (line, value)) in &entries {
            let bad = |what: &str| Error::Config(format!("line {line}: bad {what} {value:?} for {section}.{key}"));
            let int = || value.parse::<u64>().map_err(|_| bad("integer"));
            let real = || value.parse::<f64>().map_err(|_| bad("number"));
            let side = || Boundary::parse(value).ok_or_else(|| bad("boundary"));
            let auto = || -> Result<Option<u64>> {
                if value == "auto" {
                    Ok(None)
                } else {
                    int().map(Some)
                }
            };
            match (section.as_str(), key.as_str()) {
                ("lattice", "side") => c.side = int()? as usize,
                ("lattice", "threshold") => c.threshold = int()?,
                ("lattice", "north") => c.boundaries.north = side()?,
                ("lattice", "south") => c.boundaries.south = side()?,
                ("lattice", "east") => c.boundaries.east = side()?,
                ("lattice", "west") => c.boundaries.west = side()?,
                ("drive", "grains_per_event") => c.drive.grains_per_event = int()?,
                ("drive", "site_policy") => {
                    c.drive.site_policy = SitePolicy::parse(value).ok_or_else(|| bad("site policy"))?
                }
                ("drive", "event_probability") => c.drive.event_probability = real()?,
                ("run", "seed") => c.seed = int()?,
                ("run", "target_avalanches") => c.target_avalanches = int()?,
                ("transient", "window") => c.transient.window = auto()?,
                ("transient", "slope_tol") => c.transient.slope_tol = real()?,
                ("transient", "max_steps") => c.transient.max_steps = auto()?,
                ("analysis", "histogram_base") => c.analysis.histogram_base = real()?,
                ("analysis", "window_slope_tol") => c.analysis.window.slope_tol = real()?,
                ("analysis", "window_min_count") => c.analysis.window.min_count = int()?,
                ("analysis", "window_stencil") => c.analysis.window.stencil = int()? as usize,
                _ => return Err(Error::Config(format!("line {line}: unknown key {section}.{key}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }
}

type Entries = BTreeMap<(String, String), (usize, String)>;

fn parse_sections(text: &str) -> Result<Entries> {
    let mut out = Entries::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {line_no}: expected `key = value`")));
        };
        if section.is_empty() {
            return Err(Error::Config(format!("line {line_no}: key outside any section")));
        }
        let k = (section.clone(), key.trim().to_string());
        if out.contains_key(&k) {
            return Err(Error::Config(format!("line {line_no}: duplicate key {}.{}", k.0, k.1)));
        }
        out.insert(k, (line_no, value.trim().to_string()));
    }
    Ok(out)
}
