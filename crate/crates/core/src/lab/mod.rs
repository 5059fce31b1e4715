//! Experiments: steady-state detection, single runs, the two figure
//! comparisons and the drive sweep.

mod config;
mod experiment;
mod figures;
mod steady;
mod sweep;

pub use config::{AnalysisOptions, ExperimentConfig, TransientPolicy, MIN_TARGET_AVALANCHES};
pub use experiment::{
    run_experiment, RunOutput, RunSummary, HISTOGRAM_FILE, LATTICE_DIMENSION, STREAM_FILE, SUMMARY_FILE,
};
pub use figures::{
    figure1_configs, figure1_experiment, figure1_from_runs, figure2_configs, figure2_experiment, figure2_from_runs,
    Figure1Report, Figure2Report, Outcome, FIGURE_SCALE_FACTOR, SMALL_AVALANCHE_BOUND,
};
pub use steady::detect_steady_state;
pub use sweep::{bandwidth_sweep, SweepReport, SweepRow, BANDWIDTH_SLACK};
