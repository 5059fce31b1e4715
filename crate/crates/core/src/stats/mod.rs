//! Avalanche-size statistics: log-binned densities, power-law fits,
//! power-law windows and rescaling collapses.

mod collapse;
mod fit;
mod histogram;
mod window;

pub use collapse::{rescale_and_compare, CollapseReport};
pub use fit::{fit_power_law, fit_power_law_truncated, power_sum, PowerLawFit, SMinPolicy, MIN_TAIL};
pub use histogram::{build_histogram, LogHistogram, DEFAULT_BASE};
pub use window::{find_power_law_window, joint_log_range, local_slopes, PowerLawWindow, WindowOptions};
