//! The `soclab` command line.

mod plot;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub use plot::{emit_plot_data, Curve, PlotFiles};

use crate::error::Error;
use crate::lab::{
    bandwidth_sweep, figure1_configs, figure1_from_runs, figure2_configs, figure2_from_runs, run_experiment,
    ExperimentConfig, RunOutput, TransientPolicy, FIGURE_SCALE_FACTOR,
};
use crate::pi::{compute_pi_groups, VariableTable};
use crate::sandpile::stream;
use crate::stats::{
    build_histogram, find_power_law_window, fit_power_law_truncated, rescale_and_compare, CollapseReport, LogHistogram,
    SMinPolicy, WindowOptions, DEFAULT_BASE,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Unknown flag, missing argument or unparsable value.
    pub const USAGE: i32 = 2;
    /// Malformed config or table file, or parameters out of range.
    pub const CONFIG: i32 = 3;
    /// Options that cannot be combined.
    pub const CONFLICT: i32 = 4;
    /// Run directory already holds files and `--force` was not given.
    pub const EXISTS: i32 = 5;
    pub const IO: i32 = 6;
    /// Fit, window detection or collapse failed.
    pub const ANALYSIS: i32 = 7;
    /// Transient did not settle or relaxation hit the sweep ceiling.
    pub const SIMULATION: i32 = 8;
}

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "SOCLAB_OUT_ROOT";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.cfg";

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  2  usage error (unknown flag, bad value)
  3  malformed config or table file
  4  conflicting options
  5  run directory exists (use --force)
  6  I/O error
  7  analysis failed (fit, window, collapse)
  8  simulation failed (transient not converged)

Errors are printed as one line: `soclab: error[<kind>]: <message>`.";

#[derive(Debug, Parser)]
#[command(name = "soclab", version, about = "Sandpile avalanche laboratory", after_help = EXIT_CODES_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Run directory [default: <out-root>/<subcommand>]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Root for default run directories
    #[arg(long, env = OUT_ROOT_ENV, default_value = "runs")]
    pub out_root: PathBuf,
    /// Write into an existing run directory
    #[arg(long)]
    pub force: bool,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment from a config file
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override target_avalanches
        #[arg(long)]
        avalanches: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// One run per drive value, with the bandwidth trend
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grains per event, increasing
        #[arg(long = "h", value_delimiter = ',', default_value = "4,16,64,256")]
        h_values: Vec<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        avalanches: Option<u64>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a discrete power law to avalanche sizes
    Fit {
        /// Avalanche stream CSV, or one size per line
        input: PathBuf,
        /// Fixed lower cutoff [default: KS-minimizing]
        #[arg(long, conflicts_with = "window")]
        s_min: Option<u64>,
        #[arg(long, conflicts_with = "window")]
        s_max: Option<u64>,
        /// Fit inside the detected power-law window
        #[arg(long)]
        window: bool,
    },
    /// Compare two histograms after rescaling S → S/A
    Collapse {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = FIGURE_SCALE_FACTOR)]
        scale: f64,
        /// Restrict to log10 S in [LO, HI]
        #[arg(long, value_delimiter = ',', num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Dimensionless groups of a variable table
    PiGroups {
        #[arg(long)]
        table: PathBuf,
    },
    /// Side 100 pile under 4 and 16 grains per event
    Figure1 {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        avalanches: u64,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// (side 100, 4 grains) against (side 400, 16 grains)
    Figure2 {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        avalanches: u64,
        /// Avalanches for the side 400 run [default: --avalanches]
        #[arg(long)]
        test_avalanches: Option<u64>,
        /// Steady-state window of the side 400 run [default: 10·side²]
        #[arg(long)]
        transient_window: Option<u64>,
        /// Bound on |slope| / mean of stored grains per timestep for the side 400 run
        #[arg(long, default_value_t = TransientPolicy::default().slope_tol)]
        transient_slope_tol: f64,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Sweep { .. } => "sweep",
            Command::Fit { .. } => "fit",
            Command::Collapse { .. } => "collapse",
            Command::PiGroups { .. } => "pi-groups",
            Command::Figure1 { .. } => "figure1",
            Command::Figure2 { .. } => "figure2",
        }
    }
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        CliError { code, kind, message: message.into() }
    }

    /// The single error line printed to stderr.
    pub fn line(&self) -> String {
        let msg: Vec<&str> = self.message.split_whitespace().collect();
        format!("soclab: error[{}]: {}", self.kind, msg.join(" "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Config(_) | Error::Domain(_) | Error::Table { .. } | Error::NoVariables => (exit::CONFIG, "config"),
            Error::Io { .. } => (exit::IO, "io"),
            Error::NoAvalanches | Error::TooFewTailSamples { .. } | Error::NoDynamicRange | Error::NoOverlap => {
                (exit::ANALYSIS, "analysis")
            }
            Error::TransientNotConverged { .. } | Error::SweepLimit(_) => (exit::SIMULATION, "simulation"),
        };
        CliError::new(code, kind, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Results go to `out`, progress and errors to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    exit::OK
                }
                kind => {
                    let code = if kind == ErrorKind::ArgumentConflict { exit::CONFLICT } else { exit::USAGE };
                    let text = e.render().to_string();
                    let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                    let e = CliError::new(code, if code == exit::CONFLICT { "conflict" } else { "usage" }, first);
                    let _ = writeln!(err, "{}", e.line());
                    code
                }
            };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, &argv.join(" "), out, err) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "{}", e.line());
            e.code
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    Error::io(path, e).into()
}

/// Resolves and creates the run directory, refusing a non-empty one without `--force`.
fn prepare_run_dir(output: &OutputArgs, command: &str) -> CliResult<PathBuf> {
    let dir = output.out.clone().unwrap_or_else(|| output.out_root.join(command));
    if dir.exists() {
        if !dir.is_dir() {
            return Err(CliError::new(exit::EXISTS, "exists", format!("{} exists and is not a directory", dir.display())));
        }
        let occupied = fs::read_dir(&dir).map_err(|e| io_err(&dir, e))?.next().is_some();
        if occupied && !output.force {
            return Err(CliError::new(
                exit::EXISTS,
                "exists",
                format!("run directory {} is not empty; pass --force to write into it", dir.display()),
            ));
        }
    }
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

struct Manifest {
    command: &'static str,
    argv: String,
    started: Instant,
    started_unix: u64,
    seeds: Vec<u64>,
    configs: Vec<(String, ExperimentConfig)>,
}

impl Manifest {
    fn new(command: &'static str, argv: &str) -> Self {
        Manifest {
            command,
            argv: argv.to_string(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            seeds: Vec::new(),
            configs: Vec::new(),
        }
    }

    /// Writes each config next to the manifest and the manifest itself.
    fn write(&self, dir: &Path) -> CliResult<()> {
        let mut s = String::from("# soclab run manifest\n");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "argv = {}", self.argv);
        let _ = writeln!(s, "soclab_version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "manifest_format = 1");
        let _ = writeln!(s, "platform = {}-{}", std::env::consts::ARCH, std::env::consts::OS);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds = {}", seeds.join(","));
        let _ = writeln!(s, "started_unix = {}", self.started_unix);
        let _ = writeln!(s, "wall_time_seconds = {:.3}", self.started.elapsed().as_secs_f64());
        for (file, config) in &self.configs {
            let path = dir.join(file);
            write_file(&path, &config.to_text())?;
            let _ = writeln!(s, "\n# ---- {file} ----");
            s.push_str(&config.to_text());
        }
        write_file(&dir.join(MANIFEST_FILE), &s)
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::corner_driven(100, 4, 1, 1_000_000)),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            ExperimentConfig::from_text(&text).map_err(|e| {
                let mut c = CliError::from(e);
                c.message = format!("{}: {}", p.display(), c.message);
                c
            })
        }
    }
}

fn apply_overrides(config: &mut ExperimentConfig, seed: Option<u64>, avalanches: Option<u64>) -> CliResult<()> {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(n) = avalanches {
        config.target_avalanches = n;
    }
    config.validate().map_err(Into::into)
}

fn check_jobs(jobs: usize) -> CliResult<()> {
    if jobs == 0 {
        return Err(CliError::new(exit::USAGE, "usage", "--jobs must be at least 1"));
    }
    Ok(())
}

fn run_pair(a: &ExperimentConfig, b: &ExperimentConfig, jobs: usize) -> CliResult<(RunOutput, RunOutput)> {
    let (ra, rb) = if jobs >= 2 {
        rayon::join(|| run_experiment(a), || run_experiment(b))
    } else {
        (run_experiment(a), run_experiment(b))
    };
    Ok((ra?, rb?))
}

fn collapse_text(name: &str, r: &std::result::Result<CollapseReport, String>) -> String {
    let mut s = format!("[{name}]\n");
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
    s
}

fn note_skipped(err: &mut dyn Write, files: &PlotFiles) {
    for label in &files.skipped {
        let _ = writeln!(err, "soclab: warning: curve {label} is empty; no plot data written");
    }
}

fn execute(command: Command, argv: &str, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let name = command.name();
    match command {
        Command::Simulate { config, seed, avalanches, output } => {
            let mut c = load_config(config.as_deref())?;
            apply_overrides(&mut c, seed, avalanches)?;
            let dir = prepare_run_dir(&output, name)?;
            let mut manifest = Manifest::new(name, argv);
            manifest.seeds.push(c.seed);
            manifest.configs.push((CONFIG_FILE.into(), c));
            let _ = writeln!(err, "soclab: simulating side {} with {} grains per event", c.side, c.drive.grains_per_event);
            let run = run_experiment(&c)?;
            run.write_to(&dir)?;
            let files = emit_plot_data(&dir.join("plot"), "distribution", &[Curve::raw("run", &run.histogram)], None)?;
            note_skipped(err, &files);
            manifest.write(&dir)?;
            let _ = write!(out, "{}", run.summary.to_text());
            Ok(())
        }
        Command::Sweep { config, h_values, seed, avalanches, jobs, output } => {
            check_jobs(jobs)?;
            let mut base = load_config(config.as_deref())?;
            apply_overrides(&mut base, seed, avalanches)?;
            let dir = prepare_run_dir(&output, name)?;
            let mut manifest = Manifest::new(name, argv);
            manifest.seeds = (0..h_values.len() as u64).map(|i| base.seed.wrapping_add(i)).collect();
            manifest.configs.push(("base.cfg".into(), base));
            let report = bandwidth_sweep(&h_values, &base, jobs)?;
            let labels: Vec<String> = report.rows.iter().map(|r| format!("h{}", r.h_dt)).collect();
            let mut curves = Vec::new();
            for (row, label) in report.rows.iter().zip(&labels) {
                if let Some(run) = &row.output {
                    run.write_to(&dir.join(label))?;
                    write_file(&dir.join(label).join(CONFIG_FILE), &run.summary.config.to_text())?;
                    curves.push(Curve::raw(label, &run.histogram));
                } else {
                    let _ = writeln!(err, "soclab: warning: h = {} is laminar; not run", row.h_dt);
                }
            }
            write_file(&dir.join("sweep.csv"), &report.to_text())?;
            if !curves.is_empty() {
                note_skipped(err, &emit_plot_data(&dir.join("plot"), "sweep", &curves, None)?);
            }
            manifest.write(&dir)?;
            let _ = write!(out, "{}", report.to_text());
            Ok(())
        }
        Command::Fit { input, s_min, s_max, window } => {
            let sizes = read_sizes(&input)?;
            let mut s = String::new();
            let fit = if window {
                let hist = build_histogram(&sizes, DEFAULT_BASE)?;
                let w = find_power_law_window(&sizes, &hist, &WindowOptions::default())?;
                let _ = writeln!(s, "window_s_lo = {}", w.s_lo);
                let _ = writeln!(s, "window_s_hi = {}", w.s_hi);
                let _ = writeln!(s, "bandwidth_decades = {}", w.bandwidth_decades());
                w.fit
            } else {
                let policy = s_min.map_or(SMinPolicy::KsMinimize, SMinPolicy::Fixed);
                fit_power_law_truncated(&sizes, policy, s_max)?
            };
            let _ = writeln!(s, "samples = {}", sizes.len());
            let _ = writeln!(s, "gamma = {}", fit.gamma);
            let _ = writeln!(s, "std_error = {}", fit.std_error);
            let _ = writeln!(s, "s_min = {}", fit.s_min);
            let _ = writeln!(s, "s_max = {}", fit.s_max);
            let _ = writeln!(s, "n_tail = {}", fit.n_tail);
            let _ = writeln!(s, "ks_distance = {}", fit.ks_distance);
            let _ = write!(out, "{s}");
            Ok(())
        }
        Command::Collapse { reference, test, scale, window, output } => {
            let window = match window.as_deref() {
                None => None,
                Some([lo, hi]) if lo < hi => Some((*lo, *hi)),
                Some(_) => return Err(CliError::new(exit::USAGE, "usage", "--window needs LO < HI")),
            };
            let r = read_histogram(&reference)?;
            let t = read_histogram(&test)?;
            let dir = prepare_run_dir(&output, name)?;
            let manifest = Manifest::new(name, argv);
            let rescaled = rescale_and_compare(&r, &t, scale, window).map_err(|e| e.to_string());
            let unscaled = rescale_and_compare(&r, &t, 1.0, window).map_err(|e| e.to_string());
            let mut s = String::from("# histogram collapse\n");
            let _ = writeln!(s, "reference = {}", reference.display());
            let _ = writeln!(s, "test = {}", test.display());
            s.push('\n');
            s.push_str(&collapse_text("rescaled", &rescaled));
            s.push('\n');
            s.push_str(&collapse_text("unscaled", &unscaled));
            write_file(&dir.join("collapse.txt"), &s)?;
            let plot = dir.join("plot");
            note_skipped(err, &emit_plot_data(&plot, "raw", &[Curve::raw("reference", &r), Curve::raw("test", &t)], None)?);
            let curves = [Curve::raw("reference", &r), Curve::rescaled("test", &t)];
            note_skipped(err, &emit_plot_data(&plot, "rescaled", &curves, Some(scale))?);
            manifest.write(&dir)?;
            let _ = write!(out, "{s}");
            rescaled.map(|_| ()).map_err(|e| CliError::new(exit::ANALYSIS, "analysis", e))
        }
        Command::PiGroups { table } => {
            let text = fs::read_to_string(&table).map_err(|e| io_err(&table, e))?;
            let t = VariableTable::parse(&text)?;
            for g in compute_pi_groups(&t)? {
                let _ = writeln!(out, "{g}");
            }
            Ok(())
        }
        Command::Figure1 { seed, avalanches, jobs, output } => {
            check_jobs(jobs)?;
            let (rc, tc) = figure1_configs(seed, avalanches);
            rc.validate()?;
            let dir = prepare_run_dir(&output, name)?;
            let mut manifest = Manifest::new(name, argv);
            manifest.seeds.push(seed);
            manifest.configs.push(("reference.cfg".into(), rc));
            manifest.configs.push(("test.cfg".into(), tc));
            let _ = writeln!(err, "soclab: running side 100 with 4 and 16 grains per event");
            let (r, t) = run_pair(&rc, &tc, jobs)?;
            let report = figure1_from_runs(r, t);
            report.reference.write_to(&dir.join("h4"))?;
            report.test.write_to(&dir.join("h16"))?;
            write_file(&dir.join("figure1.txt"), &report.to_text())?;
            let (rh, th) = (&report.reference.histogram, &report.test.histogram);
            let plot = dir.join("plot");
            note_skipped(err, &emit_plot_data(&plot, "raw", &[Curve::raw("h4", rh), Curve::raw("h16", th)], None)?);
            let curves = [Curve::raw("h4", rh), Curve::rescaled("h16", th)];
            note_skipped(err, &emit_plot_data(&plot, "rescaled", &curves, Some(FIGURE_SCALE_FACTOR))?);
            manifest.write(&dir)?;
            let _ = write!(out, "{}", report.to_text());
            Ok(())
        }
        Command::Figure2 { seed, avalanches, test_avalanches, transient_window, transient_slope_tol, jobs, output } => {
            check_jobs(jobs)?;
            let transient =
                TransientPolicy { window: transient_window, slope_tol: transient_slope_tol, ..TransientPolicy::default() };
            let (rc, tc) = figure2_configs(seed, avalanches, test_avalanches.unwrap_or(avalanches), transient);
            rc.validate()?;
            tc.validate()?;
            let dir = prepare_run_dir(&output, name)?;
            let mut manifest = Manifest::new(name, argv);
            manifest.seeds.push(seed);
            manifest.configs.push(("reference.cfg".into(), rc));
            manifest.configs.push(("test.cfg".into(), tc));
            let _ = writeln!(err, "soclab: running (side 100, 4 grains) and (side 400, 16 grains)");
            let (r, t) = run_pair(&rc, &tc, jobs)?;
            let report = figure2_from_runs(r, t);
            report.reference.write_to(&dir.join("L100_h4"))?;
            report.test.write_to(&dir.join("L400_h16"))?;
            write_file(&dir.join("figure2.txt"), &report.to_text())?;
            let (rh, th) = (&report.reference.histogram, &report.test.histogram);
            let plot = dir.join("plot");
            let raw = [Curve::raw("L100_h4", rh), Curve::raw("L400_h16", th)];
            note_skipped(err, &emit_plot_data(&plot, "raw", &raw, None)?);
            let curves = [Curve::raw("L100_h4", rh), Curve::rescaled("L400_h16", th)];
            note_skipped(err, &emit_plot_data(&plot, "rescaled", &curves, Some(FIGURE_SCALE_FACTOR))?);
            manifest.write(&dir)?;
            let _ = write!(out, "{}", report.to_text());
            Ok(())
        }
    }
}

/// Sizes from an avalanche stream CSV (zero sizes dropped) or from a file
/// with one integer per line.
fn read_sizes(path: &Path) -> CliResult<Vec<u64>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| io_err(path, e))?;
    let sizes: Vec<u64> = if first.trim() == stream::HEADER {
        let records = stream::read_records(first.as_bytes().chain(reader))?;
        records.into_iter().map(|r| r.size).filter(|&s| s > 0).collect()
    } else {
        let mut sizes = Vec::new();
        for (i, line) in std::iter::once(Ok(first)).chain(reader.lines()).enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let s = line.parse::<u64>().map_err(|_| {
                CliError::from(Error::Config(format!("{}: line {}: not a size: {line:?}", path.display(), i + 1)))
            })?;
            sizes.push(s);
        }
        sizes
    };
    Ok(sizes)
}

fn read_histogram(path: &Path) -> CliResult<LogHistogram> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    LogHistogram::read_csv(BufReader::new(file), DEFAULT_BASE).map_err(Into::into)
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
