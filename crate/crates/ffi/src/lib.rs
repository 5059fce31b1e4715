//! C ABI over `soclab`.
//!
//! Every function returns a [`SoclabStatus`]; on failure the message is kept
//! per thread and read with [`soclab_last_error_message`]. Handles are opaque
//! and owned by the caller until passed to their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use soclab::pi::{
    avalanche_relations, classify_drive_regime, compute_pi_groups, k41_relations, DriveRegime, Rational,
    VariableTable,
};
use soclab::sandpile::{AvalancheRecord, Boundaries, Boundary, Cell, DriveSpec, Lattice, Ledger, Simulation, SitePolicy};
use soclab::stats::{fit_power_law_truncated, SMinPolicy};
use soclab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoclabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Analysis = 5,
    Simulation = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoclabBoundary {
    Open = 0,
    Closed = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoclabBoundaries {
    pub north: SoclabBoundary,
    pub east: SoclabBoundary,
    pub south: SoclabBoundary,
    pub west: SoclabBoundary,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoclabSitePolicy {
    Corner = 0,
    TopRegion = 1,
    Uniform = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoclabDrive {
    pub grains_per_event: u64,
    pub site_policy: SoclabSitePolicy,
    /// Block size for `TOP_REGION`; ignored otherwise.
    pub extent: usize,
    pub event_probability: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SoclabLedger {
    pub grains_in: u64,
    pub grains_out: u64,
    pub stored: u64,
    pub timesteps: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SoclabAvalanche {
    pub size: u64,
    pub area: u64,
    pub duration: u64,
    pub dissipated: u64,
    /// False when the avalanche had no driven cell.
    pub has_trigger: bool,
    pub trigger_row: usize,
    pub trigger_col: usize,
    pub timestep: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SoclabFit {
    pub gamma: f64,
    pub std_error: f64,
    pub s_min: u64,
    pub s_max: u64,
    pub n_tail: u64,
    pub ks_distance: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SoclabK41 {
    pub reynolds: f64,
    pub eta: f64,
    pub l0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SoclabAvalancheRelations {
    pub r_a: f64,
    pub r_a_predicted: f64,
    pub beta_n_numer: i64,
    pub beta_n_denom: i64,
    pub n_estimate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoclabRegime {
    Sdidt = 0,
    Intermediate = 1,
    Laminar = 2,
}

/// Opaque lattice handle.
pub struct SoclabLattice(Lattice);

/// Opaque simulation handle: a lattice with its drive and RNG.
pub struct SoclabSimulation(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SoclabStatus, msg: impl Into<String>) -> SoclabStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SoclabStatus {
    let status = match &e {
        Error::Config(_) | Error::Table { .. } | Error::NoVariables => SoclabStatus::Config,
        Error::Domain(_) => SoclabStatus::Domain,
        Error::NoAvalanches | Error::TooFewTailSamples { .. } | Error::NoDynamicRange | Error::NoOverlap => {
            SoclabStatus::Analysis
        }
        Error::TransientNotConverged { .. } | Error::SweepLimit(_) => SoclabStatus::Simulation,
        Error::Io { .. } => SoclabStatus::Io,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `PANIC`.
fn guard(f: impl FnOnce() -> SoclabStatus) -> SoclabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SoclabStatus::Panic, msg)
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SoclabStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

impl From<SoclabBoundary> for Boundary {
    fn from(b: SoclabBoundary) -> Self {
        match b {
            SoclabBoundary::Open => Boundary::Open,
            SoclabBoundary::Closed => Boundary::Closed,
        }
    }
}

impl From<SoclabBoundaries> for Boundaries {
    fn from(b: SoclabBoundaries) -> Self {
        Boundaries { north: b.north.into(), south: b.south.into(), east: b.east.into(), west: b.west.into() }
    }
}

impl From<&Ledger> for SoclabLedger {
    fn from(l: &Ledger) -> Self {
        SoclabLedger { grains_in: l.grains_in, grains_out: l.grains_out, stored: l.stored, timesteps: l.timesteps }
    }
}

impl From<AvalancheRecord> for SoclabAvalanche {
    fn from(r: AvalancheRecord) -> Self {
        let (has_trigger, row, col) = r.trigger.map_or((false, 0, 0), |c| (true, c.row, c.col));
        SoclabAvalanche {
            size: r.size,
            area: r.area,
            duration: r.duration,
            dissipated: r.dissipated,
            has_trigger,
            trigger_row: row,
            trigger_col: col,
            timestep: r.timestep,
        }
    }
}

fn drive_spec(d: &SoclabDrive) -> DriveSpec {
    let site_policy = match d.site_policy {
        SoclabSitePolicy::Corner => SitePolicy::CornerCell,
        SoclabSitePolicy::TopRegion => SitePolicy::TopRegion { extent: d.extent },
        SoclabSitePolicy::Uniform => SitePolicy::UniformRandom,
    };
    DriveSpec { grains_per_event: d.grains_per_event, site_policy, event_probability: d.event_probability }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn soclab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn soclab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a `side × side` lattice with all heights zero.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_new(
    side: usize,
    threshold: u64,
    boundaries: SoclabBoundaries,
    out: *mut *mut SoclabLattice,
) -> SoclabStatus {
    non_null!(out);
    guard(|| match Lattice::new(side, threshold, boundaries.into()) {
        Ok(l) => {
            *out = Box::into_raw(Box::new(SoclabLattice(l)));
            SoclabStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// # Safety
/// `lattice` must come from [`soclab_lattice_new`] and not be freed yet; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_free(lattice: *mut SoclabLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

fn check_cell(l: &Lattice, row: usize, col: usize) -> Result<Cell, SoclabStatus> {
    if row >= l.side() || col >= l.side() {
        return Err(fail(SoclabStatus::InvalidArgument, format!("cell ({row}, {col}) outside side {}", l.side())));
    }
    Ok(Cell::new(row, col))
}

/// Overwrites one height; the ledger books the difference.
///
/// # Safety
/// `lattice` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_set_height(
    lattice: *mut SoclabLattice,
    row: usize,
    col: usize,
    height: u64,
) -> SoclabStatus {
    non_null!(lattice);
    let l = &mut (*lattice).0;
    guard(|| match check_cell(l, row, col) {
        Ok(c) => {
            l.set_height(c, height);
            SoclabStatus::Ok
        }
        Err(s) => s,
    })
}

/// Adds grains from outside without relaxing.
///
/// # Safety
/// `lattice` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_add_grains(
    lattice: *mut SoclabLattice,
    row: usize,
    col: usize,
    grains: u64,
) -> SoclabStatus {
    non_null!(lattice);
    let l = &mut (*lattice).0;
    guard(|| match check_cell(l, row, col) {
        Ok(c) => {
            l.add_grains(c, grains);
            SoclabStatus::Ok
        }
        Err(s) => s,
    })
}

/// # Safety
/// `lattice` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_height(
    lattice: *const SoclabLattice,
    row: usize,
    col: usize,
    out: *mut u64,
) -> SoclabStatus {
    non_null!(lattice, out);
    let l = &(*lattice).0;
    match check_cell(l, row, col) {
        Ok(c) => {
            *out = l.height(c);
            SoclabStatus::Ok
        }
        Err(s) => s,
    }
}

/// Copies the row-major height field into `heights`, which holds `len` values.
///
/// # Safety
/// `lattice` must be a live handle and `heights` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_heights(
    lattice: *const SoclabLattice,
    heights: *mut u64,
    len: usize,
) -> SoclabStatus {
    non_null!(lattice, heights);
    let h = (*lattice).0.heights();
    if len != h.len() {
        return fail(SoclabStatus::InvalidArgument, format!("buffer holds {len} values, lattice has {}", h.len()));
    }
    ptr::copy_nonoverlapping(h.as_ptr(), heights, len);
    SoclabStatus::Ok
}

/// Topples until every height is below threshold.
///
/// # Safety
/// `lattice` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_relax(lattice: *mut SoclabLattice, out: *mut SoclabAvalanche) -> SoclabStatus {
    non_null!(lattice, out);
    let l = &mut (*lattice).0;
    guard(|| match l.relax() {
        Ok(r) => {
            *out = r.into();
            SoclabStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// # Safety
/// `lattice` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_lattice_ledger(lattice: *const SoclabLattice, out: *mut SoclabLedger) -> SoclabStatus {
    non_null!(lattice, out);
    *out = (*lattice).0.ledger().into();
    SoclabStatus::Ok
}

/// Creates a driven simulation on a fresh lattice.
///
/// # Safety
/// `drive` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_simulation_new(
    side: usize,
    threshold: u64,
    boundaries: SoclabBoundaries,
    drive: *const SoclabDrive,
    seed: u64,
    out: *mut *mut SoclabSimulation,
) -> SoclabStatus {
    non_null!(drive, out);
    let spec = drive_spec(&*drive);
    guard(|| {
        let sim = Lattice::new(side, threshold, boundaries.into()).and_then(|l| Simulation::new(l, spec, seed));
        match sim {
            Ok(s) => {
                *out = Box::into_raw(Box::new(SoclabSimulation(s)));
                SoclabStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sim` must come from [`soclab_simulation_new`] and not be freed yet; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn soclab_simulation_free(sim: *mut SoclabSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// One timestep: drive, relax, advance the clock. `*had_event` is false
/// when no grains were added, in which case `out` is left untouched.
///
/// # Safety
/// `sim` must be a live handle; `out` and `had_event` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_simulation_step(
    sim: *mut SoclabSimulation,
    out: *mut SoclabAvalanche,
    had_event: *mut bool,
) -> SoclabStatus {
    non_null!(sim, out, had_event);
    let s = &mut (*sim).0;
    guard(|| match s.step() {
        Ok(Some(r)) => {
            *out = r.into();
            *had_event = true;
            SoclabStatus::Ok
        }
        Ok(None) => {
            *had_event = false;
            SoclabStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_simulation_ledger(sim: *const SoclabSimulation, out: *mut SoclabLedger) -> SoclabStatus {
    non_null!(sim, out);
    *out = (*sim).0.lattice().ledger().into();
    SoclabStatus::Ok
}

/// Discrete power-law MLE on `[s_min, s_max]`. `s_min = 0` picks the cutoff
/// by KS minimization; `s_max = 0` means the largest sample.
///
/// # Safety
/// `sizes` must hold `len` readable values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_fit_power_law(
    sizes: *const u64,
    len: usize,
    s_min: u64,
    s_max: u64,
    out: *mut SoclabFit,
) -> SoclabStatus {
    non_null!(sizes, out);
    let data = std::slice::from_raw_parts(sizes, len);
    let policy = if s_min == 0 { SMinPolicy::KsMinimize } else { SMinPolicy::Fixed(s_min) };
    let cap = (s_max != 0).then_some(s_max);
    guard(|| match fit_power_law_truncated(data, policy, cap) {
        Ok(f) => {
            *out = SoclabFit {
                gamma: f.gamma,
                std_error: f.std_error,
                s_min: f.s_min,
                s_max: f.s_max,
                n_tail: f.n_tail,
                ks_distance: f.ks_distance,
            };
            SoclabStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// Dimensionless groups of a variable table given in the text table format.
/// `*out` receives one group per line; release it with [`soclab_string_free`].
///
/// # Safety
/// `table` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_pi_groups(table: *const c_char, out: *mut *mut c_char) -> SoclabStatus {
    non_null!(table, out);
    let Ok(text) = CStr::from_ptr(table).to_str() else {
        return fail(SoclabStatus::InvalidArgument, "table is not UTF-8");
    };
    guard(|| match VariableTable::parse(text).and_then(|t| compute_pi_groups(&t)) {
        Ok(groups) => {
            let lines: Vec<String> = groups.iter().map(|g| g.to_string()).collect();
            match CString::new(lines.join("\n")) {
                Ok(c) => {
                    *out = c.into_raw();
                    SoclabStatus::Ok
                }
                Err(_) => fail(SoclabStatus::InvalidArgument, "group text contains NUL"),
            }
        }
        Err(e) => from_error(e),
    })
}

/// # Safety
/// `s` must come from this library and not be freed yet; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn soclab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_k41_relations(u: f64, l0: f64, nu: f64, out: *mut SoclabK41) -> SoclabStatus {
    non_null!(out);
    match k41_relations(u, l0, nu) {
        Ok(k) => {
            *out = SoclabK41 { reynolds: k.reynolds, eta: k.eta, l0: k.l0 };
            SoclabStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// `alpha = alpha_numer / alpha_denom`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_avalanche_relations(
    h: f64,
    eps: f64,
    l0_over_dl: f64,
    dimension: u32,
    alpha_numer: i64,
    alpha_denom: i64,
    out: *mut SoclabAvalancheRelations,
) -> SoclabStatus {
    non_null!(out);
    if alpha_denom == 0 {
        return fail(SoclabStatus::InvalidArgument, "alpha denominator is zero");
    }
    let alpha = Rational::new(alpha_numer as i128, alpha_denom as i128);
    match avalanche_relations(h, eps, l0_over_dl, dimension, alpha) {
        Ok(r) => {
            let (n, d) = (*r.beta_n.numer(), *r.beta_n.denom());
            let (Ok(n), Ok(d)) = (i64::try_from(n), i64::try_from(d)) else {
                return fail(SoclabStatus::Domain, "beta_N does not fit in 64 bits");
            };
            *out = SoclabAvalancheRelations {
                r_a: r.r_a,
                r_a_predicted: r.r_a_predicted,
                beta_n_numer: n,
                beta_n_denom: d,
                n_estimate: r.n_estimate,
            };
            SoclabStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn soclab_classify_drive_regime(
    h_dt: f64,
    g_dl: f64,
    l0_over_dl: f64,
    dimension: u32,
    margin: f64,
    out: *mut SoclabRegime,
) -> SoclabStatus {
    non_null!(out);
    match classify_drive_regime(h_dt, g_dl, l0_over_dl, dimension, margin) {
        Ok(r) => {
            *out = match r {
                DriveRegime::Sdidt => SoclabRegime::Sdidt,
                DriveRegime::Intermediate => SoclabRegime::Intermediate,
                DriveRegime::Laminar => SoclabRegime::Laminar,
            };
            SoclabStatus::Ok
        }
        Err(e) => from_error(e),
    }
}
