use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use soclab_ffi::*;

const ALL_OPEN: SoclabBoundaries = SoclabBoundaries {
    north: SoclabBoundary::Open,
    east: SoclabBoundary::Open,
    south: SoclabBoundary::Open,
    west: SoclabBoundary::Open,
};

fn last_error() -> String {
    let p = soclab_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn three_by_three_example_relaxes_through_the_abi() {
    unsafe {
        let mut l = ptr::null_mut();
        assert_eq!(soclab_lattice_new(3, 4, ALL_OPEN, &mut l), SoclabStatus::Ok);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(soclab_lattice_set_height(l, r, c, 3), SoclabStatus::Ok);
            }
        }
        assert_eq!(soclab_lattice_add_grains(l, 1, 1, 1), SoclabStatus::Ok);
        let mut av = SoclabAvalanche::default();
        assert_eq!(soclab_lattice_relax(l, &mut av), SoclabStatus::Ok);
        // centre, four edges, centre again, four corners
        assert_eq!((av.size, av.area), (10, 9));
        let mut heights = [0u64; 9];
        assert_eq!(soclab_lattice_heights(l, heights.as_mut_ptr(), 9), SoclabStatus::Ok);
        assert_eq!(heights, [1, 3, 1, 3, 0, 3, 1, 3, 1]);
        let mut h = 0;
        assert_eq!(soclab_lattice_height(l, 1, 1, &mut h), SoclabStatus::Ok);
        assert_eq!(h, 0);
        let mut ledger = SoclabLedger::default();
        assert_eq!(soclab_lattice_ledger(l, &mut ledger), SoclabStatus::Ok);
        assert_eq!(ledger.grains_in, 28);
        assert_eq!(ledger.grains_in, ledger.grains_out + ledger.stored);
        assert_eq!(ledger.stored, 16);
        soclab_lattice_free(l);
    }
}

#[test]
fn bad_arguments_report_status_and_message() {
    unsafe {
        let mut l = ptr::null_mut();
        assert_eq!(soclab_lattice_new(0, 4, ALL_OPEN, &mut l), SoclabStatus::Config);
        assert!(l.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(soclab_lattice_new(4, 4, ALL_OPEN, ptr::null_mut()), SoclabStatus::NullPointer);
        assert!(last_error().contains("out"));

        assert_eq!(soclab_lattice_new(4, 4, ALL_OPEN, &mut l), SoclabStatus::Ok);
        assert_eq!(soclab_lattice_set_height(l, 4, 0, 1), SoclabStatus::InvalidArgument);
        let mut small = [0u64; 3];
        assert_eq!(soclab_lattice_heights(l, small.as_mut_ptr(), 3), SoclabStatus::InvalidArgument);
        soclab_lattice_free(l);
        soclab_lattice_free(ptr::null_mut());

        let mut fit = SoclabFit::default();
        assert_eq!(soclab_fit_power_law([5u64].as_ptr(), 0, 1, 0, &mut fit), SoclabStatus::Analysis);
    }
}

#[test]
fn simulation_keeps_the_ledger_balanced() {
    unsafe {
        let drive = SoclabDrive {
            grains_per_event: 4,
            site_policy: SoclabSitePolicy::Uniform,
            extent: 0,
            event_probability: 1.0,
        };
        let mut sim = ptr::null_mut();
        assert_eq!(soclab_simulation_new(20, 4, ALL_OPEN, &drive, 9, &mut sim), SoclabStatus::Ok);
        let mut events = 0;
        for _ in 0..5000 {
            let mut av = SoclabAvalanche::default();
            let mut had = false;
            assert_eq!(soclab_simulation_step(sim, &mut av, &mut had), SoclabStatus::Ok);
            events += had as u64;
        }
        let mut ledger = SoclabLedger::default();
        assert_eq!(soclab_simulation_ledger(sim, &mut ledger), SoclabStatus::Ok);
        assert_eq!(ledger.timesteps, 5000);
        assert_eq!(events, 5000);
        assert_eq!(ledger.grains_in, 4 * 5000);
        assert_eq!(ledger.grains_in, ledger.grains_out + ledger.stored);
        soclab_simulation_free(sim);
    }
}

#[test]
fn identical_seeds_give_identical_avalanches() {
    let run = |seed| unsafe {
        let drive = SoclabDrive {
            grains_per_event: 1,
            site_policy: SoclabSitePolicy::Uniform,
            extent: 0,
            event_probability: 0.5,
        };
        let mut sim = ptr::null_mut();
        assert_eq!(soclab_simulation_new(12, 4, ALL_OPEN, &drive, seed, &mut sim), SoclabStatus::Ok);
        let mut sizes = Vec::new();
        for _ in 0..3000 {
            let mut av = SoclabAvalanche::default();
            let mut had = false;
            soclab_simulation_step(sim, &mut av, &mut had);
            if had {
                sizes.push(av.size);
            }
        }
        soclab_simulation_free(sim);
        sizes
    };
    assert_eq!(run(4), run(4));
    assert_ne!(run(4), run(5));
}

#[test]
fn fit_recovers_exponent_of_exact_counts() {
    // counts ∝ s^-2 on [1, 300]
    let z: f64 = (1..=300).map(|s| (s as f64).powi(-2)).sum();
    let mut sizes = Vec::new();
    for s in 1..=300u64 {
        let k = (300_000.0 * (s as f64).powi(-2) / z).round() as usize;
        sizes.extend(std::iter::repeat(s).take(k));
    }
    let mut fit = SoclabFit::default();
    let status = unsafe { soclab_fit_power_law(sizes.as_ptr(), sizes.len(), 1, 300, &mut fit) };
    assert_eq!(status, SoclabStatus::Ok);
    assert!((fit.gamma - 2.0).abs() < 0.01, "{fit:?}");
    assert_eq!((fit.s_min, fit.s_max), (1, 300));
    assert_eq!(fit.n_tail as usize, sizes.len());
}

#[test]
fn pi_groups_come_back_as_text() {
    let table = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/turbulence.tbl")).unwrap();
    let c = CString::new(table).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(soclab_pi_groups(c.as_ptr(), &mut out), SoclabStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "L0^1 eta^-1\nL0^1 U^1 nu^-1");
        soclab_string_free(out);

        let bad = CString::new("this is not a table").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(soclab_pi_groups(bad.as_ptr(), &mut out), SoclabStatus::Config);
        assert!(out.is_null());
    }
}

#[test]
fn scaling_relations_through_the_abi() {
    unsafe {
        let mut k = SoclabK41::default();
        assert_eq!(soclab_k41_relations(2.0, 3.0, 1e-3, &mut k), SoclabStatus::Ok);
        assert!(((k.l0 / k.eta).powf(4.0 / 3.0) / k.reynolds - 1.0).abs() < 1e-12);
        assert_eq!(soclab_k41_relations(-1.0, 3.0, 1e-3, &mut k), SoclabStatus::Domain);

        let mut r = SoclabAvalancheRelations::default();
        assert_eq!(soclab_avalanche_relations(16.0 / 1e4, 16.0, 100.0, 2, 2, 1, &mut r), SoclabStatus::Ok);
        assert!((r.r_a / r.r_a_predicted - 1.0).abs() < 1e-12);
        assert_eq!(soclab_avalanche_relations(1.0, 1.0, 10.0, 2, 1, 0, &mut r), SoclabStatus::InvalidArgument);

        let mut regime = SoclabRegime::Sdidt;
        assert_eq!(soclab_classify_drive_regime(1.0, 4.0, 100.0, 2, 0.5, &mut regime), SoclabStatus::Ok);
        assert_eq!(regime, SoclabRegime::Sdidt);
        assert_eq!(soclab_classify_drive_regime(24_000.0, 4.0, 100.0, 2, 0.5, &mut regime), SoclabStatus::Ok);
        assert_eq!(regime, SoclabRegime::Laminar);
    }
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/soclab.h")).unwrap()
}

#[test]
fn header_declares_every_exported_function() {
    let h = header();
    for f in [
        "soclab_last_error_message",
        "soclab_version",
        "soclab_lattice_new",
        "soclab_lattice_free",
        "soclab_lattice_set_height",
        "soclab_lattice_add_grains",
        "soclab_lattice_height",
        "soclab_lattice_heights",
        "soclab_lattice_relax",
        "soclab_lattice_ledger",
        "soclab_simulation_new",
        "soclab_simulation_step",
        "soclab_simulation_ledger",
        "soclab_simulation_free",
        "soclab_fit_power_law",
        "soclab_pi_groups",
        "soclab_string_free",
        "soclab_k41_relations",
        "soclab_avalanche_relations",
        "soclab_classify_drive_regime",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f}");
    }
    assert!(h.contains("typedef struct SoclabLattice SoclabLattice;"));
    assert!(h.contains("SOCLAB_STATUS_PANIC = 8"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("cc not found, skipping");
        return;
    };
    assert!(cc.status.success());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    std::fs::write(
        &src,
        "#include \"soclab.h\"\nint main(void) { SoclabLattice *l = 0; SoclabBoundaries b = {0}; \
         return soclab_lattice_new(3, 4, b, &l) == SOCLAB_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let o = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
