use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rumour_ffi::*;

fn last_error() -> String {
    let p = rumour_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn finite(pmf: &[f64]) -> *mut RumourLaw {
    let mut law = ptr::null_mut();
    let status = unsafe { rumour_law_finite(pmf.as_ptr(), pmf.len(), &mut law) };
    assert_eq!(status, RumourStatus::Ok);
    law
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(rumour_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let name = unsafe { CStr::from_ptr(rumour_status_name(RumourStatus::BudgetExceeded)) };
    assert_eq!(name.to_str().unwrap(), "enumeration budget exceeded");
}

#[test]
fn invalid_pmf_reports_mass() {
    let pmf = [0.5, 0.6];
    let mut law = ptr::null_mut();
    let status = unsafe { rumour_law_finite(pmf.as_ptr(), 2, &mut law) };
    assert_eq!(status, RumourStatus::InvalidLaw);
    assert!(law.is_null());
    assert!(last_error().contains("pmf mass 1.1"));
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = 0.0;
    assert_eq!(unsafe { rumour_law_cdf(ptr::null(), 0, &mut out) }, RumourStatus::NullPointer);
    assert_eq!(rumour_law_geometric(0.5, ptr::null_mut()), RumourStatus::NullPointer);
    assert_eq!(unsafe { rumour_sim_advance(ptr::null_mut(), 1, ptr::null_mut()) }, RumourStatus::NullPointer);
    unsafe {
        rumour_law_free(ptr::null_mut());
        rumour_sim_free(ptr::null_mut());
        rumour_react_free(ptr::null_mut());
    }
}

#[test]
fn law_queries() {
    let law = finite(&[0.5, 0.0, 0.5]);
    let mut x = 0.0;
    unsafe {
        assert_eq!(rumour_law_cdf(law, 1, &mut x), RumourStatus::Ok);
        assert_eq!(x, 0.5);
        assert_eq!(rumour_law_a_n(law, 1, &mut x), RumourStatus::Ok);
        assert_eq!(x, 0.25);
        assert_eq!(rumour_oracle_tau_prob(law, 3, 2, &mut x), RumourStatus::Ok);
        assert!((x - 0.03125).abs() < 1e-15);
        let mut verdict = RumourVerdict::Inconclusive;
        assert_eq!(rumour_law_criterion(law, 1_000_000, 1e-8, &mut verdict), RumourStatus::Ok);
        assert_eq!(verdict, RumourVerdict::NoPercolation);
        let mut err = 1.0;
        assert_eq!(rumour_law_overshoot_cdf(law, 0, 1e-12, &mut x, &mut err), RumourStatus::Ok);
        assert!(x > 0.0 && x < 1.0 && err == 0.0);
        rumour_law_free(law);
    }
}

#[test]
fn law_from_json() {
    let json = CString::new(r#"{"kind":"geometric_min1","q":0.5}"#).unwrap();
    let mut law = ptr::null_mut();
    unsafe {
        assert_eq!(rumour_law_from_json(json.as_ptr(), &mut law), RumourStatus::Ok);
        let mut verdict = RumourVerdict::NoPercolation;
        assert_eq!(rumour_law_criterion(law, 1000, 1e-8, &mut verdict), RumourStatus::Ok);
        assert_eq!(verdict, RumourVerdict::PercolatesWithPositiveProb);
        rumour_law_free(law);
    }
    let bad = CString::new(r#"{"kind":"geometric","q":2}"#).unwrap();
    let mut law = ptr::null_mut();
    assert_eq!(unsafe { rumour_law_from_json(bad.as_ptr(), &mut law) }, RumourStatus::InvalidLaw);
}

#[test]
fn basic_sim_runs_to_extinction_and_replays() {
    let law = finite(&[0.5, 0.0, 0.5]);
    let run = |seed| unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(rumour_sim_new(law, seed, 1.0, &mut sim), RumourStatus::Ok);
        let mut front = RumourFront::default();
        assert_eq!(rumour_sim_advance(sim, 10_000, &mut front), RumourStatus::Ok);
        rumour_sim_free(sim);
        front
    };
    for seed in 0..20 {
        let a = run(seed);
        assert!(a.extinct);
        assert_eq!(a, run(seed));
    }
    unsafe { rumour_law_free(law) };
}

#[test]
fn sim_rejects_bad_occupancy() {
    let law = finite(&[0.5, 0.5]);
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { rumour_sim_new(law, 1, 1.5, &mut sim) }, RumourStatus::InvalidArgument);
    unsafe { rumour_law_free(law) };
}

#[test]
fn react_sim_matches_library() {
    let law = finite(&[0.5, 0.5]);
    let mut sim = ptr::null_mut();
    let mut front = RumourFront::default();
    unsafe {
        assert_eq!(rumour_react_new(law, 0.5, 9, 1, &mut sim), RumourStatus::Ok);
        assert_eq!(rumour_react_advance(sim, 500, &mut front), RumourStatus::Ok);
        rumour_react_free(sim);
    }
    let stream = rumour::keyed::KeyedStream::new(rumour::keyed::derive_seed(9, 0, rumour::keyed::Purpose::Reactivation));
    let lib = rumour::react::run_react(
        &rumour::RadiusLaw::finite(vec![0.5, 0.5]).unwrap(),
        0.5,
        &stream,
        500,
        rumour::react::Window::Within(1),
    )
    .unwrap();
    assert_eq!((front.n, front.r), (500, lib.last().r));
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { rumour_react_new(law, 1.5, 0, 0, &mut bad) }, RumourStatus::InvalidArgument);
    unsafe { rumour_law_free(law) };
}

#[test]
fn run_config_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = CString::new("kind = \"oracle\"\n[law]\nkind = \"finite\"\npmf = [0.5, 0, 0.5]\n").unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rumour_run_config(config.as_ptr(), out.as_ptr(), 2) }, RumourStatus::Ok);
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("tau.csv").exists());
    let bad = CString::new("kind = \"react\"\np2 = 1.5\n[law]\nkind = \"constant\"\nc = 1\n").unwrap();
    assert_eq!(unsafe { rumour_run_config(bad.as_ptr(), out.as_ptr(), 1) }, RumourStatus::Config);
    assert!(last_error().contains("p2 = 1.5"));
}

#[test]
fn header_is_valid_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/rumour.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in ["rumour_version", "rumour_law_finite", "rumour_sim_advance", "rumour_react_new", "RUMOUR_STATUS_OK"] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    assert!(status.success());
}
