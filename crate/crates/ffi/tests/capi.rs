use std::ffi::{CStr, CString};
use std::ptr;

use accmarket_ffi::*;

fn last_error() -> String {
    let p = am_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn shares_of_a_table() {
    let cells = [1u8, 1, 0, 0, 1, 0, 1, 0];
    let mut shares = [0.0; 2];
    let mut welfare = 0.0;
    let s = unsafe { am_market_shares(cells.as_ptr(), 2, 4, shares.as_mut_ptr(), &mut welfare) };
    assert_eq!(s, AmStatus::Ok);
    assert_eq!(shares, [0.375, 0.375]);
    assert_eq!(welfare, 0.75);
}

#[test]
fn null_arguments_are_reported() {
    let mut w = 0.0;
    let s = unsafe { am_market_shares(ptr::null(), 2, 4, ptr::null_mut(), &mut w) };
    assert_eq!(s, AmStatus::NullPointer);
    assert!(last_error().contains("null"));
}

#[test]
fn invalid_spec_is_an_argument_error() {
    let (mut tau, mut share) = (0.0, 0.0);
    let s = unsafe {
        am_threshold_best_response(1.0, -1.0, 1.0, 0.5, 0.0, f64::NEG_INFINITY, f64::INFINITY, &mut tau, &mut share)
    };
    assert_eq!(s, AmStatus::InvalidArgument);
    assert!(last_error().contains("standard deviation"));
}

#[test]
fn equal_variance_response() {
    let (mut tau, mut share) = (0.0, 0.0);
    let s = unsafe {
        am_threshold_best_response(1.0, 1.0, 1.0, 0.5, 0.0, f64::NEG_INFINITY, f64::INFINITY, &mut tau, &mut share)
    };
    assert_eq!(s, AmStatus::Ok);
    assert!((tau.abs() - std::f64::consts::LN_2 / 2.0).abs() < 1e-9);
}

#[test]
fn dataset_round_trip() {
    let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    let ys = [-1i8, -1, 1];
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { am_dataset_new(xs.as_ptr(), 3, 2, ys.as_ptr(), &mut d) }, AmStatus::Ok);
    assert_eq!(unsafe { am_dataset_len(d) }, 3);
    assert_eq!(unsafe { am_dataset_dim(d) }, 2);
    unsafe { am_dataset_free(d) };

    let bad = [-1i8, 0, 1];
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { am_dataset_new(xs.as_ptr(), 3, 2, bad.as_ptr(), &mut d) }, AmStatus::InvalidArgument);
    assert!(d.is_null());
}

#[test]
fn missing_csv_is_io() {
    let path = CString::new("/nonexistent/data.csv").unwrap();
    let col = CString::new("y").unwrap();
    let pos = CString::new("1").unwrap();
    let mut d = ptr::null_mut();
    let s = unsafe { am_dataset_load_csv(path.as_ptr(), col.as_ptr(), pos.as_ptr(), &mut d) };
    assert_eq!(s, AmStatus::Io);
}

#[test]
fn dynamics_through_handles() {
    let mut data = ptr::null_mut();
    assert_eq!(unsafe { am_dataset_sample_gaussian(1.0, 2.0, 1.0, 0.5, 5_000, 3, &mut data) }, AmStatus::Ok);
    let cfg = CString::new("[[providers]]\ncount = 2\nlearner = \"threshold\"\n").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { am_dynamics_run(cfg.as_ptr(), data, ptr::null(), &mut t) }, AmStatus::Ok);
    assert_eq!(unsafe { am_trajectory_providers(t) }, 2);
    assert!(unsafe { am_trajectory_converged(t) });
    assert!(unsafe { am_trajectory_moves(t) } >= 1);

    let mut shares = [0.0; 2];
    let mut welfare = 0.0;
    assert_eq!(unsafe { am_trajectory_final(t, shares.as_mut_ptr(), 2, &mut welfare) }, AmStatus::Ok);
    assert!((shares[0] + shares[1] - welfare).abs() < 1e-12);
    assert_eq!(
        unsafe { am_trajectory_final(t, shares.as_mut_ptr(), 3, &mut welfare) },
        AmStatus::InvalidArgument
    );

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { am_trajectory_json(t, &mut json) }, AmStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"converged\":true"));
    unsafe {
        am_string_free(json);
        am_trajectory_free(t);
        am_dataset_free(data);
    }
}

#[test]
fn bad_config_is_a_config_error() {
    let mut data = ptr::null_mut();
    assert_eq!(unsafe { am_dataset_sample_gaussian(1.0, 1.0, 1.0, 0.5, 100, 1, &mut data) }, AmStatus::Ok);
    let cfg = CString::new("[[providers]]\nlerner = \"stump\"\n").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { am_dynamics_run(cfg.as_ptr(), data, ptr::null(), &mut t) }, AmStatus::Config);
    assert!(t.is_null());
    unsafe { am_dataset_free(data) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(am_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/accmarket.h")).unwrap();
    for f in [
        "am_last_error",
        "am_dataset_new",
        "am_dataset_free",
        "am_market_shares",
        "am_dynamics_run",
        "am_trajectory_json",
        "am_string_free",
        "AM_STATUS_OK",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
