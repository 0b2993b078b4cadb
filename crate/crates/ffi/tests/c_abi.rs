use std::ffi::{CStr, CString};
use std::ptr;

use curvereach_ffi::*;

const PLAN: &str = "d 1\nr 2\ngrid 3 3\ntarget 2 1\ncells\n90 90 90\n90 90 90\n90 90 90\n";

fn last_error() -> String {
    unsafe { CStr::from_ptr(cr_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn verify_and_query_through_handles() {
    let text = CString::new(PLAN).unwrap();
    let mut plan = ptr::null_mut();
    unsafe {
        assert_eq!(cr_plan_parse(text.as_ptr(), &mut plan), CrStatus::Ok);
        let mut result = ptr::null_mut();
        assert_eq!(cr_verify(plan, 16, 2, &mut result), CrStatus::Ok);
        let (mut it, mut bits) = (0usize, 0u64);
        assert_eq!(cr_result_stats(result, &mut it, &mut bits), CrStatus::Ok);
        assert!(it >= 1 && bits > 0);
        let mut reach = -1;
        assert_eq!(cr_query(result, 1.5, 1.5, std::f64::consts::FRAC_PI_2, &mut reach), CrStatus::Ok);
        assert_eq!(reach, 1);
        assert_eq!(cr_query(result, 1.5, 1.5, 3.0 * std::f64::consts::FRAC_PI_2, &mut reach), CrStatus::Ok);
        assert_eq!(reach, 0);
        assert_eq!(cr_query(result, 7.0, 1.0, 0.0, &mut reach), CrStatus::OutsideMap);
        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(cr_result_write_bitmaps(result, d.as_ptr()), CrStatus::Ok);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 12);
        cr_result_free(result);
        cr_plan_free(plan);
    }
}

#[test]
fn errors_are_reported() {
    let mut plan = ptr::null_mut();
    unsafe {
        assert_eq!(cr_plan_parse(ptr::null(), &mut plan), CrStatus::NullPointer);
        let bad = CString::new("d 1\nr 2\ngrid 1 1\ncells\nabc\n").unwrap();
        assert_eq!(cr_plan_parse(bad.as_ptr(), &mut plan), CrStatus::Parse);
        assert!(last_error().contains("abc"));
        let wide = CString::new("d 3\nr 2\ngrid 1 1\ntarget 0 0\ncells\n0\n").unwrap();
        assert_eq!(cr_plan_parse(wide.as_ptr(), &mut plan), CrStatus::Invariant);
        assert!(plan.is_null());
        cr_plan_free(ptr::null_mut());
    }
}

#[test]
fn storage_model() {
    let (mut b, mut d) = (0, 0);
    unsafe {
        assert_eq!(cr_storage_bits(20, 200, &mut b, &mut d), CrStatus::Ok);
    }
    assert_eq!((b, d), (30_400_000, 3_200_000_000));
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/curvereach.h")).unwrap();
    for sym in ["cr_plan_parse", "cr_verify", "cr_query", "cr_result_free", "CR_STATUS_OK", "typedef struct CrPlan CrPlan"] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/curvereach.h");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(status.success());
}
