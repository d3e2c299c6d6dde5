use std::ffi::{CStr, CString};
use std::ptr;

use etl_ffi::*;

fn context(n: usize) -> *mut EtlContext {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { etl_context_default(n, &mut ctx) }, EtlStatus::Ok);
    assert!(!ctx.is_null());
    ctx
}

fn last_error() -> String {
    let p = etl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn theta_matches_core() {
    let ctx = context(2);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { etl_theta(ctx, 0.3, 0.1, &mut re, &mut im) }, EtlStatus::Ok);
    let core = etl_core::theta::theta(etl_core::C64::new(0.3, 0.1), &etl_core::Context::new(2).unwrap());
    assert_eq!((re, im), (core.re, core.im));
    assert_eq!(unsafe { etl_context_rank(ctx) }, 2);
    unsafe { etl_context_free(ctx) };
}

#[test]
fn r_matrix_is_permutation_at_zero() {
    let ctx = context(3);
    let mut buf = vec![f64::NAN; 2 * 81];
    assert_eq!(unsafe { etl_r_matrix(ctx, 0.0, 0.0, buf.as_mut_ptr(), buf.len()) }, EtlStatus::Ok);
    for i in 0..3 {
        for j in 0..3 {
            for ip in 0..3 {
                for jp in 0..3 {
                    let k = 2 * (((i * 3 + j) * 3 + ip) * 3 + jp);
                    let want = if ip == j && jp == i { 1.0 } else { 0.0 };
                    assert!((buf[k] - want).abs() < 1e-12 && buf[k + 1].abs() < 1e-12, "{i}{j}{ip}{jp}: {}", buf[k]);
                }
            }
        }
    }
    assert_eq!(unsafe { etl_r_matrix(ctx, 0.1, 0.0, buf.as_mut_ptr(), 10) }, EtlStatus::InvalidParameter);
    assert!(last_error().contains("needed"));
    unsafe { etl_context_free(ctx) };
}

#[test]
fn ybe_residual_is_small() {
    let ctx = context(2);
    let mut res = f64::NAN;
    assert_eq!(unsafe { etl_ybe_residual(ctx, 0.13, 0.07, -0.21, 0.11, 0.05, -0.03, &mut res) }, EtlStatus::Ok);
    assert!(res < 1e-10, "{res}");
    unsafe { etl_context_free(ctx) };
}

#[test]
fn suite_report_round_trips() {
    let ctx = context(2);
    assert_eq!(unsafe { etl_context_set_run(ctx, 24, 7) }, EtlStatus::Ok);
    let name = CString::new("qfay").unwrap();
    let mut json = ptr::null_mut();
    let mut pass = -1;
    assert_eq!(unsafe { etl_run_suite(ctx, name.as_ptr(), &mut json, &mut pass) }, EtlStatus::Ok);
    assert_eq!(pass, 1);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { etl_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["reports"][0]["suite"], "qfay");
    assert_eq!(v["reports"][0]["params"]["seed"], 7);

    let bad = CString::new("nope").unwrap();
    assert_eq!(unsafe { etl_run_suite(ctx, bad.as_ptr(), &mut json, &mut pass) }, EtlStatus::UnknownSuite);
    assert!(last_error().contains("nope"));
    unsafe { etl_context_free(ctx) };
}

#[test]
fn invalid_input_reports_status() {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { etl_context_new(2, 0.1, -0.5, 0.2, 0.1, 0.3, 0.0, &mut ctx) }, EtlStatus::InvalidParameter);
    assert!(ctx.is_null());
    assert!(last_error().contains("tau"));
    assert_eq!(unsafe { etl_context_default(1, ptr::null_mut()) }, EtlStatus::NullPointer);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { etl_theta(ptr::null(), 0.1, 0.0, &mut re, &mut im) }, EtlStatus::NullPointer);
    assert_eq!(unsafe { etl_context_rank(ptr::null()) }, 0);
    unsafe {
        etl_context_free(ptr::null_mut());
        etl_string_free(ptr::null_mut());
    }
    let ctx = context(2);
    assert_eq!(unsafe { etl_context_set_run(ctx, 0, 1) }, EtlStatus::InvalidParameter);
    unsafe { etl_context_free(ctx) };
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(etl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/etl.h")).unwrap();
    for f in [
        "etl_last_error",
        "etl_version",
        "etl_context_new",
        "etl_context_default",
        "etl_context_set_run",
        "etl_context_free",
        "etl_context_rank",
        "etl_theta",
        "etl_r_matrix",
        "etl_ybe_residual",
        "etl_run_suite",
        "etl_string_free",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct EtlContext EtlContext;"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/etl.h");
    match std::process::Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler; skipped"),
    }
}
