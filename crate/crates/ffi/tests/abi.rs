use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use effaction_ffi::*;

fn problem(m: &str, v: &str, kt: f64) -> Result<*mut EaProblem, (EaStatus, String)> {
    let (m, v) = (CString::new(m).unwrap(), CString::new(v).unwrap());
    let mut p = ptr::null_mut();
    let s = unsafe { ea_problem_new(m.as_ptr(), v.as_ptr(), 1.0, kt, -4.0, 4.0, &mut p) };
    if s == EaStatus::Ok {
        Ok(p)
    } else {
        assert!(p.is_null());
        Err((s, last_error()))
    }
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { ea_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_str()
        .unwrap()
        .to_owned();
    assert_eq!(s.len(), n.min(255));
    s
}

#[test]
fn harmonic_point_and_scalars() {
    let p = problem("1", "0.5*x^2", 0.0).unwrap();
    let mut pt = EaPoint::default();
    assert_eq!(unsafe { ea_solve(p, 0.5, &mut pt) }, EaStatus::Ok);
    assert!((pt.omega_trial - 1.0).abs() < 1e-12);
    assert!((pt.w - 0.625).abs() < 1e-12);
    assert_eq!(pt.converged, 1);
    let mut v = 0.0;
    assert_eq!(
        unsafe { ea_one_loop_potential(p, 0.0, &mut v) },
        EaStatus::Ok
    );
    assert!((v - 0.5).abs() < 1e-15);
    assert_eq!(
        unsafe { ea_kinetic_correction(p, 0.0, &mut v) },
        EaStatus::Ok
    );
    assert_eq!(v, 0.0);
    assert_eq!(
        unsafe { ea_variational_potential(p, 1.0, &mut v) },
        EaStatus::Ok
    );
    assert!((v - 1.0).abs() < 1e-12);
    unsafe { ea_problem_free(p) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let (s, msg) = problem("1", "0.5*x^^2", 0.0).unwrap_err();
    assert_eq!(s, EaStatus::ParseError);
    assert!(!msg.is_empty());
    let (s, msg) = problem("x", "0.5*x^2", 0.0).unwrap_err();
    assert_eq!(s, EaStatus::InvalidProblem);
    assert!(msg.contains("mass"), "{msg}");

    let mut out = ptr::null_mut();
    let m = CString::new("1").unwrap();
    let s = unsafe { ea_problem_new(m.as_ptr(), ptr::null(), 1.0, 0.0, -1.0, 1.0, &mut out) };
    assert_eq!(s, EaStatus::NullPointer);
    let mut pt = EaPoint::default();
    assert_eq!(
        unsafe { ea_solve(ptr::null(), 0.0, &mut pt) },
        EaStatus::NullPointer
    );

    let p = problem("1", "0.5*x^2 - x^4", 0.0).unwrap();
    assert_eq!(
        unsafe { ea_solve(p, 0.0, &mut pt) },
        EaStatus::ComputationFailed
    );
    assert!(!last_error().is_empty());
    unsafe { ea_problem_free(p) };

    // message length is reported even when the buffer is too small
    let mut tiny = [0 as c_char; 4];
    let n = unsafe { ea_last_error_message(tiny.as_mut_ptr(), tiny.len()) };
    assert!(n > 3);
    assert_eq!(unsafe { CStr::from_ptr(tiny.as_ptr()) }.to_bytes().len(), 3);
}

#[test]
fn table_rows() {
    let p = problem("1", "0.5*x^2", 0.0).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ea_table_new(p, 9, &mut t) }, EaStatus::Ok);
    assert_eq!(unsafe { ea_table_len(t) }, 9);
    let mut row = EaTableRow::default();
    for i in 0..9 {
        assert_eq!(unsafe { ea_table_row(t, i, &mut row) }, EaStatus::Ok);
        let x = -4.0 + i as f64;
        assert!((row.x - x).abs() < 1e-15);
        assert!((row.w - (0.5 * x * x + 0.5)).abs() < 1e-12);
        assert!((row.m_eff - 1.0).abs() < 1e-12);
        assert_eq!(row.valid, 1);
    }
    assert_eq!(
        unsafe { ea_table_row(t, 9, &mut row) },
        EaStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { ea_table_new(p, 1, &mut t) },
        EaStatus::InvalidArgument
    );
    assert!(t.is_null());
    unsafe { ea_problem_free(p) };
}

#[test]
fn flagged_rows_are_nan() {
    let p = problem("1", "(x^2-1)^2", 1.0).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ea_table_new(p, 81, &mut t) }, EaStatus::Ok);
    let mut row = EaTableRow::default();
    assert_eq!(unsafe { ea_table_row(t, 40, &mut row) }, EaStatus::Ok);
    assert_eq!(row.x, 0.0);
    assert_eq!(row.valid, 0);
    assert!(row.omega.is_nan());
    unsafe {
        ea_table_free(t);
        ea_problem_free(p);
    }
}

#[test]
fn trajectories() {
    let p = problem("1", "0.5*x^2", 0.0).unwrap();
    let mut tr = ptr::null_mut();
    let tau = 2.0 * std::f64::consts::PI;
    let classical = EaMode::Classical as c_int;
    assert_eq!(
        unsafe { ea_trajectory_new(p, classical, 1.0, 0.0, tau, &mut tr) },
        EaStatus::Ok
    );
    let n = unsafe { ea_trajectory_len(tr) };
    let mut s = EaSample::default();
    assert_eq!(
        unsafe { ea_trajectory_sample(tr, n - 1, &mut s) },
        EaStatus::Ok
    );
    assert!((s.t - tau).abs() < 1e-12 && (s.x - 1.0).abs() < 1e-8);
    assert!(unsafe { ea_trajectory_energy_drift(tr) } < 1e-9);
    unsafe { ea_trajectory_free(tr) };

    // leaves [−4, 4]: partial record plus a distinct code
    assert_eq!(
        unsafe { ea_trajectory_new(p, classical, 0.0, 8.0, 10.0, &mut tr) },
        EaStatus::Clipped
    );
    assert!(!tr.is_null() && unsafe { ea_trajectory_len(tr) } > 1);
    unsafe { ea_trajectory_free(tr) };

    assert_eq!(
        unsafe { ea_trajectory_new(p, 7, 0.0, 0.0, 1.0, &mut tr) },
        EaStatus::InvalidArgument
    );
    assert!(last_error().contains("mode"));
    unsafe { ea_problem_free(p) };
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(ea_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "effaction.h"

int main(void) {
    EaProblem *p = NULL;
    if (ea_problem_new("1", "0.5*x^2 + 0.5*x^4", 1.0, 0.0, -4.0, 4.0, &p) != EA_STATUS_OK) return 1;
    EaPoint pt;
    if (ea_solve(p, 0.0, &pt) != EA_STATUS_OK) return 2;
    /* Ω³ = Ω + 3 */
    if (fabs(pt.omega_trial * pt.omega_trial * pt.omega_trial - pt.omega_trial - 3.0) > 1e-9) return 3;
    EaProblem *bad = NULL;
    if (ea_problem_new("1", "sin(", 1.0, 0.0, -1.0, 1.0, &bad) != EA_STATUS_PARSE_ERROR) return 4;
    char msg[128];
    if (ea_last_error_message(msg, sizeof msg) == 0) return 5;
    ea_problem_free(p);
    printf("%.12f\n", pt.omega_trial);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libeffaction_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let o = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let omega: f64 = String::from_utf8(run.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((omega - 1.671699881657).abs() < 1e-9);
}
