use std::ffi::{c_char, CStr, CString};
use std::ptr;

use persuasion_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    pm_string_free(p);
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pm_last_error_message()).to_str().unwrap().to_string() }
}

const COUNTER: &str = include_str!("../../core/scenarios/counterexample.json");

#[test]
fn measure_roundtrip_and_queries() {
    unsafe {
        let mut m = ptr::null_mut();
        let src = c(r#"[["3/4","4/7"],["1/3","1/7"],["1/2","2/7"]]"#);
        assert_eq!(pm_measure_from_json(src.as_ptr(), &mut m), PmStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(pm_measure_to_json(m, &mut out), PmStatus::Ok);
        assert_eq!(take(out), r#"[["1/3","1/7"],["1/2","2/7"],["3/4","4/7"]]"#);
        assert_eq!(pm_measure_total_mass(m, &mut out), PmStatus::Ok);
        assert_eq!(take(out), "1");
        assert_eq!(pm_measure_barycenter(m, &mut out), PmStatus::Ok);
        assert_eq!(take(out), "13/21");
        let l = c("2/3");
        assert_eq!(pm_greedy_mass(m, l.as_ptr(), &mut out), PmStatus::Ok);
        let greedy = take(out);
        let mut nu = ptr::null_mut();
        let beta = c("1/2");
        assert_eq!(pm_interval_measure(m, l.as_ptr(), beta.as_ptr(), &mut nu), PmStatus::Ok);
        assert_eq!(pm_measure_barycenter(nu, &mut out), PmStatus::Ok);
        assert_eq!(take(out), "2/3");
        assert_eq!(greedy, "6/7");
        let too_much = c("1");
        let mut never = ptr::null_mut();
        assert_ne!(pm_interval_measure(m, l.as_ptr(), too_much.as_ptr(), &mut never), PmStatus::Ok);
        assert!(never.is_null());
        pm_measure_free(nu);
        pm_measure_free(m);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut m = ptr::null_mut();
        let bad = c("[[\"2\", \"1\"]]");
        assert_eq!(pm_measure_from_json(bad.as_ptr(), &mut m), PmStatus::Parse);
        assert!(last_error().contains("outside [0, 1]"), "{}", last_error());
        assert_eq!(pm_measure_from_json(ptr::null(), &mut m), PmStatus::NullPointer);
        let mut out = ptr::null_mut();
        assert_eq!(pm_measure_total_mass(ptr::null(), &mut out), PmStatus::NullPointer);
        let zero = c("[]");
        assert_eq!(pm_measure_from_json(zero.as_ptr(), &mut m), PmStatus::Ok);
        assert_eq!(pm_measure_barycenter(m, &mut out), PmStatus::InvalidInput);
        pm_measure_free(m);
        pm_measure_free(ptr::null_mut());
        pm_string_free(ptr::null_mut());
    }
}

#[test]
fn solve_loaded_scenario() {
    unsafe {
        let mut s = ptr::null_mut();
        let text = c(COUNTER);
        assert_eq!(pm_scenario_load(text.as_ptr(), &mut s), PmStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(pm_solve(s, PmMethod::Lp, &mut out), PmStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["value"], "25/28");
        assert_eq!(pm_solve(s, PmMethod::Interval, &mut out), PmStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["value"], "6/7");
        assert_eq!(pm_solve(s, PmMethod::ValueIter, &mut out), PmStatus::InvalidInput);
        pm_scenario_free(s);

        let broken = c(&COUNTER.replace("\"horizon\": 2", "\"horizon\": 2,"));
        assert_eq!(pm_scenario_load(broken.as_ptr(), &mut s), PmStatus::Parse);
        assert!(last_error().starts_with("<scenario>:"), "{}", last_error());
    }
}

#[test]
fn cases_report_pass_through_status() {
    unsafe {
        let mut out = ptr::null_mut();
        let id = c("counterexample");
        assert_eq!(pm_case_run(id.as_ptr(), ptr::null(), &mut out), PmStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["pass"], true);

        let id = c("example1");
        let params = c(r#"{"w2": "4/5"}"#);
        assert_eq!(pm_case_run(id.as_ptr(), params.as_ptr(), &mut out), PmStatus::CaseFailed);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["computed"]["first_period_mass"], "125/378");

        let unknown = c("nope");
        assert_eq!(pm_case_run(unknown.as_ptr(), ptr::null(), &mut out), PmStatus::InvalidInput);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/persuasion.h");
    for name in [
        "pm_measure_from_json",
        "pm_measure_to_json",
        "pm_measure_free",
        "pm_measure_total_mass",
        "pm_measure_barycenter",
        "pm_greedy_mass",
        "pm_interval_measure",
        "pm_scenario_load",
        "pm_scenario_free",
        "pm_solve",
        "pm_case_run",
        "pm_string_free",
        "pm_last_error_message",
        "typedef struct PmMeasure PmMeasure;",
        "PM_STATUS_CASE_FAILED = 6",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(exe) = std::env::current_exe() else { return };
    // target/<profile>/deps/abi-… → target/<profile>
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libpersuasion_ffi.a");
    if !lib.exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let status = std::process::Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("greedy 6/7\n"), "{text}");
    assert!(text.contains("error "), "{text}");
}
