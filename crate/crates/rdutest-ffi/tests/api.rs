//! Exercises the C interface from Rust: argument validation, a full run on
//! a generated dataset, getter behaviour on good and bad inputs, and a real
//! C program compiled against the committed header and the static library.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use rdutest::choices::write_choices;
use rdutest::config::render_config;
use rdutest::model::rat;
use rdutest::simulate::gp_counterexample;

use rdutest_ffi::*;

fn write_dataset(dir: &Path) -> (CString, CString) {
    let (catalog, data) = gp_counterexample(rat(1, 2), 400, None, 0).unwrap();
    let config_path = dir.join("counter.toml");
    let data_path = dir.join("counter.csv");
    std::fs::write(&config_path, render_config(&catalog, None).unwrap()).unwrap();
    write_choices(&data_path, &catalog, &data, &[0, 1, 2]).unwrap();
    (
        CString::new(config_path.to_str().unwrap()).unwrap(),
        CString::new(data_path.to_str().unwrap()).unwrap(),
    )
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(rdutest_last_error())
            .to_string_lossy()
            .into_owned()
    }
}

#[test]
fn rejects_null_and_non_utf8_arguments() {
    unsafe {
        let mut result: *mut RduResult = ptr::null_mut();
        let data = CString::new("x.csv").unwrap();

        let status = rdutest_run(ptr::null(), data.as_ptr(), ptr::null(), &mut result);
        assert_eq!(status, RduStatus::NullArgument);
        assert!(result.is_null());
        assert!(last_error().contains("config_path"));

        let bad = [0xffu8, 0xfe, 0x00];
        let status = rdutest_run(bad.as_ptr().cast(), data.as_ptr(), ptr::null(), &mut result);
        assert_eq!(status, RduStatus::InvalidUtf8);
        assert!(result.is_null());

        let config = CString::new("/nonexistent/config.toml").unwrap();
        let status = rdutest_run(config.as_ptr(), data.as_ptr(), ptr::null(), &mut result);
        assert_eq!(status, RduStatus::Input);
        assert!(result.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn full_run_exposes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data) = write_dataset(dir.path());
    unsafe {
        let mut options = rdutest_options_default();
        options.model = 1;
        options.bootstrap = 200;
        let alphas = [0.05, 0.01];
        options.alphas = alphas.as_ptr();
        options.alpha_count = alphas.len();

        let mut result: *mut RduResult = ptr::null_mut();
        let status = rdutest_run(config.as_ptr(), data.as_ptr(), &options, &mut result);
        assert_eq!(status, RduStatus::Ok, "run failed: {}", last_error());
        assert!(!result.is_null());

        // The counterexample dataset lies outside the EU cone.
        let t_n = rdutest_result_t_n(result);
        let p = rdutest_result_p_value(result);
        assert!(t_n > 1.0, "t_n = {t_n}");
        assert!(p < 0.01, "p = {p}");
        assert!(rdutest_result_tau_n(result) > 0.0);
        assert_eq!(rdutest_result_sample_size(result), 1200);
        assert!(rdutest_result_order_count(result) >= 1);

        assert_eq!(rdutest_result_alpha_count(result), 2);
        assert_eq!(rdutest_result_alpha(result, 0), 0.05);
        assert_eq!(rdutest_result_reject(result, 0), 1);
        assert_eq!(rdutest_result_reject(result, 1), 1);
        assert!(rdutest_result_critical_value(result, 0) < t_n);
        assert_eq!(rdutest_result_reject(result, 2), -1);
        assert!(rdutest_result_alpha(result, 2).is_nan());

        let json = rdutest_result_report_json(result);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["model"], "eu");
        assert_eq!(parsed["p_value"].as_f64().unwrap(), p);
        rdutest_string_free(json);

        rdutest_result_free(result);
        // NULL frees are no-ops.
        rdutest_result_free(ptr::null_mut());
        rdutest_string_free(ptr::null_mut());
    }
}

#[test]
fn null_handles_degrade_gracefully() {
    unsafe {
        assert!(rdutest_result_t_n(ptr::null()).is_nan());
        assert!(rdutest_result_p_value(ptr::null()).is_nan());
        assert_eq!(rdutest_result_sample_size(ptr::null()), 0);
        assert_eq!(rdutest_result_order_count(ptr::null()), 0);
        assert_eq!(rdutest_result_reject(ptr::null(), 0), -1);
        assert!(rdutest_result_report_json(ptr::null()).is_null());
        assert!(last_error().contains("NULL"));
    }
}

#[test]
fn version_matches_the_crate() {
    let version = unsafe { CStr::from_ptr(rdutest_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the committed header, links the static
/// library, and runs it end to end. Proves the exported symbols and the
/// header agree.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let static_lib = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("librdutest_ffi.a");
    assert!(
        static_lib.exists(),
        "static library missing at {}",
        static_lib.display()
    );

    let dir = tempfile::tempdir().unwrap();
    let (config, data) = write_dataset(dir.path());

    let c_source = r#"
#include <stdio.h>
#include "rdutest.h"

int main(int argc, char **argv) {
    if (argc != 3) return 10;
    RduOptions options = rdutest_options_default();
    options.model = 1;
    options.bootstrap = 150;
    RduResult *result = NULL;
    RduStatus status = rdutest_run(argv[1], argv[2], &options, &result);
    if (status != RDU_STATUS_OK) {
        fprintf(stderr, "run failed (%d): %s\n", (int)status, rdutest_last_error());
        return 11;
    }
    printf("version=%s\n", rdutest_version());
    printf("t_n=%.6f p=%.6f reject=%d\n",
           rdutest_result_t_n(result),
           rdutest_result_p_value(result),
           rdutest_result_reject(result, 0));
    char *json = rdutest_result_report_json(result);
    if (!json) return 12;
    printf("json_bytes=%zu\n", __builtin_strlen(json));
    rdutest_string_free(json);
    rdutest_result_free(result);
    return 0;
}
"#;
    let source_path = dir.path().join("smoke.c");
    let program_path = dir.path().join("smoke");
    std::fs::write(&source_path, c_source).unwrap();

    let compile = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&source_path)
        .arg(&static_lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&program_path)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&program_path)
        .arg(config.to_str().unwrap())
        .arg(data.to_str().unwrap())
        .output()
        .expect("program runs");
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "program failed:\nstdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("reject=1"), "unexpected output:\n{stdout}");
    assert!(
        stdout.contains(concat!("version=", env!("CARGO_PKG_VERSION"))),
        "unexpected output:\n{stdout}"
    );
}
