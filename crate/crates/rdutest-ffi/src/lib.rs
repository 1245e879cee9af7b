//! C interface to the cone test: load a dataset config and a choice CSV,
//! run the full pipeline, and read the results through an opaque handle.
//!
//! Conventions: functions never unwind across the boundary; getters accept
//! NULL handles (returning NaN or -1 and recording an error); strings
//! returned as `char*` belong to the caller and are released with
//! [`rdutest_string_free`]; the last-error string is thread-local and valid
//! until the next interface call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rdutest::choices::load_choices;
use rdutest::cone::{build_b, ks_bootstrap, MenuIndex};
use rdutest::config::{load_config, LoadedConfig, TestSettings};
use rdutest::orders::{compute_order_set, factorial, ModelKind, SearchSettings};
use rdutest::report::{build_report, render_json, Report};
use rdutest::Error;

/// Outcome of an interface call. Mirrors the command-line exit codes for
/// input and solver failures.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RduStatus {
    Ok = 0,
    NullArgument = 1,
    Input = 2,
    Solver = 3,
    InvalidUtf8 = 4,
    Panic = 5,
}

/// Overrides applied on top of the config's `[test]` section. Zero-valued
/// fields keep the config's setting; see the per-field comments.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RduOptions {
    /// 0 keeps the config model, 1 forces EU, 2 forces RDEU.
    pub model: i32,
    /// Tri-state: 0 keeps the config, positive forces the restriction on,
    /// negative forces it off.
    pub monotone: i32,
    /// Tri-state, as for `monotone`.
    pub convex: i32,
    /// Feasibility margin; kept when not finite and positive.
    pub eps: f64,
    /// Restarts of the feasibility search per order; 0 keeps the config.
    pub restarts: u32,
    /// Bootstrap replications; 0 keeps the config.
    pub bootstrap: u32,
    /// Master seed, read only when `has_seed` is nonzero.
    pub seed: u64,
    pub has_seed: i32,
    /// Optional test levels in (0, 1/2); NULL or count 0 keeps the config.
    pub alphas: *const f64,
    pub alpha_count: usize,
}

/// A finished test run. Opaque; read it through the `rdutest_result_*`
/// getters and release it with [`rdutest_result_free`].
pub struct RduResult {
    report: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes stripped");
    });
}

fn fail(status: RduStatus, message: &str) -> RduStatus {
    set_last_error(message);
    status
}

fn status_of(e: &Error) -> RduStatus {
    match e.exit_code() {
        2 => RduStatus::Input,
        _ => RduStatus::Solver,
    }
}

/// The error message of the most recent failed call on this thread, empty
/// when the last call succeeded. The pointer is invalidated by the next
/// interface call on the same thread.
#[no_mangle]
pub extern "C" fn rdutest_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");

/// Library version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn rdutest_version() -> *const c_char {
    VERSION.as_ptr() as *const c_char
}

/// Options that keep every config setting unchanged.
#[no_mangle]
pub extern "C" fn rdutest_options_default() -> RduOptions {
    RduOptions {
        model: 0,
        monotone: 0,
        convex: 0,
        eps: 0.0,
        restarts: 0,
        bootstrap: 0,
        seed: 0,
        has_seed: 0,
        alphas: std::ptr::null(),
        alpha_count: 0,
    }
}

unsafe fn path_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, (RduStatus, String)> {
    if ptr.is_null() {
        return Err((RduStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| (RduStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn apply_options(
    test: &mut TestSettings,
    o: &RduOptions,
    alphas: Option<&[f64]>,
) -> rdutest::Result<()> {
    match o.model {
        0 => {}
        1 => test.model = ModelKind::Eu,
        2 => test.model = ModelKind::Rdeu,
        m => return Err(Error::invalid(format!("unknown model code {m}"))),
    }
    if o.monotone != 0 {
        test.shape.monotone = o.monotone > 0;
    }
    if o.convex != 0 {
        test.shape.convex = o.convex > 0;
    }
    if o.eps.is_finite() && o.eps > 0.0 {
        test.eps = o.eps;
    }
    if o.restarts > 0 {
        test.restarts = o.restarts;
    }
    if o.bootstrap > 0 {
        test.bootstrap = o.bootstrap;
    }
    if o.has_seed != 0 {
        test.seed = o.seed;
    }
    if let Some(a) = alphas {
        test.alphas = a.to_vec();
    }
    Ok(())
}

fn run_pipeline(
    config_path: &Path,
    data_path: &Path,
    options: &RduOptions,
    alphas: Option<&[f64]>,
) -> rdutest::Result<Report> {
    let LoadedConfig { catalog, mut test } = load_config(config_path)?;
    apply_options(&mut test, options, alphas)?;

    let loaded = load_choices(data_path, &catalog)?;
    let settings = SearchSettings {
        model: test.model,
        shape: test.shape,
        eps: test.eps,
        restarts: test.restarts,
        seed: test.seed,
    };
    let order_set = compute_order_set(&catalog.universe, &settings)?;
    let index = MenuIndex::from_data(&loaded.data)?;
    let b = build_b(&order_set, &index, catalog.universe.len())?;
    let result = ks_bootstrap(&loaded.data, &b, test.bootstrap, &test.alphas, test.seed)?;
    Ok(build_report(
        &test,
        &order_set,
        factorial(catalog.universe.len()),
        &result,
        loaded.data.min_menu_total(),
        index.menu_count(),
        loaded.dropped_menus,
    ))
}

/// Runs the cone test on `config_path` (dataset TOML) and `data_path`
/// (choice CSV). `options` may be NULL for config defaults. On success
/// writes a fresh handle to `*out_result` and returns `Ok`; on failure
/// leaves `*out_result` NULL and records a message for
/// [`rdutest_last_error`].
///
/// # Safety
/// `config_path` and `data_path` must be NUL-terminated strings; `options`,
/// when non-NULL, must point to a valid [`RduOptions`] whose `alphas` array
/// holds `alpha_count` doubles; `out_result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rdutest_run(
    config_path: *const c_char,
    data_path: *const c_char,
    options: *const RduOptions,
    out_result: *mut *mut RduResult,
) -> RduStatus {
    set_last_error("");
    if out_result.is_null() {
        return fail(RduStatus::NullArgument, "out_result is NULL");
    }
    *out_result = std::ptr::null_mut();

    let config = match path_arg(config_path, "config_path") {
        Ok(s) => s,
        Err((status, msg)) => return fail(status, &msg),
    };
    let data = match path_arg(data_path, "data_path") {
        Ok(s) => s,
        Err((status, msg)) => return fail(status, &msg),
    };
    let defaults = rdutest_options_default();
    let opts = if options.is_null() {
        defaults
    } else {
        *options
    };
    let alphas: Option<Vec<f64>> = if opts.alphas.is_null() || opts.alpha_count == 0 {
        None
    } else {
        Some(std::slice::from_raw_parts(opts.alphas, opts.alpha_count).to_vec())
    };

    let outcome = catch_unwind(AssertUnwindSafe(|| {
        run_pipeline(Path::new(config), Path::new(data), &opts, alphas.as_deref())
    }));
    match outcome {
        Ok(Ok(report)) => {
            *out_result = Box::into_raw(Box::new(RduResult { report }));
            RduStatus::Ok
        }
        Ok(Err(e)) => fail(status_of(&e), &e.to_string()),
        Err(_) => fail(RduStatus::Panic, "internal panic; no result was created"),
    }
}

unsafe fn result_ref<'a>(handle: *const RduResult) -> Option<&'a RduResult> {
    if handle.is_null() {
        set_last_error("result handle is NULL");
        None
    } else {
        Some(&*handle)
    }
}

/// Test statistic T_n; NaN on a NULL handle.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_t_n(handle: *const RduResult) -> f64 {
    result_ref(handle).map_or(f64::NAN, |r| r.report.t_n)
}

/// Bootstrap p-value; NaN on a NULL handle.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_p_value(handle: *const RduResult) -> f64 {
    result_ref(handle).map_or(f64::NAN, |r| r.report.p_value)
}

/// Tightening parameter tau_n; NaN on a NULL handle.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_tau_n(handle: *const RduResult) -> f64 {
    result_ref(handle).map_or(f64::NAN, |r| r.report.tau_n)
}

/// Total observations across menus; 0 on a NULL handle.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_sample_size(handle: *const RduResult) -> u64 {
    result_ref(handle).map_or(0, |r| r.report.sample_size)
}

/// Number of rationalizable orders in the cone; 0 on a NULL handle.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_order_count(handle: *const RduResult) -> usize {
    result_ref(handle).map_or(0, |r| r.report.order_count)
}

/// Number of test levels the run evaluated; 0 on a NULL handle.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_alpha_count(handle: *const RduResult) -> usize {
    result_ref(handle).map_or(0, |r| r.report.critical_values.len())
}

/// The i-th test level; NaN when the handle is NULL or `index` is out of
/// range.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_alpha(handle: *const RduResult, index: usize) -> f64 {
    let Some(r) = result_ref(handle) else {
        return f64::NAN;
    };
    match r.report.critical_values.get(index) {
        Some(cv) => cv.alpha,
        None => {
            set_last_error("test level index out of range");
            f64::NAN
        }
    }
}

/// The i-th bootstrap critical value; NaN when the handle is NULL or
/// `index` is out of range.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_critical_value(
    handle: *const RduResult,
    index: usize,
) -> f64 {
    let Some(r) = result_ref(handle) else {
        return f64::NAN;
    };
    match r.report.critical_values.get(index) {
        Some(cv) => cv.value,
        None => {
            set_last_error("test level index out of range");
            f64::NAN
        }
    }
}

/// Rejection decision at the i-th test level: 1 reject, 0 fail to reject,
/// -1 when the handle is NULL or `index` is out of range.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_reject(handle: *const RduResult, index: usize) -> i32 {
    let Some(r) = result_ref(handle) else {
        return -1;
    };
    match r.report.critical_values.get(index) {
        Some(cv) => i32::from(cv.reject),
        None => {
            set_last_error("test level index out of range");
            -1
        }
    }
}

/// The full report as a JSON document. The returned string belongs to the
/// caller; release it with [`rdutest_string_free`]. NULL on failure.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`].
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_report_json(handle: *const RduResult) -> *mut c_char {
    let Some(r) = result_ref(handle) else {
        return std::ptr::null_mut();
    };
    let rendered = match render_json(&r.report) {
        Ok(s) => s,
        Err(e) => {
            set_last_error(&e.to_string());
            return std::ptr::null_mut();
        }
    };
    match CString::new(rendered) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_last_error("report contains an interior NUL byte");
            std::ptr::null_mut()
        }
    }
}

/// Releases a string obtained from this interface. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a pointer returned by [`rdutest_result_report_json`],
/// released at most once.
#[no_mangle]
pub unsafe extern "C" fn rdutest_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a result handle. NULL is ignored.
///
/// # Safety
/// `handle` must be NULL or a pointer from [`rdutest_run`], released at most
/// once.
#[no_mangle]
pub unsafe extern "C" fn rdutest_result_free(handle: *mut RduResult) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
