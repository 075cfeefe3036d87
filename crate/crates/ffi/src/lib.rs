//! C interface to `lipcert`.
//!
//! Networks and reports are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns a
//! [`LipcertStatus`]; the message for the most recent failure on the calling
//! thread is available from [`lipcert_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lipcert::certificates::DEFAULT_VARTHETA_BUDGET;
use lipcert::{
    certify_method, CertificateReport, CertifyOptions, LipError, Method, Network, NormSpec,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipcertStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    UnsupportedNorm = 4,
    NotApplicable = 5,
    Budget = 6,
    Internal = 7,
}

/// Which bound `lipcert_certify` computes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipcertMethod {
    Auto = 0,
    Product = 1,
    Theta = 2,
    Vartheta = 3,
    Positive = 4,
    Absolute = 5,
}

/// Individual values of a report, for `lipcert_report_value`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipcertBound {
    Product = 0,
    Linear = 1,
    Theta = 2,
    Vartheta = 3,
    VarthetaSampleLower = 4,
    PositiveCollapse = 5,
    Absolute = 6,
    Certified = 7,
}

/// Certification settings. Null norm strings mean the Euclidean norm; a zero
/// budget means the library default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LipcertOptions {
    pub method: LipcertMethod,
    pub norm_in: *const c_char,
    pub norm_out: *const c_char,
    pub budget: u64,
    pub sample_trials: u32,
    pub seed: u64,
}

/// Opaque network handle.
pub struct LipcertNetwork(Network);

/// Opaque certificate report handle.
pub struct LipcertReport(CertificateReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &LipError) -> LipcertStatus {
    match e {
        LipError::InvalidInput(_) | LipError::Shape(_) | LipError::UnknownActivation(_) => {
            LipcertStatus::InvalidInput
        }
        LipError::Parse { .. } => LipcertStatus::Parse,
        LipError::UnsupportedNorm(_) => LipcertStatus::UnsupportedNorm,
        LipError::NotApplicable(_) => LipcertStatus::NotApplicable,
        LipError::Budget { .. } => LipcertStatus::Budget,
        LipError::Internal(_) => LipcertStatus::Internal,
    }
}

fn fail(e: LipError) -> LipcertStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Runs `f`, turning panics into `Internal` and recording messages.
fn guard(f: impl FnOnce() -> Result<(), LipcertStatus>) -> LipcertStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LipcertStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            LipcertStatus::Internal
        }
    }
}

fn null(what: &str) -> LipcertStatus {
    set_error(format!("{what} is null"));
    LipcertStatus::NullPointer
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, LipcertStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        LipcertStatus::InvalidInput
    })
}

unsafe fn read_norm(p: *const c_char, what: &str) -> Result<NormSpec, LipcertStatus> {
    if p.is_null() {
        return Ok(NormSpec::euclidean());
    }
    read_str(p, what)?.parse().map_err(fail)
}

unsafe fn store_network(out: *mut *mut LipcertNetwork, net: Network) {
    *out = Box::into_raw(Box::new(LipcertNetwork(net)));
}

/// Parses a lipnet document.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipcert_network_parse(
    text: *const c_char,
    out: *mut *mut LipcertNetwork,
) -> LipcertStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let doc = read_str(text, "text")?;
        store_network(out, Network::parse(doc).map_err(fail)?);
        Ok(())
    })
}

/// Reads and parses a lipnet file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lipcert_network_load(
    path: *const c_char,
    out: *mut *mut LipcertNetwork,
) -> LipcertStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = read_str(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| {
            set_error(format!("cannot read {path}: {e}"));
            LipcertStatus::InvalidInput
        })?;
        store_network(out, Network::parse(&text).map_err(fail)?);
        Ok(())
    })
}

/// Releases a network. Null is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lipcert_network_free(net: *mut LipcertNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Input dimension, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipcert_network_input_dim(net: *const LipcertNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.input_dim())
}

/// Output dimension, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipcert_network_output_dim(net: *const LipcertNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.output_dim())
}

/// Number of layers, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipcert_network_depth(net: *const LipcertNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.depth())
}

/// Evaluates the network at `x` (length `x_len`) into `y` (length `y_len`).
///
/// # Safety
/// `x` and `y` must point to at least `x_len` and `y_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lipcert_network_forward(
    net: *const LipcertNetwork,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> LipcertStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        if x.is_null() {
            return Err(null("x"));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        let out_dim = net.0.output_dim();
        if y_len != out_dim {
            return Err(fail(LipError::Shape(format!(
                "output buffer holds {y_len} values but the network produces {out_dim}"
            ))));
        }
        let input = std::slice::from_raw_parts(x, x_len);
        let value = net.0.forward(input).map_err(fail)?;
        std::slice::from_raw_parts_mut(y, y_len).copy_from_slice(&value);
        Ok(())
    })
}

/// Defaults: automatic method, Euclidean norms, default budget, 64 sample
/// trials, seed 0.
#[no_mangle]
pub extern "C" fn lipcert_options_default() -> LipcertOptions {
    LipcertOptions {
        method: LipcertMethod::Auto,
        norm_in: ptr::null(),
        norm_out: ptr::null(),
        budget: DEFAULT_VARTHETA_BUDGET,
        sample_trials: 64,
        seed: 0,
    }
}

/// Computes a certificate report. `options` may be null for the defaults.
///
/// # Safety
/// `net` must be a live handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lipcert_certify(
    net: *const LipcertNetwork,
    options: *const LipcertOptions,
    out: *mut *mut LipcertReport,
) -> LipcertStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        let o = match options.as_ref() {
            Some(o) => *o,
            None => lipcert_options_default(),
        };
        let opts = CertifyOptions {
            norm_in: read_norm(o.norm_in, "norm_in")?,
            norm_out: read_norm(o.norm_out, "norm_out")?,
            vartheta_budget: if o.budget == 0 {
                DEFAULT_VARTHETA_BUDGET
            } else {
                o.budget
            },
            sample_trials: o.sample_trials as usize,
            seed: o.seed,
            timings: false,
        };
        let method = match o.method {
            LipcertMethod::Auto => Method::Auto,
            LipcertMethod::Product => Method::Product,
            LipcertMethod::Theta => Method::Theta,
            LipcertMethod::Vartheta => Method::Vartheta,
            LipcertMethod::Positive => Method::Positive,
            LipcertMethod::Absolute => Method::Absolute,
        };
        let report = certify_method(&net.0, &opts, method).map_err(fail)?;
        *out = Box::into_raw(Box::new(LipcertReport(report)));
        Ok(())
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lipcert_report_free(report: *mut LipcertReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Reads one value of a report. Returns `NotApplicable` when the bound was
/// not computed.
///
/// # Safety
/// `report` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lipcert_report_value(
    report: *const LipcertReport,
    which: LipcertBound,
    out: *mut f64,
) -> LipcertStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = match which {
            LipcertBound::Product => Some(r.product_bound),
            LipcertBound::Linear => Some(r.linear_lower),
            LipcertBound::Theta => r.theta,
            LipcertBound::Vartheta => r.vartheta,
            LipcertBound::VarthetaSampleLower => r.vartheta_sample_lower,
            LipcertBound::PositiveCollapse => r.positive_collapse,
            LipcertBound::Absolute => r.absolute_bound,
            LipcertBound::Certified => Some(r.certified),
        };
        match v {
            Some(v) => {
                *out = v;
                Ok(())
            }
            None => {
                set_error(format!("{which:?} was not computed"));
                Err(LipcertStatus::NotApplicable)
            }
        }
    })
}

/// Whether the reported ϑ comes from exhaustive enumeration.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipcert_report_vartheta_exact(report: *const LipcertReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.vartheta_exact)
}

/// The report as JSON. Free with `lipcert_string_free`; null on failure.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipcert_report_json(report: *const LipcertReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        null("report");
        return ptr::null_mut();
    };
    match CString::new(r.0.to_json()) {
        Ok(s) => s.into_raw(),
        Err(_) => ptr::null_mut(),
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lipcert_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Declared averagedness constant of a catalog activation spec such as
/// `"elu(beta=0.5)"`.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lipcert_activation_alpha(
    spec: *const c_char,
    out: *mut f64,
) -> LipcertStatus {
    guard(|| {
        let spec = read_str(spec, "spec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let act = lipcert::network::parse_scalar_spec(spec).map_err(|msg| {
            set_error(msg);
            LipcertStatus::InvalidInput
        })?;
        *out = act.alpha();
        Ok(())
    })
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn lipcert_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn lipcert_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
