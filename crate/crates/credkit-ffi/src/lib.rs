//! C ABI for the credkit earthquake detection toolkit.
//!
//! Handles (`CkWaveform`, `CkModel`, `CkDetectionList`) are opaque: they
//! are created and destroyed only through these functions, and every
//! `*_free` accepts NULL. Functions that can fail return a [`CkStatus`];
//! on failure, [`ck_last_error`] returns a message for the calling thread.
//! Model arithmetic runs in 32-bit floats, matching the model file format.
//!
//! The generated header lives at `include/credkit.h`.

use credkit::cred::{load_model, CredModel};
use credkit::detectors::{cred_detect, Detection, Method};
use credkit::error::CredError;
use credkit::waveio::{read_waveform, Waveform3C};
use libc::c_char;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of a fallible C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidString = 2,
    /// The input data or configuration was rejected.
    DataError = 3,
    /// An internal invariant failed; not caused by the input.
    InternalError = 4,
}

/// Which detector produced a detection.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkMethod {
    Cred = 0,
    StaLta = 1,
    Template = 2,
}

/// One detected event interval, in seconds from the start of the scanned
/// waveform.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CkDetection {
    pub method: CkMethod,
    pub start_s: f64,
    pub end_s: f64,
    pub peak_score: f64,
}

/// Opaque three-component waveform handle.
pub struct CkWaveform(Waveform3C);

/// Opaque detector model handle.
pub struct CkModel(CredModel<f32>);

/// Opaque list of detections.
pub struct CkDetectionList(Vec<Detection>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg
        .chars()
        .map(|c| if c == '\0' { ' ' } else { c })
        .collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(e: &CredError) -> CkStatus {
    set_error(&e.to_string());
    if e.exit_code() == 3 {
        CkStatus::InternalError
    } else {
        CkStatus::DataError
    }
}

fn null_arg(name: &str) -> CkStatus {
    set_error(&format!("{name} must not be NULL"));
    CkStatus::NullArgument
}

/// Runs `f`, converting a panic into `InternalError` instead of unwinding
/// across the C boundary.
fn guarded(f: impl FnOnce() -> CkStatus) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CkStatus::InternalError
        }
    }
}

/// # Safety
///
/// `s` must be a valid NUL-terminated C string or NULL.
unsafe fn cstr<'a>(s: *const c_char, name: &str) -> Result<&'a str, CkStatus> {
    if s.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        CkStatus::InvalidString
    })
}

/// Returns the library version as a static string.
#[no_mangle]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the error message from the most recent failing call on this
/// thread (empty string if none). The pointer stays valid until the next
/// failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn ck_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Reads a waveform CSV file into a new handle.
///
/// # Safety
///
/// `path` must be a valid NUL-terminated C string; `out` must be a valid
/// pointer. On `Ok`, `*out` owns the waveform and must be released with
/// [`ck_waveform_free`].
#[no_mangle]
pub unsafe extern "C" fn ck_waveform_read(
    path: *const c_char,
    out: *mut *mut CkWaveform,
) -> CkStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let path = match cstr(path, "path") {
        Ok(p) => p.to_owned(),
        Err(s) => return s,
    };
    guarded(|| match read_waveform(&path) {
        Ok(wf) => {
            *out = Box::into_raw(Box::new(CkWaveform(wf)));
            CkStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Builds a waveform from three equal-length component arrays
/// (east, north, vertical) sampled at `sampling_rate` Hz.
///
/// # Safety
///
/// `e`, `n`, and `z` must each point to `len` readable doubles; `out` must
/// be a valid pointer. On `Ok`, `*out` owns a copy of the samples and must
/// be released with [`ck_waveform_free`].
#[no_mangle]
pub unsafe extern "C" fn ck_waveform_create(
    e: *const f64,
    n: *const f64,
    z: *const f64,
    len: usize,
    sampling_rate: f64,
    out: *mut *mut CkWaveform,
) -> CkStatus {
    if out.is_null() {
        return null_arg("out");
    }
    if e.is_null() || n.is_null() || z.is_null() {
        return null_arg("component arrays");
    }
    let e = std::slice::from_raw_parts(e, len).to_vec();
    let n = std::slice::from_raw_parts(n, len).to_vec();
    let z = std::slice::from_raw_parts(z, len).to_vec();
    guarded(
        || match Waveform3C::new("c-api", 0.0, sampling_rate, e, n, z) {
            Ok(wf) => {
                *out = Box::into_raw(Box::new(CkWaveform(wf)));
                CkStatus::Ok
            }
            Err(err) => fail(&err),
        },
    )
}

/// Number of samples per component; 0 for NULL.
///
/// # Safety
///
/// `wf` must be NULL or a live pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ck_waveform_len(wf: *const CkWaveform) -> usize {
    if wf.is_null() {
        return 0;
    }
    unsafe { (*wf).0.len() }
}

/// Sampling rate in Hz; 0 for NULL.
///
/// # Safety
///
/// `wf` must be NULL or a live pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ck_waveform_sampling_rate(wf: *const CkWaveform) -> f64 {
    if wf.is_null() {
        return 0.0;
    }
    unsafe { (*wf).0.sampling_rate }
}

/// Releases a waveform handle. NULL is a no-op.
///
/// # Safety
///
/// `wf` must be a pointer returned by this library that has not already
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ck_waveform_free(wf: *mut CkWaveform) {
    if !wf.is_null() {
        drop(Box::from_raw(wf));
    }
}

/// Loads a model file written by the toolkit's `train` command.
///
/// # Safety
///
/// `path` must be a valid NUL-terminated C string; `out` must be a valid
/// pointer. On `Ok`, `*out` must be released with [`ck_model_free`].
#[no_mangle]
pub unsafe extern "C" fn ck_model_load(path: *const c_char, out: *mut *mut CkModel) -> CkStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let path = match cstr(path, "path") {
        Ok(p) => p.to_owned(),
        Err(s) => return s,
    };
    guarded(|| match load_model::<f32>(&path) {
        Ok(m) => {
            *out = Box::into_raw(Box::new(CkModel(m)));
            CkStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Releases a model handle. NULL is a no-op.
///
/// # Safety
///
/// `m` must be a pointer returned by this library that has not already
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ck_model_free(m: *mut CkModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Scans a continuous 100 Hz waveform with the model: moving windows of
/// `window_s` seconds every `stride_s` seconds, events extracted from the
/// stitched probability stream at `threshold`.
///
/// # Safety
///
/// `model` and `wf` must be live handles from this library; `out` must be
/// a valid pointer. On `Ok`, `*out` must be released with
/// [`ck_detections_free`].
#[no_mangle]
pub unsafe extern "C" fn ck_detect(
    model: *const CkModel,
    wf: *const CkWaveform,
    window_s: f64,
    stride_s: f64,
    threshold: f64,
    out: *mut *mut CkDetectionList,
) -> CkStatus {
    if out.is_null() {
        return null_arg("out");
    }
    if model.is_null() {
        return null_arg("model");
    }
    if wf.is_null() {
        return null_arg("wf");
    }
    let model = &(*model).0;
    let trace = &(*wf).0;
    guarded(
        || match cred_detect(model, trace, window_s, stride_s, threshold) {
            Ok(dets) => {
                *out = Box::into_raw(Box::new(CkDetectionList(dets)));
                CkStatus::Ok
            }
            Err(e) => fail(&e),
        },
    )
}

/// Number of detections in the list; 0 for NULL.
///
/// # Safety
///
/// `list` must be NULL or a live pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ck_detections_len(list: *const CkDetectionList) -> usize {
    if list.is_null() {
        return 0;
    }
    unsafe { (*list).0.len() }
}

/// Copies detection `index` into `*out`.
///
/// # Safety
///
/// `list` must be a live handle from this library; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_detections_get(
    list: *const CkDetectionList,
    index: usize,
    out: *mut CkDetection,
) -> CkStatus {
    if list.is_null() {
        return null_arg("list");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let dets = &(*list).0;
    let Some(d) = dets.get(index) else {
        set_error(&format!(
            "index {index} out of range for {} detections",
            dets.len()
        ));
        return CkStatus::DataError;
    };
    *out = CkDetection {
        method: match d.method {
            Method::Cred => CkMethod::Cred,
            Method::StaLta => CkMethod::StaLta,
            Method::Template => CkMethod::Template,
        },
        start_s: d.start_s,
        end_s: d.end_s,
        peak_score: d.peak_score,
    };
    CkStatus::Ok
}

/// Releases a detection list. NULL is a no-op.
///
/// # Safety
///
/// `list` must be a pointer returned by this library that has not already
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ck_detections_free(list: *mut CkDetectionList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}
