//! C interface to `quenchdesign`.
//!
//! Every fallible function returns a [`QdStatus`] and writes results through
//! out-pointers. On failure a description is stored per thread and can be
//! read with [`qd_last_error_message`]. Handles are opaque and must be
//! released with their `_free` function. Matrices are column-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quenchdesign::chaos::{ipr_cue_reference, phase_gap_ratios, PhaseSpectrum};
use quenchdesign::cli::{run_chaos, run_converge, run_errors, run_imperfect};
use quenchdesign::config::ExperimentConfig;
use quenchdesign::imperfect::fidelity_correct;
use quenchdesign::measure::{falling_factorial_estimator, Shots};
use quenchdesign::renyi::{invert_higher_moment, invert_second_moment, predicted_error};
use quenchdesign::rng::{seeded, SeededRng};
use quenchdesign::unitaries::sample_cue;
use quenchdesign::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Config = 4,
    Numerical = 5,
    EstimatorUndefined = 6,
    Degenerate = 7,
    Unimplemented = 8,
    Io = 9,
    Panic = 10,
}

/// Sweep selector for [`qd_experiment_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdSweep {
    Converge = 0,
    Errors = 1,
    Imperfect = 2,
    Chaos = 3,
}

/// Seeded random number generator.
pub struct QdRng(SeededRng);

/// Parsed and validated experiment configuration.
pub struct QdExperiment(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QdStatus {
    match e {
        Error::Config(_) => QdStatus::Config,
        Error::Numerical { .. } => QdStatus::Numerical,
        Error::EstimatorUndefined(_) => QdStatus::EstimatorUndefined,
        Error::Degenerate(_) => QdStatus::Degenerate,
        Error::Unimplemented(_) => QdStatus::Unimplemented,
        Error::Io(_) | Error::Csv(_) => QdStatus::Io,
        _ => QdStatus::InvalidArgument,
    }
}

struct Fail(QdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QdStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QdStatus::Panic
        }
    }
}

/// Write `value` through `out`.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null("input array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn shots(n_m: u64) -> Shots {
    if n_m == 0 {
        Shots::Infinite
    } else {
        Shots::Finite(n_m)
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn qd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a generator seeded with `seed`.
#[no_mangle]
pub extern "C" fn qd_rng_new(seed: u64) -> *mut QdRng {
    Box::into_raw(Box::new(QdRng(seeded(seed))))
}

/// # Safety
/// `rng` must be null or a handle from [`qd_rng_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_rng_free(rng: *mut QdRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Draw a Haar-random `dim × dim` unitary into `re` and `im`, each of length
/// `dim * dim`, column-major.
///
/// # Safety
/// `rng` must be a live handle; `re` and `im` must be writable for `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn qd_sample_cue(rng: *mut QdRng, dim: usize, re: *mut f64, im: *mut f64) -> QdStatus {
    guard(|| {
        let rng = rng.as_mut().ok_or_else(|| null("rng"))?;
        if re.is_null() || im.is_null() {
            return Err(null("output matrix"));
        }
        if dim == 0 {
            return Err(Fail(QdStatus::InvalidArgument, "dim must be positive".into()));
        }
        let u = sample_cue(dim, &mut rng.0);
        for (k, z) in u.iter().enumerate() {
            re.add(k).write(z.re);
            im.add(k).write(z.im);
        }
        Ok(())
    })
}

/// Unbiased estimate of `P^n` from `b` hits in `n_m` shots.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_falling_factorial_estimator(b: u64, n_m: u64, n: u32, out: *mut f64) -> QdStatus {
    guard(|| put(out, falling_factorial_estimator(b, n_m, n)?))
}

/// Recover `Tr ρ` and `Tr ρ²` from the first two moments of an outcome of
/// weight `w` in a block of dimension `dim`.
///
/// # Safety
/// `tr1` and `tr2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_invert_second_moment(
    m1: f64,
    m2: f64,
    w: usize,
    dim: usize,
    tr1: *mut f64,
    tr2: *mut f64,
) -> QdStatus {
    guard(|| {
        let (a, b) = invert_second_moment(m1, m2, w, dim)?;
        put(tr1, a)?;
        put(tr2, b)
    })
}

/// Recover `Tr ρ^n` from the `n`-th moment of a single-state outcome and the
/// lower traces `Tr ρ, ..., Tr ρ^{n-1}`.
///
/// # Safety
/// `lower` must hold `lower_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_invert_higher_moment(
    n: u32,
    moment: f64,
    lower: *const f64,
    lower_len: usize,
    dim: usize,
    out: *mut f64,
) -> QdStatus {
    guard(|| put(out, invert_higher_moment(n, moment, slice(lower, lower_len)?, dim)?))
}

/// Planning-formula error of `p_n`; `n_m = 0` means infinitely many shots.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_predicted_error(
    n: u32,
    n_u: usize,
    n_m: u64,
    dim: usize,
    p_guess: f64,
    out: *mut f64,
) -> QdStatus {
    guard(|| {
        if n < 1 || n_u == 0 || dim == 0 {
            return Err(Fail(QdStatus::InvalidArgument, "n, n_u and dim must be positive".into()));
        }
        put(out, predicted_error(n, n_u, shots(n_m), dim, p_guess))
    })
}

/// Undo the purity loss from per-site misread probability `p` on `sites` sites.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_fidelity_correct(p2: f64, p: f64, sites: usize, out: *mut f64) -> QdStatus {
    guard(|| put(out, fidelity_correct(p2, p, sites)?))
}

/// Mean consecutive gap ratio of eigenphases on the unit circle.
///
/// # Safety
/// `phases` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_mean_gap_ratio(phases: *const f64, len: usize, out: *mut f64) -> QdStatus {
    guard(|| {
        let spec = PhaseSpectrum::new(slice(phases, len)?.iter().copied());
        put(out, phase_gap_ratios(&spec)?.mean())
    })
}

/// IPR of a Haar-random unitary given the spectrum of the state.
///
/// # Safety
/// `eigenvalues` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_ipr_cue_reference(eigenvalues: *const f64, len: usize, out: *mut f64) -> QdStatus {
    guard(|| put(out, ipr_cue_reference(slice(eigenvalues, len)?)))
}

/// Parse and validate a TOML experiment description.
///
/// # Safety
/// `toml` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_from_toml(toml: *const c_char, out: *mut *mut QdExperiment) -> QdStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml).to_str().map_err(|e| Fail(QdStatus::InvalidUtf8, e.to_string()))?;
        let cfg = ExperimentConfig::from_toml(text)?;
        put(out, Box::into_raw(Box::new(QdExperiment(cfg))))
    })
}

/// # Safety
/// `exp` must be null or a handle from [`qd_experiment_from_toml`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_free(exp: *mut QdExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Replace the master seed.
///
/// # Safety
/// `exp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_set_seed(exp: *mut QdExperiment, seed: u64) -> QdStatus {
    guard(|| {
        exp.as_mut().ok_or_else(|| null("experiment"))?.0.seed = seed;
        Ok(())
    })
}

/// Run a sweep and return its CSV text in `out_csv`; free it with
/// [`qd_string_free`].
///
/// # Safety
/// `exp` must be a live handle; `out_csv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_run(
    exp: *const QdExperiment,
    sweep: QdSweep,
    out_csv: *mut *mut c_char,
) -> QdStatus {
    guard(|| {
        let cfg = &exp.as_ref().ok_or_else(|| null("experiment"))?.0;
        if out_csv.is_null() {
            return Err(null("output pointer"));
        }
        let result = match sweep {
            QdSweep::Converge => run_converge(cfg),
            QdSweep::Errors => run_errors(cfg),
            QdSweep::Imperfect => run_imperfect(cfg),
            QdSweep::Chaos => run_chaos(cfg),
        }?;
        let text = CString::new(result.to_csv_string()?).map_err(|e| Fail(QdStatus::Io, e.to_string()))?;
        put(out_csv, text.into_raw())
    })
}

/// Hex SHA-256 of the configuration; free with [`qd_string_free`].
///
/// # Safety
/// `exp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_hash(exp: *const QdExperiment) -> *mut c_char {
    match exp.as_ref() {
        Some(e) => CString::new(e.0.hash()).map_or(ptr::null_mut(), CString::into_raw),
        None => {
            set_error("experiment is null".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
