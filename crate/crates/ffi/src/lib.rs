//! C ABI for the accmarket engine.
//!
//! Every fallible function returns an [`AmStatus`]; on failure a message is
//! kept per thread and can be read with [`am_last_error`]. Objects are
//! opaque handles released with their matching `_free` function. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use accmarket::config::RunConfig;
use accmarket::data_io::{load_csv, sample_gaussian_market};
use accmarket::dynamics::{run_dynamics, Trajectory};
use accmarket::market::{exact_shares, CorrectnessMatrix};
use accmarket::threshold::{analytic_best_response, GaussianMarketSpec};
use accmarket::{Dataset, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Runtime = 5,
    Panic = 6,
}

/// A labelled dataset.
pub struct AmDataset(Dataset);

/// The result of one dynamics run.
pub struct AmTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> AmStatus {
    match e {
        Error::Config(_) => AmStatus::Config,
        Error::Io(_) | Error::Csv(_) => AmStatus::Io,
        Error::Learner { .. } | Error::NonFiniteObjective { .. } => AmStatus::Runtime,
        _ => AmStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (AmStatus, String)>) -> AmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            AmStatus::Panic
        }
    }
}

fn lift<T>(r: accmarket::Result<T>) -> Result<T, (AmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (AmStatus, String) {
    (AmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (AmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (AmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn am_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn am_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from `m` row-major rows of `d` features and labels in
/// {-1, +1}.
///
/// # Safety
/// `features` must hold `m * d` values, `labels` `m` values, and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn am_dataset_new(
    features: *const f64,
    m: usize,
    d: usize,
    labels: *const i8,
    out: *mut *mut AmDataset,
) -> AmStatus {
    guard(|| {
        if features.is_null() || labels.is_null() || out.is_null() {
            return Err(null("features, labels or out"));
        }
        let len = m.checked_mul(d).ok_or((AmStatus::InvalidArgument, "m * d overflows".into()))?;
        let xs = std::slice::from_raw_parts(features, len).to_vec();
        let ys = std::slice::from_raw_parts(labels, m).to_vec();
        let data = lift(Dataset::from_flat(xs, d, ys))?;
        store(out, AmDataset(data));
        Ok(())
    })
}

/// Loads a numeric CSV; rows whose `label_column` equals `positive_label`
/// get label +1, the rest -1.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn am_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    positive_label: *const c_char,
    out: *mut *mut AmDataset,
) -> AmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = lift(load_csv(
            text(path, "path")?,
            text(label_column, "label_column")?,
            text(positive_label, "positive_label")?,
        ))?;
        store(out, AmDataset(data));
        Ok(())
    })
}

/// Draws `m` one-feature examples: class y has mean `a * y` and standard
/// deviation `sigma_neg` or `sigma_pos`; P(y = +1) = `prior`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn am_dataset_sample_gaussian(
    a: f64,
    sigma_neg: f64,
    sigma_pos: f64,
    prior: f64,
    m: usize,
    seed: u64,
    out: *mut *mut AmDataset,
) -> AmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lift(GaussianMarketSpec::new(a, sigma_neg, sigma_pos, prior))?;
        store(out, AmDataset(lift(sample_gaussian_market(&spec, m, seed))?));
        Ok(())
    })
}

/// Number of examples; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn am_dataset_len(data: *const AmDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Number of features; 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn am_dataset_dim(data: *const AmDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn am_dataset_free(data: *mut AmDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Market shares and welfare of an `n x m` correctness table given
/// row-major as 0/1 bytes. `shares` receives `n` values.
///
/// # Safety
/// `correct` must hold `n * m` bytes, `shares` room for `n` values, and
/// `welfare` must be writable.
#[no_mangle]
pub unsafe extern "C" fn am_market_shares(
    correct: *const u8,
    n: usize,
    m: usize,
    shares: *mut f64,
    welfare: *mut f64,
) -> AmStatus {
    guard(|| {
        if correct.is_null() || shares.is_null() || welfare.is_null() {
            return Err(null("correct, shares or welfare"));
        }
        let len = n.checked_mul(m).ok_or((AmStatus::InvalidArgument, "n * m overflows".into()))?;
        let cells = std::slice::from_raw_parts(correct, len);
        let rows = cells.chunks(m.max(1)).take(n).map(|r| r.iter().map(|&b| b != 0).collect()).collect();
        let c = lift(CorrectnessMatrix::new(rows))?;
        let e = exact_shares(&c);
        std::slice::from_raw_parts_mut(shares, n).copy_from_slice(&e.shares());
        *welfare = e.welfare();
        Ok(())
    })
}

/// Best threshold response to an opponent at `tau_opp`, searching
/// `[lo, hi]` (either may be infinite).
///
/// # Safety
/// `tau` and `share` must be writable.
#[no_mangle]
pub unsafe extern "C" fn am_threshold_best_response(
    a: f64,
    sigma_neg: f64,
    sigma_pos: f64,
    prior: f64,
    tau_opp: f64,
    lo: f64,
    hi: f64,
    tau: *mut f64,
    share: *mut f64,
) -> AmStatus {
    guard(|| {
        if tau.is_null() || share.is_null() {
            return Err(null("tau or share"));
        }
        let spec = lift(GaussianMarketSpec::new(a, sigma_neg, sigma_pos, prior))?;
        let br = lift(analytic_best_response(&spec, tau_opp, lo, hi))?;
        *tau = br.tau;
        *share = br.share;
        Ok(())
    })
}

/// Runs best-response dynamics on `train` with the providers and dynamics
/// settings of a TOML run configuration (any data section is ignored).
///
/// # Safety
/// `config_toml` must be NUL-terminated, `train` a live handle, `test` null
/// or a live handle, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn am_dynamics_run(
    config_toml: *const c_char,
    train: *const AmDataset,
    test: *const AmDataset,
    out: *mut *mut AmTrajectory,
) -> AmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let train = train.as_ref().ok_or_else(|| null("train"))?;
        let cfg = lift(RunConfig::parse(text(config_toml, "config_toml")?).and_then(|c| c.dynamics()))?;
        let t = lift(run_dynamics(&cfg, &train.0, test.as_ref().map(|d| &d.0)))?;
        store(out, AmTrajectory(t));
        Ok(())
    })
}

/// Number of providers; 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn am_trajectory_providers(t: *const AmTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.n)
}

/// Rounds played, not counting the initialization.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn am_trajectory_rounds(t: *const AmTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.rounds_played())
}

/// Number of adopted moves.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn am_trajectory_moves(t: *const AmTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.adopted_moves())
}

/// True when the last round adopted no move.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn am_trajectory_converged(t: *const AmTrajectory) -> bool {
    t.as_ref().is_some_and(|t| t.0.converged)
}

/// Final train shares into `shares[0..len]` and final train welfare.
///
/// # Safety
/// `t` must be a live handle, `shares` room for `len` values, `welfare`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn am_trajectory_final(
    t: *const AmTrajectory,
    shares: *mut f64,
    len: usize,
    welfare: *mut f64,
) -> AmStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        if shares.is_null() || welfare.is_null() {
            return Err(null("shares or welfare"));
        }
        let fin = t.0.final_train();
        if len != fin.shares.len() {
            return Err((
                AmStatus::InvalidArgument,
                format!("buffer holds {len} shares, trajectory has {}", fin.shares.len()),
            ));
        }
        std::slice::from_raw_parts_mut(shares, len).copy_from_slice(&fin.shares);
        *welfare = fin.welfare;
        Ok(())
    })
}

/// The full trajectory as JSON. Release with [`am_string_free`].
///
/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn am_trajectory_json(t: *const AmTrajectory, out: *mut *mut c_char) -> AmStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = serde_json::to_string(&t.0).map_err(|e| (AmStatus::Runtime, e.to_string()))?;
        let s = CString::new(json).map_err(|e| (AmStatus::Runtime, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn am_trajectory_free(t: *mut AmTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn am_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
