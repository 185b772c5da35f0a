//! C ABI over `sfhe-core`.
//!
//! Handles are opaque pointers created by `*_new` and released by the matching
//! `*_free`. Every function returns an [`SfheStatus`]; on failure the message
//! is available from [`sfhe_last_error_message`] on the same thread.

use sfhe_core::bounds::{borell_tail, chaining_upper_bound, DiameterLaw, DyadicPartitionScheme};
use sfhe_core::experiments::{self, ExperimentConfig};
use sfhe_core::metrics::{Correlation, Metrics, SpacetimePoint};
use sfhe_core::quadrature::QuadratureSpec;
use sfhe_core::sampler::{SpacetimeGrid, SpectralOptions, SpectralSampler};
use sfhe_core::{Error, ModelParams};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfheStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    OutOfRange = 3,
    NotIntegrable = 4,
    ToleranceNotMet = 5,
    PsdRepairExceeded = 6,
    NyquistViolation = 7,
    TruncationBudgetExceeded = 8,
    EdgeTooClose = 9,
    RegionViolation = 10,
    SeparationViolated = 11,
    DivergentSeries = 12,
    ResolutionInsufficient = 13,
    ValidityWindowViolated = 14,
    Config = 15,
    Io = 16,
    BufferTooSmall = 17,
    Panic = 18,
}

impl From<&Error> for SfheStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::OutOfRange { .. } => SfheStatus::OutOfRange,
            Error::NotIntegrable { .. } => SfheStatus::NotIntegrable,
            Error::ToleranceNotMet { .. } => SfheStatus::ToleranceNotMet,
            Error::PsdRepairExceeded { .. } => SfheStatus::PsdRepairExceeded,
            Error::NyquistViolation { .. } => SfheStatus::NyquistViolation,
            Error::TruncationBudgetExceeded { .. } => SfheStatus::TruncationBudgetExceeded,
            Error::EdgeTooClose { .. } => SfheStatus::EdgeTooClose,
            Error::RegionViolation(_) => SfheStatus::RegionViolation,
            Error::SeparationViolated { .. } => SfheStatus::SeparationViolated,
            Error::DivergentSeries(_) => SfheStatus::DivergentSeries,
            Error::ResolutionInsufficient { .. } => SfheStatus::ResolutionInsufficient,
            Error::ValidityWindowViolated(_) => SfheStatus::ValidityWindowViolated,
            Error::InvalidInput(_) => SfheStatus::InvalidInput,
            Error::Config { .. } => SfheStatus::Config,
            Error::Io(_) => SfheStatus::Io,
        }
    }
}

/// Closed-form constants of a model.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SfheConstants {
    pub c1h: f64,
    pub c21: f64,
    pub kappa: f64,
    pub space_exponent: f64,
    pub roughness: f64,
}

/// Opaque model handle: parameters plus a default quadrature policy.
pub struct SfheModel {
    metrics: Metrics,
}

/// Opaque spectral sampler handle.
pub struct SfheSampler {
    inner: SpectralSampler,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), SfheStatus>) -> SfheStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfheStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside sfhe".into());
            SfheStatus::Panic
        }
    }
}

fn fail(e: Error) -> SfheStatus {
    let s = SfheStatus::from(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> SfheStatus {
    set_error(format!("{what} is null"));
    SfheStatus::NullPointer
}

/// # Safety
/// `p` is null or points to a live `T` for the duration of the call.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, SfheStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or points to writable storage for a `T`.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), SfheStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `s` is null or a NUL-terminated string.
unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, SfheStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        SfheStatus::InvalidInput
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` is null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sfhe_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// # Safety
/// `out` is valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn sfhe_model_new(alpha: f64, hurst: f64, out: *mut *mut SfheModel) -> SfheStatus {
    guard(|| {
        let p = ModelParams::new(alpha, hurst).map_err(fail)?;
        let h = Box::new(SfheModel {
            metrics: Metrics::new(p, QuadratureSpec::default()),
        });
        put(out, Box::into_raw(h), "out")
    })
}

/// # Safety
/// `model` is null or was returned by `sfhe_model_new` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfhe_model_free(model: *mut SfheModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_model_constants(model: *const SfheModel, out: *mut SfheConstants) -> SfheStatus {
    guard(|| {
        let c = get(model, "model")?.metrics.params().constants();
        let v = SfheConstants {
            c1h: c.c1h,
            c21: c.c21,
            kappa: c.kappa,
            space_exponent: c.space_exp,
            roughness: c.roughness,
        };
        put(out, v, "out")
    })
}

/// E[u(t, x)^2].
///
/// # Safety
/// `model` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_model_variance(model: *const SfheModel, t: f64, out: *mut f64) -> SfheStatus {
    guard(|| {
        let m = get(model, "model")?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(fail(Error::InvalidInput(format!("t = {t}"))));
        }
        put(out, m.metrics.params().variance(t), "out")
    })
}

/// Psi(t, L) = 1 + sqrt(log2(L / t^{1/alpha} v 1)).
///
/// # Safety
/// `model` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_model_psi(model: *const SfheModel, t: f64, l: f64, out: *mut f64) -> SfheStatus {
    guard(|| {
        let m = get(model, "model")?;
        if !(t > 0.0 && l > 0.0) {
            return Err(fail(Error::InvalidInput(format!("t = {t}, L = {l}"))));
        }
        put(out, m.metrics.params().psi(t, l), "out")
    })
}

/// Canonical metric d1 between (t, x) and (s, y), with its error bound.
///
/// # Safety
/// `model` is a live handle; `value` and `error_bound` are writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_metric_d1(
    model: *const SfheModel,
    t: f64,
    x: f64,
    s: f64,
    y: f64,
    value: *mut f64,
    error_bound: *mut f64,
) -> SfheStatus {
    guard(|| {
        let m = get(model, "model")?;
        let a = SpacetimePoint::new(t, x).map_err(fail)?;
        let b = SpacetimePoint::new(s, y).map_err(fail)?;
        let r = m.metrics.d1(a, b).map_err(fail)?;
        put(value, r.value, "value")?;
        put(error_bound, r.error_bound, "error_bound")
    })
}

/// Spatial increment metric d2 at time t with increment h.
///
/// # Safety
/// `model` is a live handle; `value` and `error_bound` are writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_metric_d2(
    model: *const SfheModel,
    t: f64,
    h: f64,
    x: f64,
    y: f64,
    value: *mut f64,
    error_bound: *mut f64,
) -> SfheStatus {
    guard(|| {
        let r = get(model, "model")?.metrics.d2(t, h, x, y).map_err(fail)?;
        put(value, r.value, "value")?;
        put(error_bound, r.error_bound, "error_bound")
    })
}

/// Temporal increment metric d3 at time t with increment tau.
///
/// # Safety
/// `model` is a live handle; `value` and `error_bound` are writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_metric_d3(
    model: *const SfheModel,
    t: f64,
    tau: f64,
    x: f64,
    y: f64,
    value: *mut f64,
    error_bound: *mut f64,
) -> SfheStatus {
    guard(|| {
        let r = get(model, "model")?.metrics.d3(t, tau, x, y).map_err(fail)?;
        put(value, r.value, "value")?;
        put(error_bound, r.error_bound, "error_bound")
    })
}

/// Spatial correlation of u(t, .) at the given lag.
///
/// # Safety
/// `model` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_correlation(model: *const SfheModel, t: f64, lag: f64, out: *mut f64) -> SfheStatus {
    guard(|| {
        let r = get(model, "model")?
            .metrics
            .correlation(Correlation::Field, t, lag)
            .map_err(fail)?;
        put(out, r.value, "out")
    })
}

/// Chaining upper bound with the d1 diameter law on [0, horizon] x [-L, L].
///
/// # Safety
/// `model` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_chaining_bound(
    model: *const SfheModel,
    horizon: f64,
    half_width: f64,
    multiplier: f64,
    out: *mut f64,
) -> SfheStatus {
    guard(|| {
        let p = get(model, "model")?.metrics.params();
        let scheme = DyadicPartitionScheme::new(horizon, half_width).map_err(fail)?;
        let r = chaining_upper_bound(p, &scheme, DiameterLaw::D1 { multiplier }).map_err(fail)?;
        put(out, r.total, "out")
    })
}

/// 2 exp(-lambda^2 / (2 sigma^2)); NaN for invalid input.
#[no_mangle]
pub extern "C" fn sfhe_borell_tail(sigma_sq: f64, lambda: f64) -> f64 {
    borell_tail(sigma_sq, lambda)
}

/// Spectral sampler on the grid t0 + i dt (i < nt), x0 + j dx (j < nx).
///
/// # Safety
/// `model` is a live handle; `out` is valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn sfhe_sampler_new(
    model: *const SfheModel,
    t0: f64,
    dt: f64,
    nt: usize,
    x0: f64,
    dx: f64,
    nx: usize,
    out: *mut *mut SfheSampler,
) -> SfheStatus {
    guard(|| {
        let p = *get(model, "model")?.metrics.params();
        let grid = SpacetimeGrid::new(t0, dt, nt, x0, dx, nx).map_err(fail)?;
        let inner = SpectralSampler::new(p, grid, SpectralOptions::default()).map_err(fail)?;
        put(out, Box::into_raw(Box::new(SfheSampler { inner })), "out")
    })
}

/// # Safety
/// `sampler` is null or was returned by `sfhe_sampler_new` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sfhe_sampler_free(sampler: *mut SfheSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Number of doubles a sample occupies (nt * nx).
///
/// # Safety
/// `sampler` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_sampler_len(sampler: *const SfheSampler, out: *mut usize) -> SfheStatus {
    guard(|| put(out, get(sampler, "sampler")?.inner.grid().len(), "out"))
}

/// Relative wrap bias of the lag-zero variance at the last slice.
///
/// # Safety
/// `sampler` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sfhe_sampler_lag0_bias(sampler: *const SfheSampler, out: *mut f64) -> SfheStatus {
    guard(|| put(out, get(sampler, "sampler")?.inner.lag0_bias(), "out"))
}

/// Draws replicate `replicate` of stream `seed` into `buf` (row-major time x
/// space). `len` must be at least `sfhe_sampler_len`.
///
/// # Safety
/// `sampler` is a live handle; `buf` is valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sfhe_sampler_draw(
    sampler: *const SfheSampler,
    seed: u64,
    replicate: u32,
    buf: *mut f64,
    len: usize,
) -> SfheStatus {
    guard(|| {
        let s = get(sampler, "sampler")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let need = s.inner.grid().len();
        if len < need {
            set_error(format!("buffer holds {len} values, sample needs {need}"));
            return Err(SfheStatus::BufferTooSmall);
        }
        let f = s.inner.sample(seed, replicate);
        std::ptr::copy_nonoverlapping(f.values.as_ptr(), buf, need);
        Ok(())
    })
}

/// Runs the experiment described by `config` (config-file text) and writes
/// the result files next to `out_path`.
///
/// # Safety
/// `config` and `out_path` are NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sfhe_experiment_run(config: *const c_char, out_path: *const c_char) -> SfheStatus {
    guard(|| {
        let cfg = ExperimentConfig::parse(text(config, "config")?).map_err(fail)?;
        let path = PathBuf::from(text(out_path, "out_path")?);
        let res = experiments::run(&cfg).map_err(fail)?;
        res.save(&path).map_err(fail)?;
        Ok(())
    })
}
