//! C ABI for the auctionsim pipeline: opaque handles, integer status
//! codes, and a thread-local last-error message.
//!
//! Every constructor hands back an owned pointer that must be released
//! with the matching `_free` function. Handles are not thread-safe to
//! mutate, but all operations here only read them.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;

use auctionsim::analysis::{band_probability, BandQuery};
use auctionsim::cli::RunConfig;
use auctionsim::density::{fit_polynomial, KdeModel, Kernel, PolyDensity};
use auctionsim::ingest::PriceSeries;
use auctionsim::sampler::{run_chain, Chain, ChainConfig, ChainInit};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsimStatus {
    AsimOk = 0,
    AsimErrIo = 1,
    AsimErrParse = 2,
    AsimErrFit = 3,
    AsimErrSampler = 4,
    AsimErrInvalidArgument = 5,
}

/// Kernel selector for `asim_density_fit`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsimKernel {
    AsimKernelGaussian = 0,
    AsimKernelEpanechnikov = 1,
}

/// Inflation-adjusted price series (opaque).
pub struct AsimSeries {
    inner: PriceSeries,
}

/// Fitted KDE plus clamped polynomial target (opaque).
pub struct AsimDensity {
    kde: KdeModel,
    poly: PolyDensity,
    median: f64,
}

/// A completed Metropolis-Hastings run (opaque).
pub struct AsimChain {
    inner: Chain,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(sanitized).unwrap());
}

fn fail(status: AsimStatus, msg: impl AsRef<str>) -> AsimStatus {
    set_last_error(msg.as_ref());
    status
}

/// Copy the last error message on this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length,
/// terminator excluded.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be NULL with `len` 0.
#[no_mangle]
pub unsafe extern "C" fn asim_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, AsimStatus> {
    if ptr.is_null() {
        return Err(fail(AsimStatus::AsimErrInvalidArgument, "NULL path"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => Err(fail(AsimStatus::AsimErrInvalidArgument, "path is not valid UTF-8")),
    }
}

/// Load auction and deflator CSVs and deflate to `base_year`. On success
/// writes an owned handle to `out`.
///
/// # Safety
/// `auction_path` and `deflator_path` must be NUL-terminated strings and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asim_series_load(
    auction_path: *const c_char,
    deflator_path: *const c_char,
    base_year: c_int,
    out: *mut *mut AsimSeries,
) -> AsimStatus {
    if out.is_null() {
        return fail(AsimStatus::AsimErrInvalidArgument, "NULL out pointer");
    }
    let auction = match path_arg(auction_path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let deflator = match path_arg(deflator_path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let config = RunConfig {
        input_path: auction,
        deflator_path: deflator,
        base_year,
        ..RunConfig::default()
    };
    match auctionsim::cli::load_series(&config) {
        Ok(series) => {
            *out = Box::into_raw(Box::new(AsimSeries { inner: series }));
            AsimStatus::AsimOk
        }
        Err(e) => {
            let msg = e.to_string();
            let status = if msg.contains("cannot read") {
                AsimStatus::AsimErrIo
            } else {
                AsimStatus::AsimErrParse
            };
            fail(status, msg)
        }
    }
}

/// Number of observations in the series.
///
/// # Safety
/// `series` must be a live handle from `asim_series_load`.
#[no_mangle]
pub unsafe extern "C" fn asim_series_len(series: *const AsimSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.len())
}

/// Median real price.
///
/// # Safety
/// `series` must be a live handle from `asim_series_load`.
#[no_mangle]
pub unsafe extern "C" fn asim_series_median(series: *const AsimSeries) -> f64 {
    series.as_ref().map_or(f64::NAN, |s| s.inner.median())
}

/// # Safety
/// `series` must be a handle from `asim_series_load`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asim_series_free(series: *mut AsimSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Fit the KDE and polynomial target. `bandwidth <= 0` selects
/// Silverman's rule.
///
/// # Safety
/// `series` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asim_density_fit(
    series: *const AsimSeries,
    kernel: AsimKernel,
    bandwidth: f64,
    degree: usize,
    fit_grid: usize,
    out: *mut *mut AsimDensity,
) -> AsimStatus {
    let Some(series) = series.as_ref() else {
        return fail(AsimStatus::AsimErrInvalidArgument, "NULL series");
    };
    if out.is_null() {
        return fail(AsimStatus::AsimErrInvalidArgument, "NULL out pointer");
    }
    let kernel = match kernel {
        AsimKernel::AsimKernelGaussian => Kernel::Gaussian,
        AsimKernel::AsimKernelEpanechnikov => Kernel::Epanechnikov,
    };
    let bandwidth = if bandwidth > 0.0 { Some(bandwidth) } else { None };
    let kde = match KdeModel::from_series(&series.inner, bandwidth, kernel) {
        Ok(k) => k,
        Err(e) => return fail(AsimStatus::AsimErrFit, e.to_string()),
    };
    match fit_polynomial(&kde, degree, fit_grid) {
        Ok(poly) => {
            *out = Box::into_raw(Box::new(AsimDensity {
                kde,
                poly,
                median: series.inner.median(),
            }));
            AsimStatus::AsimOk
        }
        Err(e) => fail(AsimStatus::AsimErrFit, e.to_string()),
    }
}

/// KDE value at `x`.
///
/// # Safety
/// `density` must be a live handle from `asim_density_fit`.
#[no_mangle]
pub unsafe extern "C" fn asim_density_kde(density: *const AsimDensity, x: f64) -> f64 {
    density.as_ref().map_or(f64::NAN, |d| d.kde.eval(x))
}

/// Clamped polynomial target at `x` (unnormalized).
///
/// # Safety
/// `density` must be a live handle from `asim_density_fit`.
#[no_mangle]
pub unsafe extern "C" fn asim_density_target(density: *const AsimDensity, x: f64) -> f64 {
    density.as_ref().map_or(f64::NAN, |d| d.poly.target(x))
}

/// CDF of the normalized target at `x`.
///
/// # Safety
/// `density` must be a live handle from `asim_density_fit`.
#[no_mangle]
pub unsafe extern "C" fn asim_density_cdf(density: *const AsimDensity, x: f64) -> f64 {
    density.as_ref().map_or(f64::NAN, |d| d.poly.cdf(x))
}

/// Bandwidth the fit used.
///
/// # Safety
/// `density` must be a live handle from `asim_density_fit`.
#[no_mangle]
pub unsafe extern "C" fn asim_density_bandwidth(density: *const AsimDensity) -> f64 {
    density.as_ref().map_or(f64::NAN, |d| d.kde.bandwidth())
}

/// Support interval of the target.
///
/// # Safety
/// `density` must be live; `lo` and `hi` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn asim_density_support(
    density: *const AsimDensity,
    lo: *mut f64,
    hi: *mut f64,
) {
    if let Some(d) = density.as_ref() {
        let s = d.poly.support();
        if !lo.is_null() {
            *lo = s.lo;
        }
        if !hi.is_null() {
            *hi = s.hi;
        }
    }
}

/// # Safety
/// `density` must be a handle from `asim_density_fit`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asim_density_free(density: *mut AsimDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Run one Metropolis-Hastings chain against the fitted target, started
/// at the data median. Deterministic in `seed`.
///
/// # Safety
/// `density` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asim_chain_run(
    density: *const AsimDensity,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
    out: *mut *mut AsimChain,
) -> AsimStatus {
    let Some(density) = density.as_ref() else {
        return fail(AsimStatus::AsimErrInvalidArgument, "NULL density");
    };
    if out.is_null() {
        return fail(AsimStatus::AsimErrInvalidArgument, "NULL out pointer");
    }
    let config = match ChainConfig::new(n_samples, burn_in, seed, ChainInit::DataMedian(density.median)) {
        Ok(c) => c,
        Err(e) => return fail(AsimStatus::AsimErrInvalidArgument, e.to_string()),
    };
    let target = |x: f64| density.poly.target(x);
    match run_chain(&target, density.poly.support(), &config) {
        Ok(chain) => {
            *out = Box::into_raw(Box::new(AsimChain { inner: chain }));
            AsimStatus::AsimOk
        }
        Err(e) => fail(AsimStatus::AsimErrSampler, e.to_string()),
    }
}

/// Number of recorded (post-burn-in) states.
///
/// # Safety
/// `chain` must be a live handle from `asim_chain_run`.
#[no_mangle]
pub unsafe extern "C" fn asim_chain_len(chain: *const AsimChain) -> usize {
    chain.as_ref().map_or(0, |c| c.inner.len())
}

/// Borrowed pointer to the recorded states; valid until the chain is
/// freed.
///
/// # Safety
/// `chain` must be a live handle from `asim_chain_run`.
#[no_mangle]
pub unsafe extern "C" fn asim_chain_states(chain: *const AsimChain) -> *const f64 {
    chain.as_ref().map_or(std::ptr::null(), |c| c.inner.states().as_ptr())
}

/// Accepted proposals over all steps, burn-in included.
///
/// # Safety
/// `chain` must be a live handle from `asim_chain_run`.
#[no_mangle]
pub unsafe extern "C" fn asim_chain_acceptance_rate(chain: *const AsimChain) -> f64 {
    chain.as_ref().map_or(f64::NAN, |c| c.inner.acceptance_rate())
}

/// Fraction of states inside [lo, hi], both ends inclusive.
///
/// # Safety
/// `chain` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asim_chain_band_probability(
    chain: *const AsimChain,
    lo: f64,
    hi: f64,
    out: *mut f64,
) -> AsimStatus {
    let Some(chain) = chain.as_ref() else {
        return fail(AsimStatus::AsimErrInvalidArgument, "NULL chain");
    };
    if out.is_null() {
        return fail(AsimStatus::AsimErrInvalidArgument, "NULL out pointer");
    }
    if lo > hi {
        return fail(AsimStatus::AsimErrInvalidArgument, format!("band lo {lo} exceeds hi {hi}"));
    }
    match band_probability(&chain.inner, BandQuery::new(lo, hi)) {
        Ok(p) => {
            *out = p;
            AsimStatus::AsimOk
        }
        Err(e) => fail(AsimStatus::AsimErrInvalidArgument, e.to_string()),
    }
}

/// # Safety
/// `chain` must be a handle from `asim_chain_run`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn asim_chain_free(chain: *mut AsimChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}
