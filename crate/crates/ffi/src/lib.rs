//! C ABI for `dstab`.
//!
//! Matrices cross the boundary as dense row-major `double` arrays of length
//! `n * n`. Pairs and solver results live behind opaque handles that the
//! caller releases with the matching `*_free` function. Every entry point
//! returns a [`DstabStatus`]; on failure a message is available from
//! [`dstab_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dstab::pencil::analyze_admissibility;
use dstab::solver::bcd_solve;
use dstab::{DMatrix, Error, MatrixPair, SolveResult, SolverConfig, Termination, Tolerances};

/// Status codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DstabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    SingularPencil = 5,
    NoConvergence = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DstabTermination {
    Converged = 0,
    TimeLimit = 1,
    IterLimit = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DstabTolerances {
    pub rank_rtol: f64,
    pub eig_atol: f64,
    pub stability_tol: f64,
}

/// Solver controls. `ridge <= 0` selects the default `1e-12 * n`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DstabSolverConfig {
    pub max_outer_iters: u64,
    pub time_limit_seconds: f64,
    pub rel_decrease_tol: f64,
    pub inner_fgm_steps: u64,
    pub ridge: f64,
    pub momentum_restart: bool,
    pub tolerances: DstabTolerances,
}

/// Scalar verdicts of the admissibility analysis.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DstabAnalysis {
    pub regular: bool,
    pub index_at_most_one: bool,
    pub stable: bool,
    pub admissible: bool,
    pub rank_e: usize,
    pub finite_count: usize,
    pub infinite_count: usize,
    /// Largest modulus among finite eigenvalues, 0 when there are none.
    pub spectral_radius: f64,
}

/// Opaque square pair `(E, A)`.
pub struct DstabPair {
    inner: MatrixPair,
}

/// Opaque outcome of [`dstab_stabilize`].
pub struct DstabResult {
    inner: SolveResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(DstabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. } => DstabStatus::NonFinite,
            Error::Dimension(_) => DstabStatus::DimensionMismatch,
            Error::SingularPencil => DstabStatus::SingularPencil,
            Error::NoConvergence => DstabStatus::NoConvergence,
            _ => DstabStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DstabStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DstabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DstabStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            DstabStatus::Panic
        }
    }
}

fn to_rust_tol(t: &DstabTolerances) -> Tolerances {
    Tolerances {
        rank_rtol: t.rank_rtol,
        eig_atol: t.eig_atol,
        stability_tol: t.stability_tol,
    }
}

fn to_c_tol(t: &Tolerances) -> DstabTolerances {
    DstabTolerances {
        rank_rtol: t.rank_rtol,
        eig_atol: t.eig_atol,
        stability_tol: t.stability_tol,
    }
}

unsafe fn tolerances_or_default(tol: *const DstabTolerances) -> Result<Tolerances, Failure> {
    let tol = match tol.as_ref() {
        Some(t) => to_rust_tol(t),
        None => Tolerances::default(),
    };
    tol.validate()?;
    Ok(tol)
}

type Matrix = DMatrix<f64>;

unsafe fn read_square(ptr: *const f64, n: usize) -> Matrix {
    let data = std::slice::from_raw_parts(ptr, n * n);
    DMatrix::from_row_slice(n, n, data)
}

unsafe fn write_square(m: &Matrix, out: *mut f64) {
    let n = m.nrows();
    let out = std::slice::from_raw_parts_mut(out, n * n);
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = m[(i, j)];
        }
    }
}

/// Default tolerances.
#[no_mangle]
pub extern "C" fn dstab_tolerances_default() -> DstabTolerances {
    to_c_tol(&Tolerances::default())
}

/// Default solver configuration (60 s budget, relative tolerance 1e-8).
#[no_mangle]
pub extern "C" fn dstab_solver_config_default() -> DstabSolverConfig {
    let c = SolverConfig::default();
    DstabSolverConfig {
        max_outer_iters: c.max_outer_iters as u64,
        time_limit_seconds: c.time_limit_seconds,
        rel_decrease_tol: c.rel_decrease_tol,
        inner_fgm_steps: c.inner_fgm_steps as u64,
        ridge: 0.0,
        momentum_restart: c.momentum_restart,
        tolerances: to_c_tol(&c.tolerances),
    }
}

/// Creates a pair from row-major `n x n` arrays. A null `e` means `E = I`.
///
/// # Safety
/// `e` (when non-null) and `a` must point to `n * n` readable doubles and
/// `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_pair_new(
    n: usize,
    e: *const f64,
    a: *const f64,
    out: *mut *mut DstabPair,
) -> DstabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if a.is_null() {
            return Err(null("a"));
        }
        if n == 0 {
            return Err(Failure(
                DstabStatus::InvalidArgument,
                "n must be positive".into(),
            ));
        }
        let a = read_square(a, n);
        let e = if e.is_null() {
            DMatrix::identity(n, n)
        } else {
            read_square(e, n)
        };
        let pair = MatrixPair::new(e, a)?;
        *out = Box::into_raw(Box::new(DstabPair { inner: pair }));
        Ok(())
    })
}

/// Releases a pair. Null is ignored.
///
/// # Safety
/// `pair` must come from [`dstab_pair_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dstab_pair_free(pair: *mut DstabPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Dimension of the pair, or 0 for a null handle.
///
/// # Safety
/// `pair` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_pair_dim(pair: *const DstabPair) -> usize {
    pair.as_ref().map_or(0, |p| p.inner.n())
}

/// Runs the admissibility analysis. A null `tol` selects the defaults.
///
/// # Safety
/// `pair` must be a live handle, `tol` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dstab_analyze(
    pair: *const DstabPair,
    tol: *const DstabTolerances,
    out: *mut DstabAnalysis,
) -> DstabStatus {
    guard(|| {
        let pair = pair.as_ref().ok_or_else(|| null("pair"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let tol = tolerances_or_default(tol)?;
        let rep = analyze_admissibility(&pair.inner, &tol);
        *out = DstabAnalysis {
            regular: rep.regular,
            index_at_most_one: rep.index_at_most_one,
            stable: rep.stable,
            admissible: rep.admissible,
            rank_e: rep.rank_e,
            finite_count: rep.finite_count,
            infinite_count: rep.infinite_count,
            spectral_radius: rep.spectrum.iter().map(|s| s.modulus).fold(0.0, f64::max),
        };
        Ok(())
    })
}

/// Copies the finite eigenvalues into `re` / `im` (capacity `cap`) and
/// stores their number in `count`. With too small a buffer the count is
/// still written and `BufferTooSmall` is returned.
///
/// # Safety
/// `re` and `im` must hold `cap` writable doubles (or be null with
/// `cap == 0`); `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dstab_finite_spectrum(
    pair: *const DstabPair,
    tol: *const DstabTolerances,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    count: *mut usize,
) -> DstabStatus {
    guard(|| {
        let pair = pair.as_ref().ok_or_else(|| null("pair"))?;
        let count = count.as_mut().ok_or_else(|| null("count"))?;
        let tol = tolerances_or_default(tol)?;
        let spec = dstab::pencil::finite_spectrum(&pair.inner, &tol)?;
        *count = spec.len();
        if spec.len() > cap {
            return Err(Failure(
                DstabStatus::BufferTooSmall,
                format!("{} eigenvalues, buffer holds {cap}", spec.len()),
            ));
        }
        if !spec.is_empty() && (re.is_null() || im.is_null()) {
            return Err(null("re/im"));
        }
        for (k, s) in spec.iter().enumerate() {
            *re.add(k) = s.value.re;
            *im.add(k) = s.value.im;
        }
        Ok(())
    })
}

fn to_rust_config(c: &DstabSolverConfig) -> SolverConfig {
    SolverConfig {
        max_outer_iters: usize::try_from(c.max_outer_iters).unwrap_or(usize::MAX),
        time_limit_seconds: c.time_limit_seconds,
        rel_decrease_tol: c.rel_decrease_tol,
        inner_fgm_steps: usize::try_from(c.inner_fgm_steps).unwrap_or(usize::MAX),
        ridge: (c.ridge > 0.0).then_some(c.ridge),
        momentum_restart: c.momentum_restart,
        tolerances: to_rust_tol(&c.tolerances),
    }
}

/// Computes a nearby admissible pair with `rank(Ê) = r`. `r == 0` selects
/// the numerical rank of `E` (at least 1); a null `config` the defaults.
///
/// # Safety
/// `pair` must be a live handle, `config` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dstab_stabilize(
    pair: *const DstabPair,
    r: usize,
    config: *const DstabSolverConfig,
    out: *mut *mut DstabResult,
) -> DstabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let pair = pair.as_ref().ok_or_else(|| null("pair"))?;
        let cfg = config
            .as_ref()
            .map_or_else(SolverConfig::default, to_rust_config);
        cfg.validate()?;
        let r = if r == 0 {
            dstab::numerics::numerical_rank(pair.inner.e(), &cfg.tolerances)?.max(1)
        } else {
            r
        };
        let res = bcd_solve(&pair.inner, r, &cfg)?;
        *out = Box::into_raw(Box::new(DstabResult { inner: res }));
        Ok(())
    })
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `result` must come from [`dstab_stabilize`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_free(result: *mut DstabResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Final objective `|E - Ê|_F^2 + |A - Â|_F^2`, NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_error(result: *const DstabResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.error)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_iterations(result: *const DstabResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.iterations)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_elapsed_seconds(result: *const DstabResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.elapsed_s)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_rank(result: *const DstabResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.state.r())
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_admissible(result: *const DstabResult) -> bool {
    result.as_ref().is_some_and(|r| r.inner.report.admissible)
}

/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_termination(
    result: *const DstabResult,
    out: *mut DstabTermination,
) -> DstabStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match result.inner.termination {
            Termination::Converged => DstabTermination::Converged,
            Termination::TimeLimit => DstabTermination::TimeLimit,
            Termination::IterLimit => DstabTermination::IterLimit,
        };
        Ok(())
    })
}

/// Copies `Ê` and `Â` (row-major, `n * n` each) into caller buffers.
/// Either output may be null to skip it.
///
/// # Safety
/// Non-null `e_hat` / `a_hat` must hold `n * n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_copy_pair(
    result: *const DstabResult,
    e_hat: *mut f64,
    a_hat: *mut f64,
) -> DstabStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        if !e_hat.is_null() {
            write_square(result.inner.pair.e(), e_hat);
        }
        if !a_hat.is_null() {
            write_square(result.inner.pair.a(), a_hat);
        }
        Ok(())
    })
}

/// Number of rows in the error history, including the initial objective.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_trace_len(result: *const DstabResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.trace.len())
}

/// Copies the error history `e(0), e(1), ...` into `errors` (capacity `cap`).
///
/// # Safety
/// `errors` must hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dstab_result_copy_trace(
    result: *const DstabResult,
    errors: *mut f64,
    cap: usize,
) -> DstabStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        let trace = &result.inner.trace;
        if trace.len() > cap {
            return Err(Failure(
                DstabStatus::BufferTooSmall,
                format!("trace has {} rows, buffer holds {cap}", trace.len()),
            ));
        }
        if errors.is_null() {
            return Err(null("errors"));
        }
        for (k, t) in trace.iter().enumerate() {
            *errors.add(k) = t.error;
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in
/// bytes excluding the terminator; 0 when there is no message.
///
/// # Safety
/// `buf` must hold `len` writable bytes, or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn dstab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dstab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
