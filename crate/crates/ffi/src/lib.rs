//! C ABI over `learnwidth`.
//!
//! Objects cross the boundary as opaque handles (`LwMatrix`, `LwStates`)
//! created by `lw_*_new` / `lw_*_from_*` and released with the matching
//! `lw_*_free`. Every fallible call returns an [`LwStatus`]; on failure the
//! message is available from [`lw_last_error`] on the same thread until the
//! next call. Strings returned through `char **` are owned by the caller and
//! must be released with [`lw_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use learnwidth::clique::{self, CliqueMethod};
use learnwidth::incoherence::{self, Answer, Config};
use learnwidth::learnability::{self, Fixture, Verdict, Width};
use learnwidth::matrix::{c, CMat};
use learnwidth::{io, Error, HermitianMatrix, StateList};

/// Hermitian matrix handle.
pub struct LwMatrix(HermitianMatrix);

/// State list handle.
pub struct LwStates(StateList);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LwStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument outside the documented domain (bad k, non-positive tolerance).
    InvalidArgument = 2,
    /// Malformed JSON, edge list or UTF-8.
    Parse = 3,
    NotPsd = 4,
    Dimension = 5,
    /// Subset enumeration would exceed the configured cap.
    CapExceeded = 6,
    /// The numerical solver could not reach the requested precision.
    Solver = 7,
    UnknownFixture = 8,
    /// A bug: the library panicked. The message holds the panic payload.
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LwAnswer {
    Inside = 0,
    Outside = 1,
    Boundary = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LwVerdict {
    Learnable = 0,
    NotLearnable = 1,
    Undecided = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LwCliqueMethod {
    Oracle = 0,
    Sdp = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(LwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Contract(_) | Error::EmptyMatrix | Error::NotSquare { .. } => LwStatus::InvalidArgument,
            Error::NotHermitian { .. } => LwStatus::InvalidArgument,
            Error::NotPsd { .. } => LwStatus::NotPsd,
            Error::Dimension { .. } => LwStatus::Dimension,
            Error::CapExceeded { .. } => LwStatus::CapExceeded,
            Error::Solver { .. } | Error::EigenNonConvergence { .. } => LwStatus::Solver,
            Error::UnknownFixture { .. } => LwStatus::UnknownFixture,
            _ => LwStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> LwStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LwStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            LwStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(LwStatus::Parse, format!("{what}: {e}")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn config(cap: u64) -> Config {
    if cap == 0 {
        Config::default()
    } else {
        Config { cap: cap as u128, ..Config::default() }
    }
}

/// Parses a matrix document `{"n": .., "entries": [[..]]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_matrix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_matrix_from_json(json: *const c_char, out_matrix: *mut *mut LwMatrix) -> LwStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        let m = io::matrix_from_json(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(LwMatrix(m)));
        Ok(())
    })
}

/// Builds an `n x n` Hermitian matrix from row-major real and imaginary
/// parts. `im` may be null for a real matrix.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn lw_matrix_new(
    n: usize,
    re: *const f64,
    im: *const f64,
    out_matrix: *mut *mut LwMatrix,
) -> LwStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        if re.is_null() {
            return Err(null("re"));
        }
        let re = std::slice::from_raw_parts(re, n * n);
        let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, n * n));
        let m = CMat::from_fn(n, n, |i, j| c(re[i * n + j], im.map_or(0.0, |v| v[i * n + j])));
        *slot = Box::into_raw(Box::new(LwMatrix(HermitianMatrix::new(m)?)));
        Ok(())
    })
}

/// Dimension of a matrix handle, 0 for null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lw_matrix_dim(m: *const LwMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lw_matrix_free(m: *mut LwMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Parses a state list document `{"d": .., "states": [[..]]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_states` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_states_from_json(json: *const c_char, out_states: *mut *mut LwStates) -> LwStatus {
    guard(|| {
        let slot = out(out_states, "out_states")?;
        let s = io::states_from_json(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(LwStates(s)));
        Ok(())
    })
}

/// Builds a fixture ensemble by name (`trine`, `tetrahedral`, `basis(n)`,
/// `repeated_basis(k,n)`, `random(n,d)`); `seed` feeds `random(n,d)`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out_states` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_states_fixture(name: *const c_char, seed: u64, out_states: *mut *mut LwStates) -> LwStatus {
    guard(|| {
        let slot = out(out_states, "out_states")?;
        let f = Fixture::parse_seeded(text(name, "name")?, seed)?;
        *slot = Box::into_raw(Box::new(LwStates(learnability::fixture_states(&f)?)));
        Ok(())
    })
}

/// Number of states in the list, 0 for null.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lw_states_len(s: *const LwStates) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lw_states_free(s: *mut LwStates) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// The normalized Gram matrix `G / n` of a state list.
///
/// # Safety
/// `s` must be a live handle and `out_matrix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_states_gram(s: *const LwStates, out_matrix: *mut *mut LwMatrix) -> LwStatus {
    guard(|| {
        let s = borrow(s, "states")?;
        let slot = out(out_matrix, "out_matrix")?;
        *slot = Box::into_raw(Box::new(LwMatrix(learnability::normalized_gram(&s.0))));
        Ok(())
    })
}

/// Smallest k for which the PSD matrix is k-incoherent. `cap` bounds the
/// subset enumeration (0 for the default).
///
/// # Safety
/// `m` must be a live handle and `out_width` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_factor_width(m: *const LwMatrix, eps: f64, cap: u64, out_width: *mut usize) -> LwStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let slot = out(out_width, "out_width")?;
        *slot = config(cap).factor_width(&m.0, eps)?;
        Ok(())
    })
}

/// Weak membership of `m` in the trace-bounded k-incoherent set at radius
/// `delta`. `out_distance` may be null.
///
/// # Safety
/// `m` must be a live handle and `out_answer` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_wmem(
    m: *const LwMatrix,
    k: usize,
    delta: f64,
    out_answer: *mut LwAnswer,
    out_distance: *mut f64,
) -> LwStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let slot = out(out_answer, "out_answer")?;
        let v = incoherence::wmem(&m.0, k, delta)?;
        *slot = match v.answer {
            Answer::Inside => LwAnswer::Inside,
            Answer::Outside => LwAnswer::Outside,
            Answer::Boundary => LwAnswer::Boundary,
        };
        if let Some(d) = out_distance.as_mut() {
            *d = v.distance;
        }
        Ok(())
    })
}

fn delta_or_default(s: &StateList, delta: f64) -> f64 {
    if delta > 0.0 {
        delta
    } else {
        learnability::default_delta(s)
    }
}

/// Zero-error k-learnability. A non-positive `delta` selects the default
/// radius.
///
/// # Safety
/// `s` must be a live handle and `out_verdict` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_is_k_learnable(
    s: *const LwStates,
    k: usize,
    delta: f64,
    out_verdict: *mut LwVerdict,
) -> LwStatus {
    guard(|| {
        let s = borrow(s, "states")?;
        let slot = out(out_verdict, "out_verdict")?;
        let r = learnability::is_k_learnable(&s.0, k, delta_or_default(&s.0, delta))?;
        *slot = match r.verdict {
            Verdict::Learnable => LwVerdict::Learnable,
            Verdict::NotLearnable => LwVerdict::NotLearnable,
            Verdict::Boundary => LwVerdict::Undecided,
        };
        Ok(())
    })
}

/// Learning width as the interval `[lo, hi]`; `lo == hi` when exact.
///
/// # Safety
/// `s` must be a live handle; `out_lo` and `out_hi` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lw_learning_width(
    s: *const LwStates,
    delta: f64,
    out_lo: *mut usize,
    out_hi: *mut usize,
) -> LwStatus {
    guard(|| {
        let s = borrow(s, "states")?;
        let lo = out(out_lo, "out_lo")?;
        let hi = out(out_hi, "out_hi")?;
        match learnability::learning_width(&s.0, delta_or_default(&s.0, delta))? {
            Width::Exact(w) => (*lo, *hi) = (w, w),
            Width::Interval(a, b) => (*lo, *hi) = (a, b),
        }
        Ok(())
    })
}

/// `max_{|S| ≤ k} λ_max(C_S)` floored at 0, by enumeration.
///
/// # Safety
/// `m` must be a live handle and `out_value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_mu_oracle(m: *const LwMatrix, k: usize, out_value: *mut f64) -> LwStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let slot = out(out_value, "out_value")?;
        *slot = incoherence::mu_oracle(&m.0, k)?.value;
        Ok(())
    })
}

/// Decides whether the graph in edge-list text (`n m` header, then `u v`
/// lines, 1-based) has a k-clique.
///
/// # Safety
/// `edge_list` must be a NUL-terminated string and `out_clique` valid.
#[no_mangle]
pub unsafe extern "C" fn lw_clique_decide(
    edge_list: *const c_char,
    k: usize,
    method: LwCliqueMethod,
    out_clique: *mut bool,
) -> LwStatus {
    guard(|| {
        let g = clique::load_graph(text(edge_list, "edge_list")?)?;
        let slot = out(out_clique, "out_clique")?;
        let method = match method {
            LwCliqueMethod::Oracle => CliqueMethod::Oracle,
            LwCliqueMethod::Sdp => CliqueMethod::Sdp,
        };
        *slot = clique::decide_clique(&g, k, method)?.clique;
        Ok(())
    })
}

/// Zero-error POVM over k-subsets as JSON, or null in `*out_json` when the
/// Gram matrix admits no k-incoherent decomposition.
///
/// # Safety
/// `s` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_povm_json(s: *const LwStates, k: usize, out_json: *mut *mut c_char) -> LwStatus {
    guard(|| {
        let s = borrow(s, "states")?;
        let slot = out(out_json, "out_json")?;
        *slot = match learnability::witness_povm(&Config::default(), &s.0, k)? {
            Some(p) => owned_string(p.to_json()),
            None => ptr::null_mut(),
        };
        Ok(())
    })
}

/// Carathéodory certificate for a k-incoherent matrix as JSON, or null when
/// no decomposition is found at precision `eps`.
///
/// # Safety
/// `m` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lw_certificate_json(
    m: *const LwMatrix,
    k: usize,
    eps: f64,
    out_json: *mut *mut c_char,
) -> LwStatus {
    guard(|| {
        let m = borrow(m, "matrix")?;
        let slot = out(out_json, "out_json")?;
        let fit = 1e-8 * (1.0 + m.0.frobenius_norm());
        let d = Config::default().search_decomposition(&m.0, k, &[eps / 10.0, eps], |d| d.residual(&m.0) <= fit)?;
        *slot = match d {
            Some(d) => owned_string(incoherence::certificate_from_decomposition(&d, 1e-12)?.to_json()),
            None => ptr::null_mut(),
        };
        Ok(())
    })
}

/// Checks a certificate document against `m`; `out_valid` receives the
/// verdict. A rejected certificate is not an error; its reason is left in
/// [`lw_last_error`].
///
/// # Safety
/// `m` must be a live handle, `json` a NUL-terminated string, `out_valid` valid.
#[no_mangle]
pub unsafe extern "C" fn lw_certificate_verify(
    m: *const LwMatrix,
    json: *const c_char,
    tol: f64,
    out_valid: *mut bool,
) -> LwStatus {
    let mut reason = String::new();
    let status = guard(|| {
        let m = borrow(m, "matrix")?;
        let slot = out(out_valid, "out_valid")?;
        let cert = incoherence::Certificate::from_json(text(json, "json")?)?;
        let check = incoherence::verify_certificate(&m.0, &cert, tol);
        *slot = check.valid;
        reason = check.detail;
        Ok(())
    });
    if status == LwStatus::Ok {
        set_error(&reason);
    }
    status
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn lw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
