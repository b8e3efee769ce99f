//! C ABI over `lowdeg`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`LdStatus`]; on failure, `ld_last_error_message` describes the error
//! for the calling thread. Real-valued parameters are passed as `double` and
//! converted exactly through their shortest decimal form, so `0.2` is `1/5`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lowdeg::advantage::{adv_bound_binary, adv_bound_gaussian, AdvQuery, AdvantageReport};
use lowdeg::graphs::{enumerate_classes, ClassCatalog, MultigraphClass};
use lowdeg::models::{sample_binary, sample_gaussian, BinaryParams, Communities, GaussianParams, Observations, PriorSpec, Sample};
use lowdeg::rvalues::RTable;
use lowdeg::scalar::{self, Rational};
use lowdeg::stats::{diag_sum, signed_triangles};
use lowdeg::{Error, GraphError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeLimit = 3,
    Precondition = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

/// Community structure shared by both model families.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdCommunities {
    pub n: u64,
    /// Expected number of planted vertices.
    pub k: f64,
    /// `m` community proportions summing to one.
    pub x: *const f64,
    pub m: usize,
    /// Constant with `m * min(x) >= c`, `0 < c <= 1`.
    pub c: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdGaussianParams {
    pub communities: LdCommunities,
    pub lambda: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdBinaryParams {
    pub communities: LdCommunities,
    pub q: f64,
    pub s: f64,
    pub tau1: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct LdClassInfo {
    /// Edge count.
    pub d: u32,
    /// Non-isolated vertex count.
    pub v: usize,
    pub automorphisms: u64,
    pub components: usize,
    /// Every component contains a cycle (loops count).
    pub cyclic: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct LdAdvantage {
    pub total_bound: f64,
    /// `+inf` when the geometric series diverges.
    pub series_bound: f64,
    pub m_hat: usize,
    pub m_tilde: usize,
    pub classes_summed: usize,
    pub forests_dropped: bool,
}

/// Opaque catalog of multigraph classes.
pub struct LdCatalog {
    inner: ClassCatalog,
    classes: Vec<MultigraphClass>,
}

/// Opaque memoised r-value table for a pair of priors.
pub struct LdRTable {
    inner: RTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> LdStatus {
    match e {
        Error::SizeLimit(_) | Error::Graph(GraphError::TooManyEdges { .. } | GraphError::CatalogLimit { .. }) => LdStatus::SizeLimit,
        Error::Precondition(_) => LdStatus::Precondition,
        _ => LdStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), (LdStatus, String)>>(f: F) -> LdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LdStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LdStatus::Internal
        }
    }
}

fn lift(e: Error) -> (LdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (LdStatus, String) {
    (LdStatus::NullPointer, format!("{what} is null"))
}

fn exact(v: f64, what: &str) -> Result<Rational, (LdStatus, String)> {
    scalar::from_f64(v).map_err(|_| (LdStatus::InvalidArgument, format!("{what} must be finite")))
}

unsafe fn communities(c: &LdCommunities) -> Result<Communities, (LdStatus, String)> {
    if c.x.is_null() {
        return Err(null("x"));
    }
    let xs = std::slice::from_raw_parts(c.x, c.m);
    let x = xs.iter().map(|&v| exact(v, "x")).collect::<Result<Vec<_>, _>>()?;
    Communities::new(c.n, exact(c.k, "k")?, x, exact(c.c, "c")?).map_err(lift)
}

unsafe fn gaussian(p: *const LdGaussianParams) -> Result<GaussianParams, (LdStatus, String)> {
    let p = p.as_ref().ok_or_else(|| null("params"))?;
    GaussianParams::new(communities(&p.communities)?, exact(p.lambda, "lambda")?).map_err(lift)
}

unsafe fn binary(p: *const LdBinaryParams) -> Result<BinaryParams, (LdStatus, String)> {
    let p = p.as_ref().ok_or_else(|| null("params"))?;
    BinaryParams::new(communities(&p.communities)?, exact(p.q, "q")?, exact(p.s, "s")?, exact(p.tau1, "tau1")?)
        .map_err(lift)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ld_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ld_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Enumerates classes with at most `d_max` edges.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ld_catalog_enumerate(
    d_max: u32,
    allow_loops: bool,
    require_cyclic_components: bool,
    out: *mut *mut LdCatalog,
) -> LdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = enumerate_classes(d_max, allow_loops, require_cyclic_components).map_err(|e| lift(e.into()))?;
        let classes = inner.iter().cloned().collect();
        *out = Box::into_raw(Box::new(LdCatalog { inner, classes }));
        Ok(())
    })
}

/// Number of classes; 0 for a null handle.
///
/// # Safety
/// `cat` must be null or a live handle from `ld_catalog_enumerate`.
#[no_mangle]
pub unsafe extern "C" fn ld_catalog_len(cat: *const LdCatalog) -> usize {
    cat.as_ref().map_or(0, |c| c.inner.len())
}

/// # Safety
/// `cat` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ld_catalog_class_info(cat: *const LdCatalog, index: usize, out: *mut LdClassInfo) -> LdStatus {
    guard(|| {
        let cat = cat.as_ref().ok_or_else(|| null("catalog"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let g = cat.classes.get(index).ok_or((LdStatus::InvalidArgument, format!("index {index} out of range")))?;
        *out = LdClassInfo {
            d: g.d(),
            v: g.v(),
            automorphisms: g.aut_count(),
            components: g.component_count(),
            cyclic: g.all_components_cyclic(),
        };
        Ok(())
    })
}

/// Writes the class's edge list (for example `0-1 1-2 0-2*2`) into `buf`.
/// `needed` receives the required size including the terminator; a
/// too-small buffer yields `LD_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `cat` must be a live handle; `buf` must be valid for `len` bytes (or null
/// with `len == 0`); `needed` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ld_catalog_class_edges(
    cat: *const LdCatalog,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> LdStatus {
    guard(|| {
        let cat = cat.as_ref().ok_or_else(|| null("catalog"))?;
        let g = cat.classes.get(index).ok_or((LdStatus::InvalidArgument, format!("index {index} out of range")))?;
        write_text(&g.to_exponent_vector().to_string(), buf, len, needed)
    })
}

/// # Safety
/// `cat` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ld_catalog_free(cat: *mut LdCatalog) {
    if !cat.is_null() {
        drop(Box::from_raw(cat));
    }
}

unsafe fn write_text(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), (LdStatus, String)> {
    let bytes = text.as_bytes();
    if let Some(n) = needed.as_mut() {
        *n = bytes.len() + 1;
    }
    if buf.is_null() || len < bytes.len() + 1 {
        return Err((LdStatus::BufferTooSmall, format!("need {} bytes", bytes.len() + 1)));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
    *buf.add(bytes.len()) = 0;
    Ok(())
}

/// r-value table for two Gaussian models.
///
/// # Safety
/// Parameter pointers must be valid; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ld_rtable_new_gaussian(
    p: *const LdGaussianParams,
    q: *const LdGaussianParams,
    out: *mut *mut LdRTable,
) -> LdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (p, q) = (gaussian(p)?, gaussian(q)?);
        let inner = RTable::new(PriorSpec::gaussian(&p), PriorSpec::gaussian(&q));
        *out = Box::into_raw(Box::new(LdRTable { inner }));
        Ok(())
    })
}

/// r-value table for two binary models, on the mean matrices without the
/// constant `q`.
///
/// # Safety
/// As `ld_rtable_new_gaussian`.
#[no_mangle]
pub unsafe extern "C" fn ld_rtable_new_binary(
    p: *const LdBinaryParams,
    q: *const LdBinaryParams,
    out: *mut *mut LdRTable,
) -> LdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (p, q) = (binary(p)?, binary(q)?);
        let inner = RTable::new(PriorSpec::binary_shift_free(&p), PriorSpec::binary_shift_free(&q));
        *out = Box::into_raw(Box::new(LdRTable { inner }));
        Ok(())
    })
}

/// r-value of the multigraph given as an edge list such as `0-1 1-2 0-2`.
/// `value` receives the nearest double; if `buf` is non-null the exact
/// value is written there as `p/q` text.
///
/// # Safety
/// `table` must be a live handle, `edges` a NUL-terminated string, `value`
/// valid for writes; `buf`/`len`/`needed` as in `ld_catalog_class_edges`.
#[no_mangle]
pub unsafe extern "C" fn ld_rtable_r_value(
    table: *const LdRTable,
    edges: *const c_char,
    value: *mut f64,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> LdStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        if edges.is_null() {
            return Err(null("edges"));
        }
        let value = value.as_mut().ok_or_else(|| null("value"))?;
        let text = CStr::from_ptr(edges).to_str().map_err(|_| (LdStatus::InvalidArgument, "edges is not UTF-8".into()))?;
        let g = MultigraphClass::parse(text).map_err(|e| lift(e.into()))?;
        let r = table.inner.r_value(&g).map_err(lift)?;
        *value = scalar::to_f64(&r);
        if !buf.is_null() || !needed.is_null() {
            write_text(&r.to_string(), buf, len, needed)?;
        }
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ld_rtable_free(table: *mut LdRTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

fn fill(out: &mut LdAdvantage, r: &AdvantageReport) {
    *out = LdAdvantage {
        total_bound: r.total_bound,
        series_bound: r.series_bound.value,
        m_hat: r.derived_constants.m_hat,
        m_tilde: r.derived_constants.m_tilde,
        classes_summed: r.classes_summed,
        forests_dropped: r.forests_dropped,
    };
}

/// Gaussian advantage bound at degree `d_max`, evaluated at `p`'s `n`.
///
/// # Safety
/// Parameter pointers must be valid; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ld_advantage_gaussian(
    p: *const LdGaussianParams,
    q: *const LdGaussianParams,
    d_max: u32,
    out: *mut LdAdvantage,
) -> LdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = adv_bound_gaussian(&AdvQuery::gaussian(gaussian(p)?, gaussian(q)?, d_max)).map_err(lift)?;
        fill(out, &r);
        Ok(())
    })
}

/// Binary advantage bound at degree `d_max`, evaluated at `p`'s `n`.
///
/// # Safety
/// As `ld_advantage_gaussian`.
#[no_mangle]
pub unsafe extern "C" fn ld_advantage_binary(
    p: *const LdBinaryParams,
    q: *const LdBinaryParams,
    d_max: u32,
    out: *mut LdAdvantage,
) -> LdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = adv_bound_binary(&AdvQuery::binary(binary(p)?, binary(q)?, d_max)).map_err(lift)?;
        fill(out, &r);
        Ok(())
    })
}

/// Fills `y` (row-major `n × n`, `n` from the params) with a Gaussian sample.
///
/// # Safety
/// `p` must be valid; `y` must be valid for `n * n` writes.
#[no_mangle]
pub unsafe extern "C" fn ld_sample_gaussian(p: *const LdGaussianParams, seed: u64, y: *mut f64) -> LdStatus {
    guard(|| {
        if y.is_null() {
            return Err(null("y"));
        }
        let s = sample_gaussian(&gaussian(p)?, seed);
        if let Observations::Real(v) = &s.y {
            ptr::copy_nonoverlapping(v.as_ptr(), y, v.len());
        }
        Ok(())
    })
}

/// Fills `adj` (row-major `n × n`, entries 0/1) with a binary sample.
///
/// # Safety
/// `p` must be valid; `adj` must be valid for `n * n` writes.
#[no_mangle]
pub unsafe extern "C" fn ld_sample_binary(p: *const LdBinaryParams, seed: u64, adj: *mut u8) -> LdStatus {
    guard(|| {
        if adj.is_null() {
            return Err(null("adj"));
        }
        let s = sample_binary(&binary(p)?, seed);
        if let Observations::Binary(v) = &s.y {
            ptr::copy_nonoverlapping(v.as_ptr(), adj, v.len());
        }
        Ok(())
    })
}

/// Diagonal sum of a symmetric row-major `n × n` matrix.
///
/// # Safety
/// `y` must be valid for `n * n` reads; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ld_diag_sum(y: *const f64, n: usize, out: *mut f64) -> LdStatus {
    guard(|| {
        if y.is_null() {
            return Err(null("y"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let values = std::slice::from_raw_parts(y, n * n).to_vec();
        let sample = Sample { n, y: Observations::Real(values), sigma: lowdeg::models::LabelAssignment(Vec::new()) };
        *out = diag_sum(&sample).map_err(lift)?;
        Ok(())
    })
}

/// Signed triangle count `Σ_{i<j<k} (A_ij - q)(A_ik - q)(A_jk - q)` of a
/// symmetric 0/1 adjacency matrix with zero diagonal.
///
/// # Safety
/// `adj` must be valid for `n * n` reads; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ld_signed_triangles(adj: *const u8, n: usize, q: f64, out: *mut f64) -> LdStatus {
    guard(|| {
        if adj.is_null() {
            return Err(null("adj"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let values = std::slice::from_raw_parts(adj, n * n).to_vec();
        let sample = Sample::from_adjacency(n, values).map_err(lift)?;
        let r = signed_triangles(&sample, &exact(q, "q")?).map_err(lift)?;
        *out = scalar::to_f64(&r);
        Ok(())
    })
}
