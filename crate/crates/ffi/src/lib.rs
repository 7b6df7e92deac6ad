//! C ABI for amrfact-core.
//!
//! Every function returns an [`AmrfactStatus`]. On failure a message is
//! available from [`amrfact_last_error`] on the same thread. Graphs are
//! opaque handles released with [`amrfact_graph_free`]; strings returned
//! through out-parameters are released with [`amrfact_string_free`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use amrfact_core::amr::{parse_penman, serialize_penman, AmrGraph};
use amrfact_core::eval::{balanced_accuracy, tune_threshold};
use amrfact_core::filter::{decide, FilterConfig, ScoreRecord};
use amrfact_core::perturb::{apply_all, ErrorFamily, Lexicon, PerturbConfig, PerturbationContext, ValuePools};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmrfactStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// PENMAN text could not be parsed into a valid graph.
    ParseError = 3,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 4,
    /// The library failed internally; see the last error message.
    InternalError = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Parsed AMR graph. Only ever handled through pointers.
pub struct AmrfactGraph {
    inner: AmrGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

struct Failure(AmrfactStatus, String);

type Outcome = Result<(), Failure>;

fn fail(status: AmrfactStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Outcome) -> AmrfactStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AmrfactStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            AmrfactStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(AmrfactStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(AmrfactStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(AmrfactStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn graph_ref<'a>(g: *const AmrfactGraph) -> Result<&'a AmrGraph, Failure> {
    g.as_ref()
        .map(|g| &g.inner)
        .ok_or_else(|| fail(AmrfactStatus::NullArgument, "`graph` is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(AmrfactStatus::NullArgument, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(AmrfactStatus::InternalError, "output contains a NUL byte"))
}

/// Message describing the most recent failure on this thread, or null.
/// The pointer stays valid until the next call into the library on the
/// same thread.
#[no_mangle]
pub extern "C" fn amrfact_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn amrfact_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses one PENMAN graph. On success `*out` receives a new handle.
///
/// # Safety
/// `penman` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amrfact_graph_parse(penman: *const c_char, out: *mut *mut AmrfactGraph) -> AmrfactStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let text = read_str(penman, "penman")?;
        let inner = parse_penman(text).map_err(|e| fail(AmrfactStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(AmrfactGraph { inner }));
        Ok(())
    })
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `graph` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn amrfact_graph_free(graph: *mut AmrfactGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Writes the single-line PENMAN form of `graph` to `*out`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amrfact_graph_to_penman(graph: *const AmrfactGraph, out: *mut *mut c_char) -> AmrfactStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let g = graph_ref(graph)?;
        let text = serialize_penman(g).map_err(|e| fail(AmrfactStatus::InternalError, e.to_string()))?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// Number of nodes in `graph`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amrfact_graph_node_count(graph: *const AmrfactGraph, out: *mut usize) -> AmrfactStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = graph_ref(graph)?.node_count();
        Ok(())
    })
}

/// Applies every applicable perturbation to `graph` with the bundled
/// lexicons and writes a JSON array of `{family, variant, site, penman}`
/// objects to `*out`.
///
/// `families` is a comma-separated list of family names, or null for all
/// five. `document_text` (nullable) marks values already present in the
/// source document, which out-of-article substitution avoids.
///
/// # Safety
/// Pointer arguments must be valid; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn amrfact_perturb(
    graph: *const AmrfactGraph,
    families: *const c_char,
    document_text: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> AmrfactStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let g = graph_ref(graph)?;
        let mut config = PerturbConfig::with_seed(seed);
        if !families.is_null() {
            let list = read_str(families, "families")?;
            config.families = list
                .split(',')
                .map(|f| f.trim().parse::<ErrorFamily>())
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(|e| fail(AmrfactStatus::InvalidArgument, e))?;
        }
        let pools = ValuePools::harvest([g]);
        let mut ctx = PerturbationContext::new(Arc::new(Lexicon::bundled()))
            .with_global(Arc::new(pools.clone()))
            .with_same_doc(pools)
            .with_document_graphs([g]);
        if !document_text.is_null() {
            ctx = ctx.with_document_text(read_str(document_text, "document_text")?);
        }
        let mut items = Vec::new();
        for (site, mut perturbed) in apply_all(g, &ctx, &config) {
            perturbed.metadata_mut().clear();
            let penman = serialize_penman(&perturbed).map_err(|e| fail(AmrfactStatus::InternalError, e.to_string()))?;
            items.push(serde_json::json!({
                "family": site.family().name(),
                "variant": site.variant.name(),
                "site": site.to_string(),
                "penman": penman,
            }));
        }
        *out = into_c_string(serde_json::Value::Array(items).to_string())?;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn amrfact_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Filter decision: `*out` is true when `entailment < tau1` and
/// `relevance > tau2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amrfact_filter_decide(
    entailment: f64,
    relevance: f64,
    tau1: f64,
    tau2: f64,
    out: *mut bool,
) -> AmrfactStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = FilterConfig::new(tau1, tau2).map_err(|e| fail(AmrfactStatus::InvalidArgument, e.to_string()))?;
        let score = ScoreRecord::new("", entailment, relevance);
        score
            .validate()
            .map_err(|e| fail(AmrfactStatus::InvalidArgument, e.to_string()))?;
        *out = decide(&score, &cfg);
        Ok(())
    })
}

/// Balanced accuracy of `preds` against `golds` (true = inconsistent).
///
/// # Safety
/// `preds` and `golds` must point to `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn amrfact_balanced_accuracy(
    preds: *const bool,
    golds: *const bool,
    len: usize,
    out: *mut f64,
) -> AmrfactStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let preds = slice(preds, len, "preds")?;
        let golds = slice(golds, len, "golds")?;
        *out = balanced_accuracy(preds, golds).map_err(|e| fail(AmrfactStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Threshold maximizing balanced accuracy of `score >= threshold` as a
/// predictor of inconsistency. The threshold may be infinite.
///
/// # Safety
/// `scores` and `golds` must point to `len` values; out-pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn amrfact_tune_threshold(
    scores: *const f64,
    golds: *const bool,
    len: usize,
    out_threshold: *mut f64,
    out_balanced_accuracy: *mut f64,
) -> AmrfactStatus {
    guard(|| {
        let out_t = out_ptr(out_threshold, "out_threshold")?;
        let out_ba = out_ptr(out_balanced_accuracy, "out_balanced_accuracy")?;
        let scores = slice(scores, len, "scores")?;
        let golds = slice(golds, len, "golds")?;
        let tuned = tune_threshold(scores, golds).map_err(|e| fail(AmrfactStatus::InvalidArgument, e.to_string()))?;
        *out_t = tuned.threshold;
        *out_ba = tuned.balanced_accuracy;
        Ok(())
    })
}
