//! C ABI over the `shardvalue` library.
//!
//! Every fallible call returns an [`SvStatus`]; on failure the message is
//! available from [`sv_last_error`] on the same thread. Handles are opaque
//! and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use shardvalue::corpus::{load_corpus, Corpus};
use shardvalue::ledger::{
    merkle_root, read_doc_ids, read_entries, verify_ledger, LedgerFingerprint, Opening,
    RejectReason, Verdict, VerifyOptions, DEFAULT_METRIC_TOLERANCE,
};
use shardvalue::proxy::LabelPolicy;
use shardvalue::valuation::{run_valuation, Valuation, ValuationConfig};
use shardvalue::Error;

/// Status codes returned by every fallible `sv_` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Malformed = 4,
    InvalidInput = 5,
    Numerical = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Outcome of ledger verification.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvVerdict {
    Accept = 0,
    RejectData = 1,
    RejectChain = 2,
    RejectContinuity = 3,
    RejectMetrics = 4,
    RejectMalformed = 5,
}

/// Per-source valuation signals.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SvSourceScores {
    pub doc_count: u64,
    pub token_count: u64,
    pub dqs_mean: f64,
    pub proxy_gain: f64,
    pub influence: f64,
    pub shapley: f64,
}

/// Opaque corpus handle.
pub struct SvCorpus(Corpus);

/// Opaque valuation handle.
pub struct SvValuation {
    inner: Valuation,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(SvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => SvStatus::Io,
            Error::MalformedRecord { .. } | Error::Json(_) | Error::Csv(_) => SvStatus::Malformed,
            Error::Numerical(_) => SvStatus::Numerical,
            _ => SvStatus::InvalidInput,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SvStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SvStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SvStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside shardvalue");
            SvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SvStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next `sv_` call on the same thread.
#[no_mangle]
pub extern "C" fn sv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from an `sv_` function that documents ownership transfer.
#[no_mangle]
pub unsafe extern "C" fn sv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a JSONL corpus from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_corpus_load(path: *const c_char, out: *mut *mut SvCorpus) -> SvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let corpus = load_corpus(path)?;
        *out = Box::into_raw(Box::new(SvCorpus(corpus)));
        Ok(())
    })
}

/// Parses a corpus from an in-memory JSONL string.
///
/// # Safety
/// `jsonl` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_corpus_from_jsonl(jsonl: *const c_char, out: *mut *mut SvCorpus) -> SvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(jsonl, "jsonl")?;
        let corpus = Corpus::from_jsonl_str(text)?;
        *out = Box::into_raw(Box::new(SvCorpus(corpus)));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle from `sv_corpus_load`/`sv_corpus_from_jsonl`.
#[no_mangle]
pub unsafe extern "C" fn sv_corpus_free(corpus: *mut SvCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of documents and sources in the corpus.
///
/// # Safety
/// `corpus` must be a live handle; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn sv_corpus_counts(
    corpus: *const SvCorpus,
    documents: *mut usize,
    sources: *mut usize,
) -> SvStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        if !documents.is_null() {
            *documents = c.0.documents().len();
        }
        if !sources.is_null() {
            *sources = c.0.sources().len();
        }
        Ok(())
    })
}

/// Runs DQS, leave-one-source-out proxy gain, influence and Monte Carlo
/// Shapley. `target_domain` may be null to use the stored labels.
///
/// # Safety
/// `corpus` must be a live handle, `target_domain` null or NUL-terminated,
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_valuation_run(
    corpus: *const SvCorpus,
    target_domain: *const c_char,
    shapley_permutations: usize,
    seed: u64,
    out: *mut *mut SvValuation,
) -> SvStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let policy = match opt_str_arg(target_domain, "target_domain")? {
            None => LabelPolicy::Stored,
            Some(d) => LabelPolicy::TargetDomain {
                domain: d.to_string(),
                negatives_per_domain: None,
            },
        };
        let mut config = ValuationConfig::new(policy);
        config.shapley_permutations = shapley_permutations;
        config.shapley_seed = seed;
        let inner = run_valuation(&c.0, &config)?;
        let names = inner
            .sources
            .iter()
            .map(|s| CString::new(s.replace('\0', " ")).unwrap_or_default())
            .collect();
        *out = Box::into_raw(Box::new(SvValuation { inner, names }));
        Ok(())
    })
}

/// # Safety
/// `v` must be a live valuation handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_valuation_source_count(v: *const SvValuation, out: *mut usize) -> SvStatus {
    guard(|| {
        let v = v.as_ref().ok_or_else(|| null("valuation"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v.inner.sources.len();
        Ok(())
    })
}

/// Source name at `index`, borrowed from the handle.
///
/// # Safety
/// `v` must be a live valuation handle. Returns null on error.
#[no_mangle]
pub unsafe extern "C" fn sv_valuation_source_name(v: *const SvValuation, index: usize) -> *const c_char {
    clear_last_error();
    match v.as_ref() {
        None => {
            set_last_error("valuation is null");
            ptr::null()
        }
        Some(v) => match v.names.get(index) {
            Some(n) => n.as_ptr(),
            None => {
                set_last_error(format!("source index {index} out of range"));
                ptr::null()
            }
        },
    }
}

/// Signals for the source at `index`.
///
/// # Safety
/// `v` must be a live valuation handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_valuation_get(
    v: *const SvValuation,
    index: usize,
    out: *mut SvSourceScores,
) -> SvStatus {
    guard(|| {
        let v = &v.as_ref().ok_or_else(|| null("valuation"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        if index >= v.sources.len() {
            return Err(Fail(
                SvStatus::OutOfRange,
                format!("source index {index} out of range ({} sources)", v.sources.len()),
            ));
        }
        *out = SvSourceScores {
            doc_count: v.doc_counts[index] as u64,
            token_count: v.token_counts[index],
            dqs_mean: v.dqs_mean[index],
            proxy_gain: v.proxy_gain[index],
            influence: v.influence[index],
            shapley: v.shapley.phi[index],
        };
        Ok(())
    })
}

/// Full valuation as JSON. Free the result with `sv_string_free`.
///
/// # Safety
/// `v` must be a live valuation handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sv_valuation_to_json(v: *const SvValuation, out: *mut *mut c_char) -> SvStatus {
    guard(|| {
        let v = v.as_ref().ok_or_else(|| null("valuation"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = serde_json::to_string(&v.inner).map_err(Error::from)?;
        *out = CString::new(json)
            .map_err(|e| Fail(SvStatus::Malformed, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `v` must be null or a handle from `sv_valuation_run`.
#[no_mangle]
pub unsafe extern "C" fn sv_valuation_free(v: *mut SvValuation) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Merkle root over `count` NUL-terminated document ids, written to `out`
/// (32 bytes). `count` must be at least 1.
///
/// # Safety
/// `ids` must point to `count` valid strings (may be null when `count` is 0)
/// and `out` to 32 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sv_merkle_root(ids: *const *const c_char, count: usize, out: *mut u8) -> SvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if ids.is_null() && count > 0 {
            return Err(null("ids"));
        }
        let mut items = Vec::with_capacity(count);
        for i in 0..count {
            items.push(str_arg(*ids.add(i), "id")?.as_bytes());
        }
        let root = merkle_root(&items)?;
        ptr::copy_nonoverlapping(root.as_ptr(), out, root.len());
        Ok(())
    })
}

/// Verifies a ledger from its files. The status reports whether the files
/// could be checked at all; `verdict` carries the outcome, with the reject
/// reason in `sv_last_error`. `claimed_gain` and `opening_path` may be null.
///
/// # Safety
/// Path arguments must be NUL-terminated strings; `verdict` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sv_ledger_verify_files(
    fingerprint_path: *const c_char,
    ledger_path: *const c_char,
    doc_ids_path: *const c_char,
    claimed_gain: *const f64,
    opening_path: *const c_char,
    verdict: *mut SvVerdict,
) -> SvStatus {
    let mut reason = None;
    let status = guard(|| {
        if verdict.is_null() {
            return Err(null("verdict"));
        }
        let fp = PathBuf::from(str_arg(fingerprint_path, "fingerprint_path")?);
        let ledger = PathBuf::from(str_arg(ledger_path, "ledger_path")?);
        let ids = PathBuf::from(str_arg(doc_ids_path, "doc_ids_path")?);
        let opening = opt_str_arg(opening_path, "opening_path")?;
        let ids = read_doc_ids(ids)?;
        let loaded = (|| {
            let fp = LedgerFingerprint::load(fp)?;
            let entries = read_entries(ledger)?;
            let opening = opening.map(Opening::load).transpose()?;
            Ok::<_, Error>((fp, entries, opening))
        })();
        let v = match loaded {
            Ok((fp, entries, opening)) => verify_ledger(
                &fp,
                &ids,
                &entries,
                VerifyOptions {
                    claimed_improvement: claimed_gain.as_ref().copied(),
                    opening: opening.as_ref(),
                    metric_tolerance: DEFAULT_METRIC_TOLERANCE,
                },
            ),
            Err(e) => Verdict::Reject(RejectReason::Malformed(e.to_string())),
        };
        *verdict = match &v {
            Verdict::Accept => SvVerdict::Accept,
            Verdict::Reject(r) => {
                reason = Some(r.to_string());
                match r {
                    RejectReason::Data => SvVerdict::RejectData,
                    RejectReason::Chain => SvVerdict::RejectChain,
                    RejectReason::Continuity(_) => SvVerdict::RejectContinuity,
                    RejectReason::Metrics(_) => SvVerdict::RejectMetrics,
                    RejectReason::Malformed(_) => SvVerdict::RejectMalformed,
                }
            }
        };
        Ok(())
    });
    if let Some(r) = reason {
        set_last_error(r);
    }
    status
}
