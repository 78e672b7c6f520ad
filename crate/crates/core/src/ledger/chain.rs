//! The three-stage training ledger, its fingerprint and the verifier.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::canonical::Canonical;
use super::commit::{commit_params, Nonce};
use super::merkle::merkle_root;
use crate::error::{Error, Result};
use crate::hashing::{sha256_concat, Hash32};

/// Metric key holding the validation value at a checkpoint.
pub const VALUE_METRIC: &str = "value";
pub const DEFAULT_METRIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub step: u64,
    pub batch_doc_ids: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub param_commitment: Hash32,
}

fn hex32(s: &str) -> Result<Hash32> {
    let bytes = hex::decode(s).map_err(|e| Error::invalid(format!("bad hash hex: {e}")))?;
    bytes
        .try_into()
        .map_err(|_| Error::invalid("hash must be 32 bytes"))
}

fn field<'a>(c: &'a Canonical, key: &str) -> Result<&'a Canonical> {
    c.get(key)
        .ok_or_else(|| Error::invalid(format!("missing field `{key}`")))
}

fn field_str<'a>(c: &'a Canonical, key: &str) -> Result<&'a str> {
    match field(c, key)? {
        Canonical::Str(s) => Ok(s),
        _ => Err(Error::invalid(format!("field `{key}` is not a string"))),
    }
}

fn field_u64(c: &Canonical, key: &str) -> Result<u64> {
    match field(c, key)? {
        Canonical::Int(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::invalid(format!("field `{key}` is not a non-negative integer"))),
    }
}

fn as_float(c: &Canonical) -> Result<f64> {
    match c {
        Canonical::Float(f) => Ok(*f),
        Canonical::Int(i) => Ok(*i as f64),
        _ => Err(Error::invalid("expected a number")),
    }
}

fn check_keys(c: &Canonical, keys: &[&str]) -> Result<()> {
    match c {
        Canonical::Object(m) if m.len() == keys.len() && keys.iter().all(|k| m.contains_key(*k)) => {
            Ok(())
        }
        _ => Err(Error::invalid(format!("expected an object with keys {keys:?}"))),
    }
}

impl LedgerEntry {
    pub fn to_canonical(&self) -> Canonical {
        Canonical::object([
            (
                "batch_doc_ids",
                Canonical::Array(self.batch_doc_ids.iter().cloned().map(Canonical::Str).collect()),
            ),
            (
                "metrics",
                Canonical::Object(
                    self.metrics
                        .iter()
                        .map(|(k, v)| (k.clone(), Canonical::Float(*v)))
                        .collect(),
                ),
            ),
            ("param_commitment", Canonical::Bytes(self.param_commitment.to_vec())),
            ("step", Canonical::Int(self.step as i64)),
        ])
    }

    pub fn canonical_json(&self) -> Result<String> {
        self.to_canonical().to_string()
    }

    pub fn from_canonical(c: &Canonical) -> Result<Self> {
        check_keys(c, &["batch_doc_ids", "metrics", "param_commitment", "step"])?;
        let batch_doc_ids = match field(c, "batch_doc_ids")? {
            Canonical::Array(items) => items
                .iter()
                .map(|i| match i {
                    Canonical::Str(s) => Ok(s.clone()),
                    _ => Err(Error::invalid("batch_doc_ids must hold strings")),
                })
                .collect::<Result<_>>()?,
            _ => return Err(Error::invalid("batch_doc_ids must be an array")),
        };
        let metrics = match field(c, "metrics")? {
            Canonical::Object(m) => m
                .iter()
                .map(|(k, v)| Ok((k.clone(), as_float(v)?)))
                .collect::<Result<_>>()?,
            _ => return Err(Error::invalid("metrics must be an object")),
        };
        Ok(LedgerEntry {
            step: field_u64(c, "step")?,
            batch_doc_ids,
            metrics,
            param_commitment: hex32(field_str(c, "param_commitment")?)?,
        })
    }

    pub fn parse(line: &str) -> Result<Self> {
        Self::from_canonical(&Canonical::parse(line)?)
    }
}

/// Constant-size summary of a ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerFingerprint {
    pub dataset_root: Hash32,
    pub c0: Hash32,
    pub c_t: Hash32,
    pub entry_count: u64,
    pub chain_tail: Hash32,
}

impl LedgerFingerprint {
    pub fn to_canonical(&self) -> Canonical {
        Canonical::object([
            ("c0", Canonical::Bytes(self.c0.to_vec())),
            ("c_t", Canonical::Bytes(self.c_t.to_vec())),
            ("chain_tail", Canonical::Bytes(self.chain_tail.to_vec())),
            ("dataset_root", Canonical::Bytes(self.dataset_root.to_vec())),
            ("entry_count", Canonical::Int(self.entry_count as i64)),
        ])
    }

    pub fn canonical_json(&self) -> Result<String> {
        self.to_canonical().to_string()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c = Canonical::parse(text.trim_end())?;
        check_keys(&c, &["c0", "c_t", "chain_tail", "dataset_root", "entry_count"])?;
        Ok(LedgerFingerprint {
            dataset_root: hex32(field_str(&c, "dataset_root")?)?,
            c0: hex32(field_str(&c, "c0")?)?,
            c_t: hex32(field_str(&c, "c_t")?)?,
            entry_count: field_u64(&c, "entry_count")?,
            chain_tail: hex32(field_str(&c, "chain_tail")?)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, format!("{}\n", self.canonical_json()?)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// `h_t = SHA-256(h_{t−1} ‖ canonical(entry_t))` folded from `h_0 = c0`.
pub fn chain_tail(c0: &Hash32, entries: &[LedgerEntry]) -> Result<Hash32> {
    let mut h = *c0;
    for e in entries {
        h = sha256_concat(&[&h, e.canonical_json()?.as_bytes()]);
    }
    Ok(h)
}

/// Disclosed parameters and nonce behind `c0` and `c_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Opening {
    pub nonce: Nonce,
    pub initial_w: Vec<f64>,
    pub initial_b: f64,
    pub final_w: Vec<f64>,
    pub final_b: f64,
}

impl Opening {
    pub fn to_canonical(&self) -> Canonical {
        let arr = |w: &[f64]| Canonical::Array(w.iter().map(|&x| Canonical::Float(x)).collect());
        Canonical::object([
            ("final_b", Canonical::Float(self.final_b)),
            ("final_w", arr(&self.final_w)),
            ("initial_b", Canonical::Float(self.initial_b)),
            ("initial_w", arr(&self.initial_w)),
            ("nonce", Canonical::Bytes(self.nonce.0.to_vec())),
        ])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c = Canonical::parse(text.trim_end())?;
        check_keys(&c, &["final_b", "final_w", "initial_b", "initial_w", "nonce"])?;
        let arr = |key: &str| -> Result<Vec<f64>> {
            match field(&c, key)? {
                Canonical::Array(a) => a.iter().map(as_float).collect(),
                _ => Err(Error::invalid(format!("`{key}` must be an array"))),
            }
        };
        Ok(Opening {
            nonce: Nonce::from_hex(field_str(&c, "nonce")?)?,
            initial_w: arr("initial_w")?,
            initial_b: as_float(field(&c, "initial_b")?)?,
            final_w: arr("final_w")?,
            final_b: as_float(field(&c, "final_b")?)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, format!("{}\n", self.to_canonical().to_string()?))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Append-only training ledger. Stage 1 ([`Ledger::initialize`]) commits
/// the dataset and initial parameters, stage 2 ([`Ledger::append`]) adds
/// checkpoints, stage 3 ([`Ledger::fingerprint`]) folds the hash chain.
#[derive(Debug, Default)]
pub struct Ledger {
    dataset_root: Option<Hash32>,
    c0: Option<Hash32>,
    entries: Vec<LedgerEntry>,
    journal: Option<(PathBuf, File)>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ledger that also appends each entry, as one canonical JSON line, to
    /// `path`. The file must not exist yet.
    pub fn with_journal(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .append(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Ledger {
            journal: Some((path, file)),
            ..Self::default()
        })
    }

    pub fn initialize(&mut self, doc_ids: &[String], c0: Hash32) -> Result<()> {
        if self.c0.is_some() {
            return Err(Error::invalid("ledger is already initialized"));
        }
        let root = if doc_ids.is_empty() {
            // a run over no documents commits to the empty string
            crate::hashing::sha256(b"")
        } else {
            merkle_root(doc_ids)?
        };
        self.dataset_root = Some(root);
        self.c0 = Some(c0);
        Ok(())
    }

    pub fn is_initialized(&self) -> bool {
        self.c0.is_some()
    }

    pub fn append(&mut self, entry: LedgerEntry) -> Result<()> {
        if !self.is_initialized() {
            return Err(Error::invalid("ledger entry recorded before initialization"));
        }
        if let Some(last) = self.entries.last() {
            if entry.step <= last.step {
                return Err(Error::invalid(format!(
                    "ledger step {} does not follow step {}",
                    entry.step, last.step
                )));
            }
        }
        if let Some((path, file)) = &mut self.journal {
            writeln!(file, "{}", entry.canonical_json()?).map_err(|e| Error::io(path.as_path(), e))?;
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn fingerprint(&self) -> Result<LedgerFingerprint> {
        let (Some(dataset_root), Some(c0)) = (self.dataset_root, self.c0) else {
            return Err(Error::invalid("cannot fingerprint an uninitialized ledger"));
        };
        Ok(LedgerFingerprint {
            dataset_root,
            c0,
            c_t: self.entries.last().map_or(c0, |e| e.param_commitment),
            entry_count: self.entries.len() as u64,
            chain_tail: chain_tail(&c0, &self.entries)?,
        })
    }
}

/// Canonical ledger text: one entry per line.
pub fn entries_to_jsonl(entries: &[LedgerEntry]) -> Result<String> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&e.canonical_json()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_entries(path: impl AsRef<Path>, entries: &[LedgerEntry]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, entries_to_jsonl(entries)?).map_err(|e| Error::io(path, e))
}

pub fn read_entries(path: impl AsRef<Path>) -> Result<Vec<LedgerEntry>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        out.push(LedgerEntry::parse(&line).map_err(|e| Error::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_doc_ids(path: impl AsRef<Path>, ids: &[String]) -> Result<()> {
    let path = path.as_ref();
    if ids.iter().any(|id| id.contains('\n')) {
        return Err(Error::invalid("document ids must not contain newlines"));
    }
    let mut text = ids.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_doc_ids(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "check", content = "detail")]
pub enum RejectReason {
    Data,
    Chain,
    Continuity(String),
    Metrics(String),
    Malformed(String),
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::Data => write!(f, "data: dataset Merkle root mismatch"),
            RejectReason::Chain => write!(f, "chain: replayed hash chain does not match"),
            RejectReason::Continuity(d) => write!(f, "continuity: {d}"),
            RejectReason::Metrics(d) => write!(f, "metrics: {d}"),
            RejectReason::Malformed(d) => write!(f, "malformed: {d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions<'a> {
    pub claimed_improvement: Option<f64>,
    pub opening: Option<&'a Opening>,
    pub metric_tolerance: f64,
}

impl Default for VerifyOptions<'_> {
    fn default() -> Self {
        VerifyOptions {
            claimed_improvement: None,
            opening: None,
            metric_tolerance: DEFAULT_METRIC_TOLERANCE,
        }
    }
}

/// Checks, in order: the dataset root, the hash chain, parameter
/// continuity, then metric consistency with the claimed improvement. The
/// first failing check is reported.
pub fn verify_ledger(
    fingerprint: &LedgerFingerprint,
    doc_ids: &[String],
    entries: &[LedgerEntry],
    options: VerifyOptions<'_>,
) -> Verdict {
    let root = if doc_ids.is_empty() {
        Ok(crate::hashing::sha256(b""))
    } else {
        merkle_root(doc_ids)
    };
    match root {
        Ok(r) if r == fingerprint.dataset_root => {}
        Ok(_) => return Verdict::Reject(RejectReason::Data),
        Err(e) => return Verdict::Reject(RejectReason::Malformed(e.to_string())),
    }

    match chain_tail(&fingerprint.c0, entries) {
        Ok(tail) if tail == fingerprint.chain_tail && entries.len() as u64 == fingerprint.entry_count => {}
        Ok(_) => return Verdict::Reject(RejectReason::Chain),
        Err(e) => return Verdict::Reject(RejectReason::Malformed(e.to_string())),
    }

    if entries.windows(2).any(|w| w[1].step <= w[0].step) {
        return Verdict::Reject(RejectReason::Malformed("steps are not strictly increasing".into()));
    }
    let last_commitment = entries.last().map_or(fingerprint.c0, |e| e.param_commitment);
    if last_commitment != fingerprint.c_t {
        return Verdict::Reject(RejectReason::Continuity(
            "final commitment does not match the last entry".into(),
        ));
    }
    if let Some(open) = options.opening {
        let recommit = |w: &[f64], b: f64| commit_params(w, b, open.nonce).map(|c| c.digest);
        match recommit(&open.initial_w, open.initial_b) {
            Ok(d) if d == fingerprint.c0 => {}
            _ => {
                return Verdict::Reject(RejectReason::Continuity(
                    "initial parameters do not open c0".into(),
                ))
            }
        }
        match recommit(&open.final_w, open.final_b) {
            Ok(d) if d == fingerprint.c_t => {}
            _ => {
                return Verdict::Reject(RejectReason::Continuity(
                    "final parameters do not open c_t".into(),
                ))
            }
        }
    }

    if let Some(claimed) = options.claimed_improvement {
        let recorded = match (entries.first(), entries.last()) {
            (None, _) | (_, None) => 0.0,
            (Some(first), Some(last)) => {
                match (first.metrics.get(VALUE_METRIC), last.metrics.get(VALUE_METRIC)) {
                    (Some(a), Some(b)) => b - a,
                    _ => {
                        return Verdict::Reject(RejectReason::Metrics(format!(
                            "entries lack the `{VALUE_METRIC}` metric"
                        )))
                    }
                }
            }
        };
        if !((recorded - claimed).abs() <= options.metric_tolerance) {
            return Verdict::Reject(RejectReason::Metrics(format!(
                "recorded improvement {recorded:.8} differs from claimed {claimed:.8}"
            )));
        }
    }
    Verdict::Accept
}
