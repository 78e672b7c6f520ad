//! The validation value function `V(S)`, its subset cache and
//! leave-one-source-out gains.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{featurize, DEFAULT_DIM};
use super::logistic::{
    log_loss, train_logistic_observed, Checkpoint, LabeledExample, TrainConfig, TrainedModel,
};
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::hashing::{sha256, Hash32};

/// How binary labels are assigned to documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelPolicy {
    /// Use the `label` field of every record; train records must carry one.
    Stored,
    /// Label 1 iff the document's domain equals `domain`. Validation keeps
    /// every in-domain record as a positive and, from each other domain,
    /// the first `negatives_per_domain` records (all of them when `None`).
    TargetDomain {
        domain: String,
        negatives_per_domain: Option<usize>,
    },
}

impl LabelPolicy {
    pub fn target(domain: impl Into<String>) -> Self {
        LabelPolicy::TargetDomain {
            domain: domain.into(),
            negatives_per_domain: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyConfig {
    pub dim: usize,
    pub train: TrainConfig,
    /// L2-normalize feature vectors after counting.
    pub normalize: bool,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        ProxyConfig {
            dim: DEFAULT_DIM,
            train: TrainConfig::default(),
            normalize: true,
        }
    }
}

impl ProxyConfig {
    /// Parameter count of the proxy, `dim + 1`.
    pub fn parameter_count(&self) -> usize {
        self.dim + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueBreakdown {
    pub task_utility: f64,
    pub log_loss: f64,
    pub value: f64,
}

/// `V` of `model` on `validation`: `(p̄₊ − 0.5·p̄₋) − mean log-loss`.
pub fn evaluate(model: &TrainedModel, validation: &[LabeledExample]) -> Result<ValueBreakdown> {
    let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n, mut loss) = (0.0, 0usize, 0.0, 0usize, 0.0);
    for e in validation {
        let p = model.predict(&e.features);
        if e.label == 1 {
            pos_sum += p;
            pos_n += 1;
        } else {
            neg_sum += p;
            neg_n += 1;
        }
        loss += log_loss(p, e.y());
    }
    if pos_n == 0 || neg_n == 0 {
        return Err(Error::invalid(
            "validation split needs at least one positive and one negative example",
        ));
    }
    let task_utility = pos_sum / pos_n as f64 - 0.5 * (neg_sum / neg_n as f64);
    let log_loss = loss / validation.len() as f64;
    Ok(ValueBreakdown {
        task_utility,
        log_loss,
        value: task_utility - log_loss,
    })
}

/// A featurized train document.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub doc_id: String,
    pub source: usize,
    pub example: LabeledExample,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub evaluations: usize,
    pub hits: usize,
}

/// Order-independent cache key of a source subset: SHA-256 of the sorted
/// source ids joined by newlines.
pub fn subset_key(source_ids: &[&str]) -> Hash32 {
    let mut ids: Vec<&str> = source_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    sha256(ids.join("\n").as_bytes())
}

/// Featurized train/validation data for one valuation run, with a shared
/// `V(S)` cache.
pub struct ProxyProblem {
    sources: Vec<String>,
    train: Vec<TrainItem>,
    validation: Vec<LabeledExample>,
    validation_ids: Vec<String>,
    config: ProxyConfig,
    cache: Mutex<HashMap<Hash32, ValueBreakdown>>,
    cache_enabled: bool,
    evaluations: AtomicUsize,
    hits: AtomicUsize,
}

impl std::fmt::Debug for ProxyProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProxyProblem")
            .field("sources", &self.sources)
            .field("train", &self.train.len())
            .field("validation", &self.validation.len())
            .field("config", &self.config)
            .finish()
    }
}

fn featurize_doc(doc: &Document, config: &ProxyConfig) -> super::FeatureVector {
    let v = featurize(&doc.tokens(), config.dim);
    if config.normalize {
        v.l2_normalized()
    } else {
        v
    }
}

/// Validation documents and their labels under `policy`.
pub fn validation_set<'a>(corpus: &'a Corpus, policy: &LabelPolicy) -> Vec<(&'a Document, u8)> {
    match policy {
        LabelPolicy::Stored => corpus
            .validation()
            .map(|d| (d, d.label.unwrap_or(0)))
            .collect(),
        LabelPolicy::TargetDomain {
            domain,
            negatives_per_domain,
        } => {
            let mut taken: HashMap<&str, usize> = HashMap::new();
            corpus
                .validation()
                .filter_map(|d| {
                    if &d.domain == domain {
                        return Some((d, 1));
                    }
                    let n = taken.entry(d.domain.as_str()).or_insert(0);
                    match negatives_per_domain {
                        Some(k) if *n >= *k => None,
                        _ => {
                            *n += 1;
                            Some((d, 0))
                        }
                    }
                })
                .collect()
        }
    }
}

/// Label of a train document under `policy`.
pub fn train_label(doc: &Document, policy: &LabelPolicy) -> Result<u8> {
    match policy {
        LabelPolicy::Stored => doc.label.ok_or_else(|| {
            Error::invalid(format!(
                "train document `{}` has no label and no target domain was given",
                doc.id
            ))
        }),
        LabelPolicy::TargetDomain { domain, .. } => Ok(u8::from(&doc.domain == domain)),
    }
}

impl ProxyProblem {
    pub fn new(corpus: &Corpus, policy: &LabelPolicy, config: ProxyConfig) -> Result<Self> {
        if config.dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        let train = corpus
            .train()
            .map(|d| {
                Ok(TrainItem {
                    doc_id: d.id.clone(),
                    source: corpus
                        .source_index(&d.source)
                        .expect("train sources are indexed"),
                    example: LabeledExample::new(featurize_doc(d, &config), train_label(d, policy)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let val = validation_set(corpus, policy);
        let validation_ids = val.iter().map(|(d, _)| d.id.clone()).collect();
        let validation: Vec<LabeledExample> = val
            .into_iter()
            .map(|(d, y)| LabeledExample::new(featurize_doc(d, &config), y))
            .collect();
        let pos = validation.iter().filter(|e| e.label == 1).count();
        if pos == 0 || pos == validation.len() {
            return Err(Error::invalid(format!(
                "validation split has {pos} positive and {} negative examples; both classes are required",
                validation.len() - pos
            )));
        }
        Ok(ProxyProblem {
            sources: corpus.sources().to_vec(),
            train,
            validation,
            validation_ids,
            config,
            cache: Mutex::new(HashMap::new()),
            cache_enabled: true,
            evaluations: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        })
    }

    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache_enabled = enabled;
        self
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn config(&self) -> &ProxyConfig {
        &self.config
    }

    pub fn train_items(&self) -> &[TrainItem] {
        &self.train
    }

    pub fn validation(&self) -> &[LabeledExample] {
        &self.validation
    }

    pub fn validation_ids(&self) -> &[String] {
        &self.validation_ids
    }

    pub fn cache_stats(&self) -> CacheStats {
        CacheStats {
            evaluations: self.evaluations.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
        }
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        match subset.iter().find(|&&i| i >= self.sources.len()) {
            Some(i) => Err(Error::invalid(format!("source index {i} out of range"))),
            None => Ok(()),
        }
    }

    /// Train items whose source is in `subset`, in corpus order.
    pub fn subset_items(&self, subset: &[usize]) -> Vec<&TrainItem> {
        self.train.iter().filter(|t| subset.contains(&t.source)).collect()
    }

    pub fn untrained_model(&self) -> TrainedModel {
        TrainedModel::zeros(self.config.dim, self.config.train)
    }

    /// Trains on `subset`; the empty subset yields the untrained model.
    pub fn train_subset_observed(
        &self,
        subset: &[usize],
        observer: &mut dyn FnMut(&Checkpoint<'_>),
    ) -> Result<TrainedModel> {
        self.check_subset(subset)?;
        let items = self.subset_items(subset);
        if items.is_empty() {
            return Ok(self.untrained_model());
        }
        let examples: Vec<&LabeledExample> = items.iter().map(|t| &t.example).collect();
        train_logistic_observed(&examples, self.config.train, observer)
    }

    pub fn train_subset(&self, subset: &[usize]) -> Result<TrainedModel> {
        self.train_subset_observed(subset, &mut |_| {})
    }

    pub fn evaluate(&self, model: &TrainedModel) -> Result<ValueBreakdown> {
        evaluate(model, &self.validation)
    }

    pub fn subset_key(&self, subset: &[usize]) -> Hash32 {
        let ids: Vec<&str> = subset.iter().map(|&i| self.sources[i].as_str()).collect();
        subset_key(&ids)
    }

    /// `V(S)` for the sources at the given indices, served from the cache
    /// when available. Concurrent first insertions keep the first value.
    pub fn value_of_subset(&self, subset: &[usize]) -> Result<ValueBreakdown> {
        self.check_subset(subset)?;
        let key = self.subset_key(subset);
        if self.cache_enabled {
            if let Some(v) = self.cache.lock().expect("cache poisoned").get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(*v);
            }
        }
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let value = self.evaluate(&self.train_subset(subset)?)?;
        if self.cache_enabled {
            return Ok(*self
                .cache
                .lock()
                .expect("cache poisoned")
                .entry(key)
                .or_insert(value));
        }
        Ok(value)
    }

    pub fn value_of_sources(&self, ids: &[&str]) -> Result<ValueBreakdown> {
        let subset = ids
            .iter()
            .map(|id| {
                self.sources
                    .iter()
                    .position(|s| s == id)
                    .ok_or_else(|| Error::invalid(format!("unknown source `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.value_of_subset(&subset)
    }

    pub fn all_sources(&self) -> Vec<usize> {
        (0..self.sources.len()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosoGain {
    pub source: String,
    pub gain: f64,
    pub full: ValueBreakdown,
    pub without: ValueBreakdown,
}

/// `G_i = V(D) − V(D \ {D_i})` for every source.
pub fn loso_gains(problem: &ProxyProblem) -> Result<Vec<LosoGain>> {
    let n = problem.n_sources();
    if n < 2 {
        return Err(Error::invalid("leave-one-source-out needs at least two sources"));
    }
    let all = problem.all_sources();
    let full = problem.value_of_subset(&all)?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let rest: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
            let without = problem.value_of_subset(&rest)?;
            Ok(LosoGain {
                source: problem.sources()[i].clone(),
                gain: full.value - without.value,
                full,
                without,
            })
        })
        .collect()
}

/// Power-law extrapolation of a proxy gain to a larger target model:
/// `g · (n_proxy / n_target)^α`.
pub fn scale_gain(g_proxy: f64, n_proxy: f64, n_target: f64, alpha: f64) -> Result<f64> {
    if !(n_proxy > 0.0) || !(n_target > 0.0) {
        return Err(Error::invalid("parameter counts must be positive"));
    }
    Ok(g_proxy * (n_proxy / n_target).powf(alpha))
}

/// Default scaling exponent.
pub const DEFAULT_SCALING_ALPHA: f64 = 0.28;
