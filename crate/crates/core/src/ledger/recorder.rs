//! Records a proxy training run into a ledger.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::chain::{Ledger, LedgerEntry, LedgerFingerprint, Opening, VALUE_METRIC};
use super::commit::{commit_params, Nonce};
use crate::error::Result;
use crate::proxy::{evaluate, Checkpoint, ProxyProblem, TrainedModel, ValueBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecorderConfig {
    /// Epochs between ledger entries. The final epoch is always recorded.
    pub cadence: usize,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        RecorderConfig { cadence: 1 }
    }
}

/// Wall-clock cost of the commitment layer for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RecordingOverhead {
    pub dataset_root_secs: f64,
    pub initial_commit_secs: f64,
    pub mean_checkpoint_secs: f64,
    pub entries: usize,
    pub ledger_bytes: usize,
}

impl RecordingOverhead {
    pub fn bytes_per_entry(&self) -> f64 {
        if self.entries == 0 {
            0.0
        } else {
            self.ledger_bytes as f64 / self.entries as f64
        }
    }
}

#[derive(Debug)]
pub struct RecordedRun {
    pub model: TrainedModel,
    pub doc_ids: Vec<String>,
    pub ledger: Ledger,
    pub fingerprint: LedgerFingerprint,
    pub opening: Opening,
    /// `V(θ_T) − V(θ_0)` as measured, before any rounding.
    pub claimed_improvement: f64,
    pub initial_value: ValueBreakdown,
    pub final_value: ValueBreakdown,
    pub overhead: RecordingOverhead,
}

fn metrics(loss: f64, v: &ValueBreakdown) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("log_loss".to_string(), v.log_loss),
        ("loss".to_string(), loss),
        ("task_utility".to_string(), v.task_utility),
        (VALUE_METRIC.to_string(), v.value),
    ])
}

/// Trains on the sources in `subset` and records the run. Step 0 holds the
/// untrained parameters; each later step is an epoch number.
pub fn record_training(
    problem: &ProxyProblem,
    subset: &[usize],
    config: RecorderConfig,
    journal: Option<&Path>,
) -> Result<RecordedRun> {
    let cadence = config.cadence.max(1);
    let epochs = problem.config().train.epochs;
    let nonce = Nonce::random();
    let doc_ids: Vec<String> = problem
        .subset_items(subset)
        .iter()
        .map(|t| t.doc_id.clone())
        .collect();

    let mut ledger = match journal {
        Some(p) => Ledger::with_journal(p)?,
        None => Ledger::new(),
    };
    let initial = problem.untrained_model();
    let t0 = Instant::now();
    let c0 = commit_params(&initial.w, initial.b, nonce)?;
    let initial_commit_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    ledger.initialize(&doc_ids, c0.digest)?;
    let dataset_root_secs = t1.elapsed().as_secs_f64();

    let initial_value = problem.evaluate(&initial)?;
    let examples: Vec<_> = problem
        .subset_items(subset)
        .iter()
        .map(|t| &t.example)
        .collect();
    let initial_loss = if examples.is_empty() {
        std::f64::consts::LN_2
    } else {
        initial.regularized_loss(&examples)
    };
    ledger.append(LedgerEntry {
        step: 0,
        batch_doc_ids: Vec::new(),
        metrics: metrics(initial_loss, &initial_value),
        param_commitment: c0.digest,
    })?;

    let mut commit_secs = 0.0;
    let mut commits = 0usize;
    let mut failure = None;
    let mut final_value = initial_value;
    let model = problem.train_subset_observed(subset, &mut |cp: &Checkpoint<'_>| {
        if failure.is_some() || !(cp.epoch % cadence == 0 || cp.epoch == epochs) {
            return;
        }
        let step = (|| -> Result<ValueBreakdown> {
            let value = evaluate(cp.model, problem.validation())?;
            let t = Instant::now();
            let c = commit_params(&cp.model.w, cp.model.b, nonce)?;
            commit_secs += t.elapsed().as_secs_f64();
            commits += 1;
            ledger.append(LedgerEntry {
                step: cp.epoch as u64,
                batch_doc_ids: doc_ids.clone(),
                metrics: metrics(cp.loss, &value),
                param_commitment: c.digest,
            })?;
            Ok(value)
        })();
        match step {
            Ok(v) => final_value = v,
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let fingerprint = ledger.fingerprint()?;
    let ledger_bytes = super::chain::entries_to_jsonl(ledger.entries())?.len();
    let overhead = RecordingOverhead {
        dataset_root_secs,
        initial_commit_secs,
        mean_checkpoint_secs: if commits == 0 { 0.0 } else { commit_secs / commits as f64 },
        entries: ledger.entries().len(),
        ledger_bytes,
    };
    Ok(RecordedRun {
        opening: Opening {
            nonce,
            initial_w: initial.w.clone(),
            initial_b: initial.b,
            final_w: model.w.clone(),
            final_b: model.b,
        },
        claimed_improvement: final_value.value - initial_value.value,
        model,
        doc_ids,
        ledger,
        fingerprint,
        initial_value,
        final_value,
        overhead,
    })
}

impl RecordedRun {
    /// Writes `ledger.jsonl`, `fingerprint.json`, `doc_ids.txt` and
    /// `opening.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
        super::chain::write_entries(dir.join("ledger.jsonl"), self.ledger.entries())?;
        self.fingerprint.save(dir.join("fingerprint.json"))?;
        super::chain::write_doc_ids(dir.join("doc_ids.txt"), &self.doc_ids)?;
        self.opening.save(dir.join("opening.json"))
    }
}
