//! Volume-padding and noise attacks, and the per-method drift they cause.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::methods::{method_scores, Method, MethodScore};
use super::synthetic::{noise_with_tokens, padding_text};
use crate::corpus::{Corpus, Document, Split};
use crate::error::{Error, Result};
use crate::metrics::{average_ranks, top_k};
use crate::pricing::EnsembleWeights;
use crate::valuation::{run_valuation, Valuation, ValuationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attack {
    /// Zero-injection control.
    None,
    /// Every document of the lowest-DQS source repeated `factor` more times.
    Duplication,
    /// `factor × |D_i|` semantically empty passages added to the lowest-DQS
    /// source.
    Padding,
    /// Every other document of the top realized-gain source replaced by
    /// malformed text with the same token count.
    MalformedNoise,
}

impl Attack {
    pub const ALL: [Attack; 4] = [Attack::None, Attack::Duplication, Attack::Padding, Attack::MalformedNoise];

    pub fn name(self) -> &'static str {
        match self {
            Attack::None => "none",
            Attack::Duplication => "duplication",
            Attack::Padding => "padding",
            Attack::MalformedNoise => "malformed_noise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversarialConfig {
    pub factor: usize,
    pub padding_sentences: usize,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig {
            factor: 3,
            padding_sentences: 8,
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    top_k(values, 1)[0]
}

fn argmin(values: &[f64]) -> usize {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    argmax(&neg)
}

/// The attacked corpus and the index of the source the attack targets.
pub fn apply_attack(
    corpus: &Corpus,
    attack: Attack,
    clean: &Valuation,
    realized: &[f64],
    config: &AdversarialConfig,
    seed: u64,
) -> Result<(Corpus, Option<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xad5e_ed00);
    let target = match attack {
        Attack::None => return Ok((corpus.clone(), None)),
        Attack::Duplication | Attack::Padding => argmin(&clean.dqs_mean),
        Attack::MalformedNoise => argmax(realized),
    };
    let source = clean.sources[target].clone();
    let mut docs = corpus.documents().to_vec();
    let victims: Vec<Document> = corpus
        .source_docs(&source)
        .filter(|d| d.split == Split::Train)
        .cloned()
        .collect();
    match attack {
        Attack::Duplication => {
            for k in 1..=config.factor {
                docs.extend(victims.iter().map(|d| Document {
                    id: format!("{}~dup{k}", d.id),
                    ..d.clone()
                }));
            }
        }
        Attack::Padding => {
            let template = victims.first().ok_or_else(|| Error::invalid("empty source"))?;
            for i in 0..config.factor * victims.len() {
                docs.push(Document {
                    id: format!("{source}~pad{i:04}"),
                    text: padding_text(&mut rng, config.padding_sentences),
                    label: Some(0),
                    ..template.clone()
                });
            }
        }
        Attack::MalformedNoise => {
            let ids: Vec<&str> = victims.iter().step_by(2).map(|d| d.id.as_str()).collect();
            for d in docs.iter_mut().filter(|d| ids.contains(&d.id.as_str())) {
                let n = d.tokens().len();
                d.text = noise_with_tokens(&mut rng, n);
            }
        }
        Attack::None => unreachable!(),
    }
    Ok((Corpus::new(docs)?, Some(target)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub task: String,
    pub seed: u64,
    pub attack: Attack,
    pub target_source: String,
    pub method: Method,
    pub clean_top1: String,
    pub attacked_top1: String,
    pub top1_changed: bool,
    pub top1_is_target: bool,
    pub mean_rank_displacement: f64,
}

fn descending_ranks(values: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    average_ranks(&neg)
}

/// Re-values every attacked corpus and compares each method's ranking with
/// the clean run. The calibrated ensemble keeps its clean-run weights.
#[allow(clippy::too_many_arguments)]
pub fn adversarial_test(
    task: &str,
    seed: u64,
    corpus: &Corpus,
    clean: &Valuation,
    clean_scores: &[MethodScore],
    realized: &[f64],
    calibrated: &EnsembleWeights,
    valuation_config: &ValuationConfig,
    config: &AdversarialConfig,
) -> Result<Vec<RobustnessRow>> {
    let mut rows = Vec::new();
    for attack in Attack::ALL {
        let (attacked, target) = apply_attack(corpus, attack, clean, realized, config, seed)?;
        let attacked_scores = if attack == Attack::None {
            clean_scores.to_vec()
        } else {
            let v = run_valuation(&attacked, valuation_config)?;
            if v.sources != clean.sources {
                return Err(Error::invalid("attack changed the source set"));
            }
            method_scores(&v, calibrated)?
        };
        for (before, after) in clean_scores.iter().zip(&attacked_scores) {
            let b = argmax(&before.per_source);
            let a = argmax(&after.per_source);
            let rb = descending_ranks(&before.per_source);
            let ra = descending_ranks(&after.per_source);
            let disp = rb.iter().zip(&ra).map(|(x, y)| (x - y).abs()).sum::<f64>() / rb.len() as f64;
            rows.push(RobustnessRow {
                task: task.to_string(),
                seed,
                attack,
                target_source: target.map(|t| clean.sources[t].clone()).unwrap_or_default(),
                method: before.method,
                clean_top1: clean.sources[b].clone(),
                attacked_top1: clean.sources[a].clone(),
                top1_changed: a != b,
                top1_is_target: target == Some(a),
                mean_rank_displacement: disp,
            });
        }
    }
    Ok(rows)
}
