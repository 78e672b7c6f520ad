//! Additive-smoothed trigram reference model used for surprisal.

use std::collections::HashMap;

use crate::corpus::{Corpus, TokenSeq};
use crate::error::{Error, Result};

/// Reserved id used to pad the context of the first two positions. It is
/// never assigned to a real token, so padded contexts are always unseen.
const PAD: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct TrigramModel {
    vocab: HashMap<String, u32>,
    trigram_counts: HashMap<(u32, u32, u32), u64>,
    context_counts: HashMap<(u32, u32), u64>,
    alpha: f64,
}

impl TrigramModel {
    /// Counts every in-document trigram of `docs` in a single pass.
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a TokenSeq>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("smoothing alpha must be > 0, got {alpha}")));
        }
        let mut model = TrigramModel {
            vocab: HashMap::new(),
            trigram_counts: HashMap::new(),
            context_counts: HashMap::new(),
            alpha,
        };
        let mut n_docs = 0usize;
        for doc in docs {
            n_docs += 1;
            let ids: Vec<u32> = doc
                .iter()
                .map(|t| {
                    let next = model.vocab.len() as u32;
                    *model.vocab.entry(t.to_string()).or_insert(next)
                })
                .collect();
            for w in ids.windows(3) {
                *model.trigram_counts.entry((w[0], w[1], w[2])).or_insert(0) += 1;
                *model.context_counts.entry((w[0], w[1])).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::invalid("cannot train a trigram model on zero documents"));
        }
        Ok(model)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    pub fn trigram_count(&self, c1: &str, c2: &str, x: &str) -> u64 {
        match (self.vocab.get(c1), self.vocab.get(c2), self.vocab.get(x)) {
            (Some(&a), Some(&b), Some(&c)) => self.trigram_counts.get(&(a, b, c)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn context_count(&self, c1: &str, c2: &str) -> u64 {
        match (self.vocab.get(c1), self.vocab.get(c2)) {
            (Some(&a), Some(&b)) => self.context_counts.get(&(a, b)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    fn id(&self, token: &str) -> Option<u32> {
        self.vocab.get(token).copied()
    }

    /// Smoothed conditional probability of the token at `i` given the two
    /// preceding tokens. Unseen or padded contexts fall back to `1/|V|`.
    fn prob_at(&self, ids: &[Option<u32>], i: usize) -> f64 {
        let v = self.vocab.len().max(1) as f64;
        let ctx = |k: usize| if i >= k { ids[i - k] } else { Some(PAD) };
        let (Some(c1), Some(c2)) = (ctx(2), ctx(1)) else {
            return 1.0 / v;
        };
        let c_count = self.context_counts.get(&(c1, c2)).copied().unwrap_or(0);
        if c_count == 0 {
            return 1.0 / v;
        }
        let joint = ids[i]
            .and_then(|x| self.trigram_counts.get(&(c1, c2, x)).copied())
            .unwrap_or(0);
        (joint as f64 + self.alpha) / (c_count as f64 + self.alpha * v)
    }

    /// Mean surprisal in bits per token.
    pub fn mean_surprisal_bits(&self, doc: &TokenSeq) -> Result<f64> {
        if doc.is_empty() {
            return Err(Error::invalid("surprisal of an empty document is undefined"));
        }
        let ids: Vec<Option<u32>> = doc.iter().map(|t| self.id(t)).collect();
        let total: f64 = (0..ids.len()).map(|i| -self.prob_at(&ids, i).log2()).sum();
        // -0.0 when every probability is exactly 1
        Ok((total / ids.len() as f64).max(0.0))
    }
}

/// Trains the reference model on every train-split document of `corpus`.
pub fn train_trigram(corpus: &Corpus, alpha: f64) -> Result<TrigramModel> {
    let seqs: Vec<TokenSeq> = corpus.train().map(|d| d.tokens()).collect();
    if seqs.is_empty() {
        return Err(Error::invalid("corpus has no train documents"));
    }
    TrigramModel::fit(&seqs, alpha)
}

/// Mean surprisal in bits and its value clamped against an 8-bit cap.
pub fn info_density(doc: &TokenSeq, model: &TrigramModel) -> Result<(f64, f64)> {
    let bits = model.mean_surprisal_bits(doc)?;
    Ok((bits, (bits / 8.0).min(1.0)))
}
