//! Model-free token-level quality signals and the combined quality score.

mod coherence;
mod richness;
mod trigram;

pub use coherence::{coherence_checks, is_malformed_token, syntactic_coherence, MAX_LINE_CHARS};
pub use richness::{
    embed_segment, lexical_factor, segment_diversity, segments, semantic_richness, MAX_SEGMENTS,
    SEGMENT_DIM, SINGLE_SEGMENT_SCORE,
};
pub use trigram::{info_density, train_trigram, TrigramModel};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// Weights of information density, coherence and richness in the score.
pub const DQS_WEIGHTS: [f64; 3] = [0.4, 0.3, 0.3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityScores {
    pub info_density_bits: f64,
    pub info_density_norm: f64,
    pub syn_co: f64,
    pub sem_rich: f64,
    pub dqs: f64,
}

/// Weighted combination of the three normalized components.
pub fn combine_dqs(info_density_norm: f64, syn_co: f64, sem_rich: f64) -> f64 {
    DQS_WEIGHTS[0] * info_density_norm + DQS_WEIGHTS[1] * syn_co + DQS_WEIGHTS[2] * sem_rich
}

pub fn dqs(doc: &Document, model: &TrigramModel) -> Result<QualityScores> {
    let tokens = doc.tokens();
    if tokens.is_empty() {
        return Err(Error::invalid(format!("document `{}` has no tokens", doc.id)));
    }
    let (bits, norm) = info_density(&tokens, model)?;
    let syn_co = syntactic_coherence(&doc.text, &tokens);
    let sem_rich = semantic_richness(&doc.text);
    Ok(QualityScores {
        info_density_bits: bits,
        info_density_norm: norm,
        syn_co,
        sem_rich,
        dqs: combine_dqs(norm, syn_co, sem_rich),
    })
}

/// Per-document scores for every train document, in corpus order.
pub fn score_train_documents<'a>(
    corpus: &'a Corpus,
    model: &TrigramModel,
) -> Result<Vec<(&'a Document, QualityScores)>> {
    let docs: Vec<&Document> = corpus.train().collect();
    docs.par_iter()
        .map(|d| dqs(d, model).map(|s| (*d, s)))
        .collect()
}

/// Mean DQS per source, in `corpus.sources()` order.
pub fn source_mean_dqs(scored: &[(&Document, QualityScores)], corpus: &Corpus) -> Vec<f64> {
    corpus
        .sources()
        .iter()
        .map(|src| {
            let vals: Vec<f64> = scored
                .iter()
                .filter(|(d, _)| &d.source == src)
                .map(|(_, s)| s.dqs)
                .collect();
            if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        })
        .collect()
}
