//! Segment-diversity semantic richness.

use std::collections::HashSet;

use crate::corpus::{tokenize, TokenSeq};
use crate::hashing::bucket_index;

use super::coherence::alphabetic_ratio;

pub const SEGMENT_DIM: usize = 128;
pub const MAX_SEGMENTS: usize = 16;
/// Score returned when a text has fewer than two segments.
pub const SINGLE_SEGMENT_SCORE: f64 = 0.5;

/// Sentence-level segments (split on `.`, `!`, `?` and newlines), keeping at
/// most the first sixteen that contain a token.
pub fn segments(text: &str) -> Vec<TokenSeq> {
    text.split(['.', '!', '?', '\n'])
        .map(tokenize)
        .filter(|s| !s.is_empty())
        .take(MAX_SEGMENTS)
        .collect()
}

/// L2-normalized hashed bag-of-words embedding of a segment.
pub fn embed_segment(seg: &TokenSeq) -> [f64; SEGMENT_DIM] {
    let mut v = [0.0; SEGMENT_DIM];
    for t in seg.iter() {
        v[bucket_index(t, SEGMENT_DIM)] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// `1 - mean pairwise cosine` over segment embeddings, clamped to [0, 1].
/// `None` for fewer than two segments.
pub fn segment_diversity(text: &str) -> Option<f64> {
    let embs: Vec<[f64; SEGMENT_DIM]> = segments(text).iter().map(embed_segment).collect();
    let s = embs.len();
    if s < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..s {
        for j in (i + 1)..s {
            total += embs[i].iter().zip(&embs[j]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let mean = total * 2.0 / (s * (s - 1)) as f64;
    Some((1.0 - mean).clamp(0.0, 1.0))
}

/// `0.7 * alphabetic token ratio + 0.3 * unique token ratio`, clamped.
pub fn lexical_factor(doc: &TokenSeq) -> f64 {
    if doc.is_empty() {
        return 0.0;
    }
    let unique: HashSet<&str> = doc.iter().collect();
    let unique_ratio = unique.len() as f64 / doc.len() as f64;
    (0.7 * alphabetic_ratio(doc) + 0.3 * unique_ratio).clamp(0.0, 1.0)
}

pub fn semantic_richness(text: &str) -> f64 {
    match segment_diversity(text) {
        None => SINGLE_SEGMENT_SCORE,
        Some(div) => div * lexical_factor(&tokenize(text)),
    }
}
