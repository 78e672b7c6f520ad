#![allow(dead_code)]

pub mod chain;
pub mod convex;
pub mod trigram;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shardvalue::corpus::{Corpus, Document, Split};

pub fn doc(id: &str, text: &str, source: &str, domain: &str, split: Split, label: Option<u8>) -> Document {
    Document {
        id: id.to_string(),
        text: text.to_string(),
        source: source.to_string(),
        domain: domain.to_string(),
        split,
        label,
    }
}

pub fn train(id: &str, text: &str, source: &str, label: u8) -> Document {
    doc(id, text, source, "d", Split::Train, Some(label))
}

pub fn val(id: &str, text: &str, label: u8) -> Document {
    doc(id, text, "validation", "d", Split::Validation, Some(label))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "the", "a", "model", "data", "source", "value", "token", "price", "x", "y", "z", "alpha",
    "beta", "gamma", "delta", "rust", "api", "call", "return", "error", ",", ".", "!", "(", ")",
];

/// Whitespace-joined random words from a small vocabulary.
pub fn random_text(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Words drawn from a per-class vocabulary so that classes are separable.
pub fn class_text(rng: &mut ChaCha8Rng, class: u8, len: usize) -> String {
    const POS: &[&str] = &["function", "returns", "parameter", "struct", "compile", "api"];
    const NEG: &[&str] = &["weather", "lunch", "movie", "weekend", "coffee", "chat"];
    let vocab = if class == 1 { POS } else { NEG };
    (0..len)
        .map(|_| *vocab.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A stored-label corpus with `n_sources` sources, each holding a random
/// mix of classes, plus a balanced validation split.
pub fn random_corpus(seed: u64, n_sources: usize, docs_per_source: usize) -> Corpus {
    let mut r = rng(seed);
    let mut docs = Vec::new();
    for s in 0..n_sources {
        for k in 0..docs_per_source {
            let label = r.random_range(0..2u8);
            let len = r.random_range(4..12);
            let text = class_text(&mut r, label, len);
            docs.push(train(&format!("s{s}-{k}"), &text, &format!("src{s}"), label));
        }
    }
    for k in 0..6 {
        let label = (k % 2) as u8;
        let text = class_text(&mut r, label, 8);
        docs.push(val(&format!("v{k}"), &text, label));
    }
    Corpus::new(docs).unwrap()
}
