//! Brute-force trigram surprisal from raw counts.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use shardvalue::corpus::tokenize;
use shardvalue::quality::{info_density, TrigramModel};

use super::{random_text, rng};

/// Direct re-derivation of the smoothed trigram surprisal from raw counts.
pub fn oracle_bits(train_docs: &[Vec<String>], doc: &[String], alpha: f64) -> f64 {
    let mut tri: HashMap<(&str, &str, &str), f64> = HashMap::new();
    let mut ctx: HashMap<(&str, &str), f64> = HashMap::new();
    let mut vocab: HashSet<&str> = HashSet::new();
    for d in train_docs {
        for t in d {
            vocab.insert(t);
        }
        for i in 2..d.len() {
            *tri.entry((&d[i - 2], &d[i - 1], &d[i])).or_default() += 1.0;
            *ctx.entry((&d[i - 2], &d[i - 1])).or_default() += 1.0;
        }
    }
    let v = vocab.len() as f64;
    let mut total = 0.0;
    for i in 0..doc.len() {
        let p = if i < 2 {
            1.0 / v
        } else {
            let c = ctx.get(&(doc[i - 2].as_str(), doc[i - 1].as_str())).copied().unwrap_or(0.0);
            if c == 0.0 {
                1.0 / v
            } else {
                let j = tri
                    .get(&(doc[i - 2].as_str(), doc[i - 1].as_str(), doc[i].as_str()))
                    .copied()
                    .unwrap_or(0.0);
                (j + alpha) / (c + alpha * v)
            }
        };
        total -= p.log2();
    }
    total / doc.len() as f64
}

fn toks(s: &str) -> Vec<String> {
    tokenize(s).iter().map(str::to_string).collect()
}

/// Fits the model on 20 random documents and scores 100 more; returns the
/// largest deviation from the oracle in bits.
pub fn worst_oracle_deviation(seed: u64, alpha: f64) -> f64 {
    let mut r = rng(seed);
    let train_docs: Vec<Vec<String>> = (0..20)
        .map(|_| {
            let n = r.random_range(3..40);
            toks(&random_text(&mut r, n))
        })
        .collect();
    let model = TrigramModel::fit(
        &train_docs.iter().map(|d| tokenize(&d.join(" "))).collect::<Vec<_>>(),
        alpha,
    )
    .unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(1..30);
        let d = toks(&random_text(&mut r, n));
        let (bits, norm) = info_density(&tokenize(&d.join(" ")), &model).unwrap();
        assert!((norm - (bits / 8.0).min(1.0)).abs() < 1e-15);
        worst = worst.max((bits - oracle_bits(&train_docs, &d, alpha)).abs());
    }
    worst
}
