//! Rank-correlation and retrieval metrics between predicted and realized
//! per-source values.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// 1-based ascending ranks; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation; `None` when either series has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ with average ranks on ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Merge sort of `v` counting inversions (pairs out of order).
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// Sum of `t(t-1)/2` over runs of equal values in a sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for x in sorted {
        if prev.as_ref() == Some(&x) {
            run += 1;
        } else {
            total += run * run.saturating_sub(1) / 2;
            run = 1;
        }
        prev = Some(x);
    }
    total + run * run.saturating_sub(1) / 2
}

/// Kendall's τ-b in `O(n log n)` (Knight's algorithm); `None` when either
/// series is constant.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n != b.len() || n < 2 {
        return None;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));
    let n0 = (n * (n - 1) / 2) as u64;
    let n1 = tied_pairs(idx.iter().map(|&i| a[i]));
    let n3 = tied_pairs(idx.iter().map(|&i| (a[i], b[i])));
    let mut by_b: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let swaps = count_inversions(&mut by_b);
    let n2 = tied_pairs(by_b.iter().copied());
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    if denom == 0.0 {
        return None;
    }
    let numer = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    Some((numer / denom).clamp(-1.0, 1.0))
}

/// Indices of the `k` largest values; ties go to the earlier index.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    idx.truncate(k);
    idx
}

pub fn top_k_overlap(predicted: &[f64], realized: &[f64], k: usize) -> f64 {
    let p = top_k(predicted, k);
    let r = top_k(realized, k);
    p.iter().filter(|i| r.contains(i)).count() as f64 / k as f64
}

/// z-scores with the sample standard deviation.
pub fn z_scores(x: &[f64]) -> Option<Vec<f64>> {
    if x.len() < 2 {
        return None;
    }
    let m = mean(x);
    let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt();
    if sd == 0.0 {
        return None;
    }
    Some(x.iter().map(|v| (v - m) / sd).collect())
}

pub fn mae_z(predicted: &[f64], realized: &[f64]) -> Option<f64> {
    let (zp, zr) = (z_scores(predicted)?, z_scores(realized)?);
    Some(zp.iter().zip(&zr).map(|(a, b)| (a - b).abs()).sum::<f64>() / zp.len() as f64)
}

/// Metric bundle; correlation-type entries are `None` when degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankingMetrics {
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    pub top_k_overlap: f64,
    pub mae_z: Option<f64>,
}

pub fn ranking_metrics(predicted: &[f64], realized: &[f64], k: usize) -> Result<RankingMetrics> {
    let n = predicted.len();
    if n != realized.len() {
        return Err(Error::invalid("predicted and realized cover different sources"));
    }
    if n < 2 {
        return Err(Error::invalid("ranking metrics need at least two sources"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("top-k needs 1 <= k <= {n}, got {k}")));
    }
    Ok(RankingMetrics {
        spearman: spearman(predicted, realized),
        kendall: kendall_tau_b(predicted, realized),
        top_k_overlap: top_k_overlap(predicted, realized, k),
        mae_z: mae_z(predicted, realized),
    })
}

/// Keyed variant; both maps must have exactly the same keys.
pub fn ranking_metrics_by_key(
    predicted: &BTreeMap<String, f64>,
    realized: &BTreeMap<String, f64>,
    k: usize,
) -> Result<RankingMetrics> {
    if predicted.len() != realized.len() || predicted.keys().any(|key| !realized.contains_key(key)) {
        return Err(Error::invalid("predicted and realized have different source keys"));
    }
    let p: Vec<f64> = predicted.values().copied().collect();
    let r: Vec<f64> = predicted.keys().map(|key| realized[key]).collect();
    ranking_metrics(&p, &r, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapInterval {
    pub mean_difference: f64,
    pub low: f64,
    pub high: f64,
    /// Resamples where either correlation was undefined.
    pub skipped: usize,
}

/// Paired bootstrap over sources of `spearman(a, realized) −
/// spearman(b, realized)`, with a 95% percentile interval.
pub fn paired_bootstrap_spearman(
    a: &[f64],
    b: &[f64],
    realized: &[f64],
    resamples: usize,
    seed: u64,
) -> Option<BootstrapInterval> {
    let n = realized.len();
    if a.len() != n || b.len() != n || n < 2 || resamples == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diffs = Vec::with_capacity(resamples);
    let mut skipped = 0;
    for _ in 0..resamples {
        let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sel = |v: &[f64]| pick.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let r = sel(realized);
        match (spearman(&sel(a), &r), spearman(&sel(b), &r)) {
            (Some(x), Some(y)) => diffs.push(x - y),
            _ => skipped += 1,
        }
    }
    if diffs.is_empty() {
        return None;
    }
    diffs.sort_by(f64::total_cmp);
    let q = |p: f64| diffs[((diffs.len() - 1) as f64 * p).round() as usize];
    Some(BootstrapInterval {
        mean_difference: mean(&diffs),
        low: q(0.025),
        high: q(0.975),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_reversal() {
        let r = [0.3, -1.0, 2.0, 0.7, 1.1];
        let m = ranking_metrics(&r, &r, 2).unwrap();
        assert_eq!(m.spearman, Some(1.0));
        assert_eq!(m.kendall, Some(1.0));
        assert_eq!(m.top_k_overlap, 1.0);
        assert!(m.mae_z.unwrap().abs() < 1e-15);
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let m = ranking_metrics(&neg, &r, 2).unwrap();
        assert_eq!(m.spearman, Some(-1.0));
        assert_eq!(m.kendall, Some(-1.0));
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn degenerate_series() {
        let m = ranking_metrics(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(m.spearman, None);
        assert_eq!(m.kendall, None);
        assert_eq!(m.mae_z, None);
    }

    #[test]
    fn argument_errors() {
        assert!(ranking_metrics(&[1.0, 2.0], &[1.0], 1).is_err());
        assert!(ranking_metrics(&[1.0], &[1.0], 1).is_err());
        assert!(ranking_metrics(&[1.0, 2.0], &[1.0, 2.0], 3).is_err());
        assert!(ranking_metrics(&[1.0, 2.0], &[1.0, 2.0], 0).is_err());
        let mut a = BTreeMap::new();
        a.insert("x".to_string(), 1.0);
        a.insert("y".to_string(), 2.0);
        let mut b = a.clone();
        b.remove("y");
        b.insert("z".to_string(), 2.0);
        assert!(ranking_metrics_by_key(&a, &b, 1).is_err());
    }

    #[test]
    fn top_k_prefers_earlier_index_on_ties() {
        assert_eq!(top_k(&[1.0, 3.0, 3.0, 2.0], 2), vec![1, 2]);
        assert_eq!(top_k(&[5.0, 5.0, 5.0], 1), vec![0]);
    }

    #[test]
    fn bootstrap_identical_methods_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = [1.0, 3.0, 2.0, 5.0, 4.0];
        let ci = paired_bootstrap_spearman(&a, &a, &r, 200, 7).unwrap();
        assert_eq!((ci.low, ci.high, ci.mean_difference), (0.0, 0.0, 0.0));
    }
}
