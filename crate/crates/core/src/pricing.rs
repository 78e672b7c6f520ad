//! Unified ensemble score, weight calibration, confidence intervals and
//! token pricing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{spearman, top_k_overlap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub w_dqs: f64,
    pub w_proxy: f64,
    pub w_influence: f64,
    pub w_shapley: f64,
}

impl Default for EnsembleWeights {
    fn default() -> Self {
        EnsembleWeights {
            w_dqs: 0.25,
            w_proxy: 0.35,
            w_influence: 0.20,
            w_shapley: 0.20,
        }
    }
}

impl EnsembleWeights {
    pub fn new(w_dqs: f64, w_proxy: f64, w_influence: f64, w_shapley: f64) -> Result<Self> {
        let w = EnsembleWeights {
            w_dqs,
            w_proxy,
            w_influence,
            w_shapley,
        };
        let arr = w.as_array();
        if arr.iter().any(|x| !(*x >= 0.0)) || (arr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "ensemble weights must be non-negative and sum to 1, got {arr:?}"
            )));
        }
        Ok(w)
    }

    /// Weights in canonical order (dqs, proxy, influence, shapley).
    pub fn as_array(&self) -> [f64; 4] {
        [self.w_dqs, self.w_proxy, self.w_influence, self.w_shapley]
    }

    fn from_array(a: [f64; 4]) -> Self {
        EnsembleWeights {
            w_dqs: a[0],
            w_proxy: a[1],
            w_influence: a[2],
            w_shapley: a[3],
        }
    }
}

/// Raw per-source component values, all aligned to the same source order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub dqs: Vec<f64>,
    pub proxy: Vec<f64>,
    pub influence: Vec<f64>,
    pub shapley: Vec<f64>,
}

impl Components {
    pub fn len(&self) -> usize {
        self.dqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dqs.is_empty()
    }

    fn check(&self) -> Result<usize> {
        let n = self.dqs.len();
        if [self.proxy.len(), self.influence.len(), self.shapley.len()]
            .iter()
            .any(|&m| m != n)
        {
            return Err(Error::invalid("component lists cover different numbers of sources"));
        }
        Ok(n)
    }

    /// Each component min-max normalized, in canonical order.
    pub fn normalized(&self) -> Result<[Vec<f64>; 4]> {
        self.check()?;
        Ok([
            normalize_minmax(&self.dqs)?,
            normalize_minmax(&self.proxy)?,
            normalize_minmax(&self.influence)?,
            normalize_minmax(&self.shapley)?,
        ])
    }
}

/// `(x − min)/(max − min)`; an all-equal list maps to 0.5 everywhere.
pub fn normalize_minmax(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cannot normalize an empty list"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot normalize non-finite values"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![0.5; values.len()]);
    }
    Ok(values.iter().map(|v| (v - min) / (max - min)).collect())
}

fn combine(norms: &[Vec<f64>; 4], w: &[f64; 4]) -> Vec<f64> {
    (0..norms[0].len())
        .map(|i| (0..4).map(|k| w[k] * norms[k][i]).sum())
        .collect()
}

pub fn unified_scores(components: &Components, weights: &EnsembleWeights) -> Result<Vec<f64>> {
    Ok(combine(&components.normalized()?, &weights.as_array()))
}

/// All weight vectors on the simplex with step `1/steps`, enumerated with
/// the dqs weight descending first, then proxy, then influence.
pub fn simplex_grid(steps: usize) -> Vec<EnsembleWeights> {
    let s = steps as f64;
    let mut out = Vec::new();
    for a in (0..=steps).rev() {
        for b in (0..=steps - a).rev() {
            for c in (0..=steps - a - b).rev() {
                let d = steps - a - b - c;
                out.push(EnsembleWeights::from_array([
                    a as f64 / s,
                    b as f64 / s,
                    c as f64 / s,
                    d as f64 / s,
                ]));
            }
        }
    }
    out
}

pub const DEFAULT_GRID_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub weights: EnsembleWeights,
    pub spearman: f64,
    pub top2_overlap: f64,
}

const TIE_EPS: f64 = 1e-12;

/// Grid search maximizing Spearman ρ between the unified score and the
/// realized gains. Ties go to higher top-2 overlap, then to the earliest
/// grid point. Degenerate (constant) unified scores rank below everything.
pub fn calibrate_weights(
    components: &Components,
    realized: &[f64],
    grid_steps: usize,
) -> Result<Calibration> {
    let n = components.check()?;
    if n < 3 {
        return Err(Error::invalid("calibration needs at least three sources"));
    }
    if realized.len() != n {
        return Err(Error::invalid("realized gains do not cover every source"));
    }
    if grid_steps == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let norms = components.normalized()?;
    let k = 2.min(n);
    let mut best: Option<Calibration> = None;
    for w in simplex_grid(grid_steps) {
        let scores = combine(&norms, &w.as_array());
        let rho = spearman(&scores, realized).unwrap_or(f64::NEG_INFINITY);
        let top2 = top_k_overlap(&scores, realized, k);
        let better = match &best {
            None => true,
            Some(b) => {
                rho > b.spearman + TIE_EPS
                    || ((rho - b.spearman).abs() <= TIE_EPS && top2 > b.top2_overlap + TIE_EPS)
            }
        };
        if better {
            best = Some(Calibration {
                weights: w,
                spearman: rho,
                top2_overlap: top2,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// `mean ± 1.96·s/√k` of the signals, with `s` the sample standard
/// deviation.
pub fn confidence_interval(signals: &[f64]) -> (f64, f64) {
    let k = signals.len() as f64;
    if signals.len() < 2 {
        let m = signals.first().copied().unwrap_or(0.0);
        return (m, m);
    }
    if signals.iter().all(|&x| x == signals[0]) {
        return (signals[0], signals[0]);
    }
    let mean = signals.iter().sum::<f64>() / k;
    let sd = (signals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let half = 1.96 * sd / k.sqrt();
    (mean - half, mean + half)
}

/// `p_base · tokens · (1 + β · unified)`.
pub fn price(unified: f64, token_count: u64, p_base: f64, beta: f64) -> Result<f64> {
    if !(p_base >= 0.0) || !(beta >= 0.0) {
        return Err(Error::invalid("p_base and beta must be non-negative"));
    }
    if !(0.0..=1.0).contains(&unified) {
        return Err(Error::invalid(format!("unified score {unified} outside [0, 1]")));
    }
    Ok(p_base * token_count as f64 * (1.0 + beta * unified))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingConfig {
    pub p_base: f64,
    pub beta: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            p_base: 1e-6,
            beta: 1.0,
        }
    }
}

/// Final per-source valuation row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceValuation {
    pub source: String,
    pub token_count: u64,
    pub dqs_mean: f64,
    pub proxy_gain: f64,
    pub influence: f64,
    pub shapley: f64,
    pub dqs_norm: f64,
    pub proxy_norm: f64,
    pub influence_norm: f64,
    pub shapley_norm: f64,
    pub unified: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub price: f64,
    pub price_low: f64,
    pub price_high: f64,
}

/// Builds valuation rows. The interval is computed over the normalized
/// proxy, influence and Shapley signals so that it lives on the same
/// scale as the unified score; price bounds clamp it to `[0, 1]`.
pub fn price_sources(
    sources: &[String],
    token_counts: &[u64],
    components: &Components,
    weights: &EnsembleWeights,
    pricing: &PricingConfig,
) -> Result<Vec<SourceValuation>> {
    let n = components.check()?;
    if sources.len() != n || token_counts.len() != n {
        return Err(Error::invalid("sources, token counts and components disagree in length"));
    }
    let norms = components.normalized()?;
    let unified = combine(&norms, &weights.as_array());
    (0..n)
        .map(|i| {
            let (lo, hi) = confidence_interval(&[norms[1][i], norms[2][i], norms[3][i]]);
            let u = unified[i].clamp(0.0, 1.0);
            Ok(SourceValuation {
                source: sources[i].clone(),
                token_count: token_counts[i],
                dqs_mean: components.dqs[i],
                proxy_gain: components.proxy[i],
                influence: components.influence[i],
                shapley: components.shapley[i],
                dqs_norm: norms[0][i],
                proxy_norm: norms[1][i],
                influence_norm: norms[2][i],
                shapley_norm: norms[3][i],
                unified: u,
                ci_low: lo,
                ci_high: hi,
                price: price(u, token_counts[i], pricing.p_base, pricing.beta)?,
                price_low: price(lo.clamp(0.0, 1.0), token_counts[i], pricing.p_base, pricing.beta)?,
                price_high: price(hi.clamp(0.0, 1.0), token_counts[i], pricing.p_base, pricing.beta)?,
            })
        })
        .collect()
}
