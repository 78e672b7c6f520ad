//! The nine valuation methods compared by the benchmark.

use serde::Serialize;

use crate::error::Result;
use crate::pricing::{unified_scores, EnsembleWeights};
use crate::valuation::Valuation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RowCount,
    TokenCount,
    StaticQuality,
    DqsOnly,
    ProxyOnly,
    InfluenceOnly,
    ShapleyOnly,
    UnifiedFixed,
    UnifiedCalibrated,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::RowCount,
        Method::TokenCount,
        Method::StaticQuality,
        Method::DqsOnly,
        Method::ProxyOnly,
        Method::InfluenceOnly,
        Method::ShapleyOnly,
        Method::UnifiedFixed,
        Method::UnifiedCalibrated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::RowCount => "row_count",
            Method::TokenCount => "token_count",
            Method::StaticQuality => "static_quality",
            Method::DqsOnly => "dqs_only",
            Method::ProxyOnly => "proxy_only",
            Method::InfluenceOnly => "influence_only",
            Method::ShapleyOnly => "shapley_only",
            Method::UnifiedFixed => "unified_fixed",
            Method::UnifiedCalibrated => "unified_calibrated",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-source scores of one method, aligned with `Valuation::sources`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodScore {
    pub method: Method,
    pub per_source: Vec<f64>,
}

/// Mean DQS over every scored train document.
pub fn corpus_mean_dqs(valuation: &Valuation) -> f64 {
    let docs = &valuation.documents;
    if docs.is_empty() {
        return 0.0;
    }
    docs.iter().map(|d| d.quality.dqs).sum::<f64>() / docs.len() as f64
}

/// Volume and quality baselines: row count, token count, token count times
/// the corpus-level mean DQS, and per-source mean DQS.
pub fn baselines(valuation: &Valuation) -> Vec<MethodScore> {
    let rows = valuation.doc_counts.iter().map(|&c| c as f64).collect();
    let tokens: Vec<f64> = valuation.token_counts.iter().map(|&c| c as f64).collect();
    let q = corpus_mean_dqs(valuation);
    vec![
        MethodScore {
            method: Method::RowCount,
            per_source: rows,
        },
        MethodScore {
            method: Method::StaticQuality,
            per_source: tokens.iter().map(|t| t * q).collect(),
        },
        MethodScore {
            method: Method::TokenCount,
            per_source: tokens,
        },
        MethodScore {
            method: Method::DqsOnly,
            per_source: valuation.dqs_mean.clone(),
        },
    ]
}

/// All nine methods in [`Method::ALL`] order.
pub fn method_scores(valuation: &Valuation, calibrated: &EnsembleWeights) -> Result<Vec<MethodScore>> {
    let components = valuation.components();
    let mut out = baselines(valuation);
    out.extend([
        MethodScore {
            method: Method::ProxyOnly,
            per_source: valuation.proxy_gain.clone(),
        },
        MethodScore {
            method: Method::InfluenceOnly,
            per_source: valuation.influence.clone(),
        },
        MethodScore {
            method: Method::ShapleyOnly,
            per_source: valuation.shapley.phi.clone(),
        },
        MethodScore {
            method: Method::UnifiedFixed,
            per_source: unified_scores(&components, &EnsembleWeights::default())?,
        },
        MethodScore {
            method: Method::UnifiedCalibrated,
            per_source: unified_scores(&components, calibrated)?,
        },
    ]);
    out.sort_by_key(|m| m.method);
    Ok(out)
}

pub fn score_of(scores: &[MethodScore], method: Method) -> &[f64] {
    &scores
        .iter()
        .find(|m| m.method == method)
        .expect("every method is scored")
        .per_source
}
