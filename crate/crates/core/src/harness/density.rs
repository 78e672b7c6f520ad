//! Value-density curve: retrain on the top-p% documents.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Split};
use crate::error::Result;
use crate::proxy::{LabelPolicy, ProxyConfig, ProxyProblem};
use crate::valuation::Valuation;

pub const DEFAULT_PERCENTS: [u32; 6] = [10, 20, 40, 60, 80, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocScorer {
    Influence,
    Dqs,
}

impl DocScorer {
    pub fn name(self) -> &'static str {
        match self {
            DocScorer::Influence => "influence",
            DocScorer::Dqs => "dqs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityPoint {
    pub task: String,
    pub seed: u64,
    pub scorer: DocScorer,
    pub percent: u32,
    pub retained_docs: usize,
    pub value: f64,
    /// `(V(top p%) − V(∅)) / (V(all) − V(∅))`.
    pub retained_fraction: f64,
}

/// Train documents ranked by `scorer`, best first; ties keep corpus order.
pub fn ranked_documents(valuation: &Valuation, scorer: DocScorer) -> Vec<String> {
    let mut idx: Vec<usize> = (0..valuation.documents.len()).collect();
    let key = |i: usize| match scorer {
        DocScorer::Influence => valuation.documents[i].influence,
        DocScorer::Dqs => valuation.documents[i].quality.dqs,
    };
    idx.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    idx.into_iter().map(|i| valuation.documents[i].id.clone()).collect()
}

#[allow(clippy::too_many_arguments)]
pub fn value_density_curve(
    task: &str,
    seed: u64,
    corpus: &Corpus,
    valuation: &Valuation,
    policy: &LabelPolicy,
    target: ProxyConfig,
    percents: &[u32],
    scorer: DocScorer,
) -> Result<Vec<DensityPoint>> {
    let ranked = ranked_documents(valuation, scorer);
    let full = ProxyProblem::new(corpus, policy, target)?;
    let v_empty = full.value_of_subset(&[])?.value;
    let v_full = full.value_of_subset(&full.all_sources())?.value;
    let mut out = Vec::new();
    for &p in percents.iter().filter(|&&p| p > 0 && p <= 100) {
        let keep = ((ranked.len() * p as usize).div_ceil(100)).max(1);
        let kept: std::collections::HashSet<&str> = ranked[..keep].iter().map(String::as_str).collect();
        let docs = corpus
            .documents()
            .iter()
            .filter(|d| d.split == Split::Validation || kept.contains(d.id.as_str()))
            .cloned()
            .collect();
        let problem = ProxyProblem::new(&Corpus::new(docs)?, policy, target)?;
        let value = problem.value_of_subset(&problem.all_sources())?.value;
        let retained_fraction = if p == 100 {
            1.0
        } else {
            (value - v_empty) / (v_full - v_empty)
        };
        out.push(DensityPoint {
            task: task.to_string(),
            seed,
            scorer,
            percent: p,
            retained_docs: keep,
            value,
            retained_fraction,
        });
    }
    Ok(out)
}
