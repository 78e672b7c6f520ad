//! End-to-end per-source valuation: DQS, leave-one-out proxy gain,
//! influence and Shapley value.

use serde::{Deserialize, Serialize};

use crate::attribution::{CgConfig, CgSolution, InfluenceScorer};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::pricing::Components;
use crate::proxy::{loso_gains, LabelPolicy, LabeledExample, LosoGain, ProxyConfig, ProxyProblem};
use crate::quality::{score_train_documents, source_mean_dqs, train_trigram, QualityScores};
use crate::shapley::{shapley_monte_carlo, Scaled, ShapleyEstimate, DEFAULT_PERMUTATIONS};

/// Proxy-to-target extrapolation applied to proxy gains and Shapley values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub n_target: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationConfig {
    pub policy: LabelPolicy,
    pub proxy: ProxyConfig,
    pub trigram_alpha: f64,
    pub cg: CgConfig,
    pub shapley_permutations: usize,
    pub shapley_seed: u64,
    pub scaling: Option<ScalingConfig>,
}

impl ValuationConfig {
    pub fn new(policy: LabelPolicy) -> Self {
        ValuationConfig {
            policy,
            proxy: ProxyConfig::default(),
            trigram_alpha: 1.0,
            cg: CgConfig::default(),
            shapley_permutations: DEFAULT_PERMUTATIONS,
            shapley_seed: 0,
            scaling: None,
        }
    }

    /// `(N_proxy / N_target)^α`, or 1 when no target size is configured.
    pub fn scale_factor(&self) -> Result<f64> {
        match self.scaling {
            None => Ok(1.0),
            Some(s) => crate::proxy::scale_gain(1.0, self.proxy.parameter_count() as f64, s.n_target, s.alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentScore {
    pub id: String,
    pub source: String,
    pub tokens: usize,
    pub quality: QualityScores,
    pub influence: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Valuation {
    pub sources: Vec<String>,
    pub doc_counts: Vec<usize>,
    pub token_counts: Vec<u64>,
    pub dqs_mean: Vec<f64>,
    /// Scaled leave-one-source-out gains.
    pub proxy_gain: Vec<f64>,
    pub loso: Vec<LosoGain>,
    pub influence: Vec<f64>,
    /// Scaled Shapley estimate.
    pub shapley: ShapleyEstimate,
    pub scale_factor: f64,
    #[serde(skip)]
    pub cg: CgSolution,
    /// Train documents in corpus order.
    pub documents: Vec<DocumentScore>,
}

impl Valuation {
    pub fn components(&self) -> Components {
        Components {
            dqs: self.dqs_mean.clone(),
            proxy: self.proxy_gain.clone(),
            influence: self.influence.clone(),
            shapley: self.shapley.phi.clone(),
        }
    }
}

pub fn run_valuation(corpus: &Corpus, config: &ValuationConfig) -> Result<Valuation> {
    let problem = ProxyProblem::new(corpus, &config.policy, config.proxy)?;
    run_valuation_with(corpus, &problem, config)
}

/// Valuation over an existing problem, reusing its subset cache.
pub fn run_valuation_with(
    corpus: &Corpus,
    problem: &ProxyProblem,
    config: &ValuationConfig,
) -> Result<Valuation> {
    if problem.n_sources() < 2 {
        return Err(Error::invalid("valuation needs at least two sources"));
    }
    let trigram = train_trigram(corpus, config.trigram_alpha)?;
    let scored = score_train_documents(corpus, &trigram)?;
    let dqs_mean = source_mean_dqs(&scored, corpus);
    let factor = config.scale_factor()?;

    let loso = loso_gains(problem)?;
    let proxy_gain = loso.iter().map(|g| g.gain * factor).collect();

    let model = problem.train_subset(&problem.all_sources())?;
    let train: Vec<&LabeledExample> = problem.train_items().iter().map(|t| &t.example).collect();
    let val: Vec<&LabeledExample> = problem.validation().iter().collect();
    let scorer = InfluenceScorer::new(&train, &val, &model, config.cg)?;
    let doc_influence = train
        .iter()
        .map(|e| scorer.influence(e))
        .collect::<Result<Vec<f64>>>()?;
    let influence = (0..problem.n_sources())
        .map(|i| {
            let docs: Vec<&LabeledExample> = problem
                .train_items()
                .iter()
                .filter(|t| t.source == i)
                .map(|t| &t.example)
                .collect();
            scorer.influence_of_group(&docs)
        })
        .collect::<Result<Vec<f64>>>()?;

    let game = Scaled {
        inner: problem,
        factor,
    };
    let shapley = shapley_monte_carlo(&game, config.shapley_permutations, config.shapley_seed)?;

    let n = problem.n_sources();
    let mut doc_counts = vec![0usize; n];
    let mut token_counts = vec![0u64; n];
    let documents = scored
        .iter()
        .zip(problem.train_items())
        .zip(&doc_influence)
        .map(|(((doc, q), item), &inf)| {
            let tokens = doc.tokens().len();
            doc_counts[item.source] += 1;
            token_counts[item.source] += tokens as u64;
            DocumentScore {
                id: doc.id.clone(),
                source: doc.source.clone(),
                tokens,
                quality: *q,
                influence: inf,
            }
        })
        .collect();

    Ok(Valuation {
        sources: problem.sources().to_vec(),
        doc_counts,
        token_counts,
        dqs_mean,
        proxy_gain,
        loso,
        influence,
        shapley,
        scale_factor: factor,
        cg: scorer.solve().clone(),
        documents,
    })
}
