//! Benchmark driver: realized gains on the target proxy, all nine methods,
//! ranking metrics across seeds, robustness and value-density runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adversarial::{adversarial_test, AdversarialConfig, RobustnessRow};
use super::density::{value_density_curve, DensityPoint, DocScorer, DEFAULT_PERCENTS};
use super::methods::{method_scores, score_of, Method, MethodScore};
use super::synthetic::generate_synthetic;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::ledger::{
    record_training, verify_ledger, RecorderConfig, RecordingOverhead, Verdict, VerifyOptions,
};
use crate::metrics::{
    paired_bootstrap_spearman, ranking_metrics, spearman, BootstrapInterval, RankingMetrics,
};
use crate::pricing::{calibrate_weights, unified_scores, Calibration, EnsembleWeights, DEFAULT_GRID_STEPS};
use crate::proxy::{LabelPolicy, ProxyConfig, ProxyProblem, TrainConfig};
use crate::valuation::{run_valuation, Valuation, ValuationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Proxy-side valuation settings; the label policy is set per task.
    pub valuation: ValuationConfig,
    /// The larger proxy whose leave-one-source-out gains are the realized
    /// utility.
    pub target: ProxyConfig,
    pub top_k: usize,
    pub grid_steps: usize,
    pub bootstrap_resamples: usize,
    pub ledger: RecorderConfig,
    /// Validation negatives taken from each other domain in multi-domain
    /// runs.
    pub negatives_per_domain: Option<usize>,
    pub adversarial: Option<AdversarialConfig>,
    pub density_percents: Vec<u32>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            valuation: ValuationConfig::new(LabelPolicy::Stored),
            target: ProxyConfig {
                dim: 1024,
                train: TrainConfig {
                    epochs: 400,
                    ..TrainConfig::default()
                },
                normalize: true,
            },
            top_k: 2,
            grid_steps: DEFAULT_GRID_STEPS,
            bootstrap_resamples: 1000,
            ledger: RecorderConfig { cadence: 10 },
            negatives_per_domain: Some(3),
            adversarial: Some(AdversarialConfig::default()),
            density_percents: DEFAULT_PERCENTS.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum BenchInput {
    /// Regenerates the five-source benchmark for every seed.
    Synthetic,
    /// A fixed corpus; the seed only drives Shapley permutation sampling.
    Corpus(Corpus),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTask {
    pub name: String,
    pub policy: LabelPolicy,
}

/// One task per target domain when the corpus has several domains with
/// validation data, otherwise a single task using stored labels.
pub fn tasks_for(input: &BenchInput, negatives_per_domain: Option<usize>) -> Vec<BenchTask> {
    let corpus = match input {
        BenchInput::Synthetic => {
            return vec![BenchTask {
                name: "synthetic".into(),
                policy: LabelPolicy::Stored,
            }]
        }
        BenchInput::Corpus(c) => c,
    };
    let domains: Vec<String> = corpus
        .domains()
        .into_iter()
        .filter(|d| corpus.validation().any(|v| &v.domain == d))
        .collect();
    if domains.len() < 2 {
        return vec![BenchTask {
            name: domains.into_iter().next().unwrap_or_else(|| "corpus".into()),
            policy: LabelPolicy::Stored,
        }];
    }
    domains
        .into_iter()
        .map(|d| BenchTask {
            policy: LabelPolicy::TargetDomain {
                domain: d.clone(),
                negatives_per_domain,
            },
            name: d,
        })
        .collect()
}

/// One ledgered training run of the target proxy.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerRun {
    pub label: String,
    pub entries: usize,
    pub claimed_improvement: f64,
    pub final_value: f64,
    pub verdict: Verdict,
    pub verify_secs: f64,
    pub overhead: RecordingOverhead,
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RealizedGains {
    pub gains: Vec<f64>,
    pub runs: Vec<LedgerRun>,
}

fn run_label(problem: &ProxyProblem, left_out: Option<usize>) -> String {
    match left_out {
        None => "full".into(),
        Some(i) => format!("without_{}", problem.sources()[i]),
    }
}

/// `G_i = V(D) − V(D \ {D_i})` on the target proxy, where every one of the
/// `n + 1` trainings is recorded into a ledger and verified.
pub fn realized_gains(
    problem: &ProxyProblem,
    recorder: RecorderConfig,
    ledger_dir: Option<&Path>,
) -> Result<RealizedGains> {
    let n = problem.n_sources();
    let all = problem.all_sources();
    let plans: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
    let runs = plans
        .par_iter()
        .map(|&left_out| {
            let subset: Vec<usize> = all.iter().copied().filter(|&j| Some(j) != left_out).collect();
            let label = run_label(problem, left_out);
            let rec = record_training(problem, &subset, recorder, None)?;
            let t = Instant::now();
            let verdict = verify_ledger(
                &rec.fingerprint,
                &rec.doc_ids,
                rec.ledger.entries(),
                VerifyOptions {
                    claimed_improvement: Some(rec.claimed_improvement),
                    opening: Some(&rec.opening),
                    ..VerifyOptions::default()
                },
            );
            let verify_secs = t.elapsed().as_secs_f64();
            let dir = match ledger_dir {
                Some(root) => {
                    let d = root.join(&label);
                    rec.save(&d)?;
                    Some(d)
                }
                None => None,
            };
            Ok(LedgerRun {
                label,
                entries: rec.ledger.entries().len(),
                claimed_improvement: rec.claimed_improvement,
                final_value: rec.final_value.value,
                verdict,
                verify_secs,
                overhead: rec.overhead,
                dir,
            })
        })
        .collect::<Result<Vec<LedgerRun>>>()?;
    let full = runs[0].final_value;
    let gains = runs[1..].iter().map(|r| full - r.final_value).collect();
    Ok(RealizedGains { gains, runs })
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodMetrics {
    pub method: Method,
    pub metrics: RankingMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapRow {
    pub method: Method,
    pub interval: Option<BootstrapInterval>,
}

/// Everything computed for one (task, seed) pair.
#[derive(Debug, Clone)]
pub struct TaskRun {
    pub task: String,
    pub seed: u64,
    pub corpus: Corpus,
    pub source_domains: Vec<String>,
    pub valuation: Valuation,
    pub realized: Vec<f64>,
    pub scores: Vec<MethodScore>,
    pub metrics: Vec<MethodMetrics>,
    pub calibration: Calibration,
    /// Spearman ρ of the default-weight unified score on the same split.
    pub default_spearman: Option<f64>,
    /// Paired bootstrap of `ρ(proxy) − ρ(method)` for every other method.
    pub bootstrap: Vec<BootstrapRow>,
    pub runs: Vec<LedgerRun>,
    pub robustness: Vec<RobustnessRow>,
    pub density: Vec<DensityPoint>,
    pub elapsed_secs: f64,
}

impl TaskRun {
    pub fn metric(&self, method: Method) -> &RankingMetrics {
        &self
            .metrics
            .iter()
            .find(|m| m.method == method)
            .expect("every method has metrics")
            .metrics
    }

    pub fn score(&self, method: Method) -> &[f64] {
        score_of(&self.scores, method)
    }
}

fn source_domains(corpus: &Corpus) -> Vec<String> {
    corpus
        .sources()
        .iter()
        .map(|s| {
            corpus
                .source_docs(s)
                .next()
                .map(|d| d.domain.clone())
                .unwrap_or_default()
        })
        .collect()
}

pub fn run_task(
    corpus: &Corpus,
    task: &BenchTask,
    seed: u64,
    config: &BenchConfig,
    ledger_dir: Option<&Path>,
) -> Result<TaskRun> {
    let start = Instant::now();
    let mut vconfig = config.valuation.clone();
    vconfig.policy = task.policy.clone();
    vconfig.shapley_seed = seed;
    let valuation = run_valuation(corpus, &vconfig)?;
    let n = valuation.sources.len();
    if n < 3 {
        return Err(Error::invalid("the benchmark needs at least three sources"));
    }
    let target = ProxyProblem::new(corpus, &task.policy, config.target)?;
    let realized = realized_gains(&target, config.ledger, ledger_dir)?;

    let components = valuation.components();
    let calibration = calibrate_weights(&components, &realized.gains, config.grid_steps)?;
    let default_spearman = spearman(
        &unified_scores(&components, &EnsembleWeights::default())?,
        &realized.gains,
    );
    let scores = method_scores(&valuation, &calibration.weights)?;
    let k = config.top_k.min(n);
    let metrics = scores
        .iter()
        .map(|s| {
            Ok(MethodMetrics {
                method: s.method,
                metrics: ranking_metrics(&s.per_source, &realized.gains, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let proxy = score_of(&scores, Method::ProxyOnly);
    let bootstrap = scores
        .iter()
        .filter(|s| s.method != Method::ProxyOnly)
        .map(|s| BootstrapRow {
            method: s.method,
            interval: paired_bootstrap_spearman(
                proxy,
                &s.per_source,
                &realized.gains,
                config.bootstrap_resamples,
                seed,
            ),
        })
        .collect();

    let robustness = match &config.adversarial {
        Some(adv) => adversarial_test(
            &task.name,
            seed,
            corpus,
            &valuation,
            &scores,
            &realized.gains,
            &calibration.weights,
            &vconfig,
            adv,
        )?,
        None => Vec::new(),
    };
    let mut density = Vec::new();
    if !config.density_percents.is_empty() {
        for scorer in [DocScorer::Influence, DocScorer::Dqs] {
            density.extend(value_density_curve(
                &task.name,
                seed,
                corpus,
                &valuation,
                &task.policy,
                config.target,
                &config.density_percents,
                scorer,
            )?);
        }
    }

    Ok(TaskRun {
        task: task.name.clone(),
        seed,
        corpus: corpus.clone(),
        source_domains: source_domains(corpus),
        valuation,
        realized: realized.gains,
        scores,
        metrics,
        calibration,
        default_spearman,
        bootstrap,
        runs: realized.runs,
        robustness,
        density,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Mean and sample standard deviation; `None` entries are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Stat {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        let count = v.len();
        if count == 0 {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
                count,
            };
        }
        let mean = v.iter().sum::<f64>() / count as f64;
        let std = if count < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        };
        Stat { mean, std, count }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub task: Option<String>,
    pub method: Method,
    pub runs: usize,
    pub spearman: Stat,
    pub kendall: Stat,
    pub top_k_overlap: Stat,
    pub mae_z: Stat,
}

pub fn summarize<'a>(runs: impl IntoIterator<Item = &'a TaskRun> + Clone, task: Option<&str>) -> Vec<SummaryRow> {
    Method::ALL
        .iter()
        .map(|&method| {
            let ms: Vec<&RankingMetrics> = runs.clone().into_iter().map(|r| r.metric(method)).collect();
            SummaryRow {
                task: task.map(str::to_string),
                method,
                runs: ms.len(),
                spearman: Stat::of(ms.iter().map(|m| m.spearman)),
                kendall: Stat::of(ms.iter().map(|m| m.kendall)),
                top_k_overlap: Stat::of(ms.iter().map(|m| Some(m.top_k_overlap))),
                mae_z: Stat::of(ms.iter().map(|m| m.mae_z)),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub seeds: Vec<u64>,
    pub tasks: Vec<BenchTask>,
    pub runs: Vec<TaskRun>,
    pub summary: Vec<SummaryRow>,
    pub per_task: Vec<SummaryRow>,
    pub elapsed_secs: f64,
}

impl BenchmarkReport {
    pub fn summary_row(&self, method: Method) -> &SummaryRow {
        self.summary
            .iter()
            .find(|r| r.method == method)
            .expect("every method is summarized")
    }
}

/// Runs every task for every seed. Ledgers go under
/// `ledger_root/<task>/seed<seed>/<run>/` when a root is given.
pub fn run_benchmark(
    input: &BenchInput,
    config: &BenchConfig,
    seeds: &[u64],
    ledger_root: Option<&Path>,
) -> Result<BenchmarkReport> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    let start = Instant::now();
    let tasks = tasks_for(input, config.negatives_per_domain);
    let mut jobs = Vec::new();
    for task in &tasks {
        for &seed in seeds {
            jobs.push((task, seed));
        }
    }
    let runs = jobs
        .par_iter()
        .map(|&(task, seed)| {
            let corpus = match input {
                BenchInput::Synthetic => generate_synthetic(seed),
                BenchInput::Corpus(c) => c.clone(),
            };
            let dir = ledger_root.map(|r| r.join(&task.name).join(format!("seed{seed}")));
            run_task(&corpus, task, seed, config, dir.as_deref())
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&runs, None);
    let per_task = tasks
        .iter()
        .flat_map(|t| summarize(runs.iter().filter(|r| r.task == t.name), Some(&t.name)))
        .collect();
    Ok(BenchmarkReport {
        config: config.clone(),
        seeds: seeds.to_vec(),
        tasks,
        runs,
        summary,
        per_task,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}
