//! CSV and manifest emission for benchmark reports.

use std::path::{Path, PathBuf};

use serde_json::json;

use super::bench::{BenchmarkReport, Stat, SummaryRow, TaskRun};
use super::methods::Method;
use crate::error::{Error, Result};
use crate::metrics::top_k;
use crate::pricing::{price_sources, PricingConfig};

pub const SUMMARY_COLUMNS: [&str; 14] = [
    "task",
    "method",
    "runs",
    "spearman_mean",
    "spearman_std",
    "kendall_mean",
    "kendall_std",
    "top_k_mean",
    "top_k_std",
    "mae_z_mean",
    "mae_z_std",
    "spearman_defined",
    "kendall_defined",
    "mae_z_defined",
];

fn f(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<std::fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record(header)?;
        Ok(Table { path, writer })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn summary_fields(r: &SummaryRow) -> Vec<String> {
    let s = |st: &Stat| [f(st.mean), f(st.std)];
    let mut v = vec![r.task.clone().unwrap_or_else(|| "all".into()), r.method.to_string(), r.runs.to_string()];
    v.extend(s(&r.spearman));
    v.extend(s(&r.kendall));
    v.extend(s(&r.top_k_overlap));
    v.extend(s(&r.mae_z));
    v.extend([r.spearman.count, r.kendall.count, r.mae_z.count].map(|c| c.to_string()));
    v
}

fn write_summary(dir: &Path, name: &str, rows: &[SummaryRow]) -> Result<PathBuf> {
    let mut t = Table::create(dir, name, &SUMMARY_COLUMNS)?;
    for r in rows {
        t.row(summary_fields(r))?;
    }
    t.finish()
}

fn top_index(values: &[f64]) -> usize {
    top_k(values, 1)[0]
}

/// Writes every report artifact into `dir` and returns the written paths.
pub fn write_report(report: &BenchmarkReport, dir: &Path, pricing: &PricingConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write_summary(dir, "summary.csv", &report.summary)?,
        write_summary(dir, "per_domain.csv", &report.per_task)?,
    ];

    let mut t = Table::create(dir, "per_run.csv", &["task", "seed", "method", "spearman", "kendall", "top_k_overlap", "mae_z"])?;
    for r in &report.runs {
        for m in &r.metrics {
            t.row([
                r.task.clone(),
                r.seed.to_string(),
                m.method.to_string(),
                opt(m.metrics.spearman),
                opt(m.metrics.kendall),
                f(m.metrics.top_k_overlap),
                opt(m.metrics.mae_z),
            ])?;
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "source_estimators.csv",
        &["task", "seed", "source", "source_domain", "method", "score", "realized_gain"],
    )?;
    for r in &report.runs {
        for s in &r.scores {
            for (i, src) in r.valuation.sources.iter().enumerate() {
                t.row([
                    r.task.clone(),
                    r.seed.to_string(),
                    src.clone(),
                    r.source_domains[i].clone(),
                    s.method.to_string(),
                    f(s.per_source[i]),
                    f(r.realized[i]),
                ])?;
            }
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "domain_source_estimators.csv",
        &[
            "target", "seed", "source", "source_domain", "docs", "tokens", "realized_gain", "dqs",
            "proxy_gain", "influence", "shapley", "shapley_se", "unified_fixed", "unified_calibrated",
        ],
    )?;
    for r in &report.runs {
        let se = r.valuation.shapley.standard_errors();
        for (i, src) in r.valuation.sources.iter().enumerate() {
            t.row([
                r.task.clone(),
                r.seed.to_string(),
                src.clone(),
                r.source_domains[i].clone(),
                r.valuation.doc_counts[i].to_string(),
                r.valuation.token_counts[i].to_string(),
                f(r.realized[i]),
                f(r.valuation.dqs_mean[i]),
                f(r.valuation.proxy_gain[i]),
                f(r.valuation.influence[i]),
                f(r.valuation.shapley.phi[i]),
                f(se[i]),
                f(r.score(Method::UnifiedFixed)[i]),
                f(r.score(Method::UnifiedCalibrated)[i]),
            ])?;
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "top_sources.csv",
        &["target", "seed", "top_source", "source_domain", "realized_gain", "proxy_gain", "unified_fixed", "unified_calibrated", "domain_coherent"],
    )?;
    for r in &report.runs {
        let i = top_index(&r.realized);
        t.row([
            r.task.clone(),
            r.seed.to_string(),
            r.valuation.sources[i].clone(),
            r.source_domains[i].clone(),
            f(r.realized[i]),
            f(r.valuation.proxy_gain[i]),
            f(r.score(Method::UnifiedFixed)[i]),
            f(r.score(Method::UnifiedCalibrated)[i]),
            (r.source_domains[i] == r.task).to_string(),
        ])?;
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "weights.csv",
        &["task", "seed", "w_dqs", "w_proxy", "w_influence", "w_shapley", "calibrated_spearman", "default_spearman", "calibrated_top2"],
    )?;
    for r in &report.runs {
        let w = r.calibration.weights.as_array();
        t.row([
            r.task.clone(),
            r.seed.to_string(),
            f(w[0]),
            f(w[1]),
            f(w[2]),
            f(w[3]),
            f(r.calibration.spearman),
            opt(r.default_spearman),
            f(r.calibration.top2_overlap),
        ])?;
    }
    written.push(t.finish()?);

    let mut t = Table::create(dir, "smoke_config.csv", &["task", "seed", "domain", "train", "validation"])?;
    for r in &report.runs {
        for d in r.corpus.domains() {
            let train = r.corpus.train().filter(|x| x.domain == d).count();
            let val = r.corpus.validation().filter(|x| x.domain == d).count();
            t.row([r.task.clone(), r.seed.to_string(), d, train.to_string(), val.to_string()])?;
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "robustness.csv",
        &["task", "seed", "attack", "target_source", "method", "clean_top1", "attacked_top1", "top1_changed", "top1_is_target", "mean_rank_displacement"],
    )?;
    for r in &report.runs {
        for x in &r.robustness {
            t.row([
                x.task.clone(),
                x.seed.to_string(),
                x.attack.name().to_string(),
                x.target_source.clone(),
                x.method.to_string(),
                x.clean_top1.clone(),
                x.attacked_top1.clone(),
                x.top1_changed.to_string(),
                x.top1_is_target.to_string(),
                f(x.mean_rank_displacement),
            ])?;
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "density_curve.csv",
        &["task", "seed", "scorer", "percent", "retained_docs", "value", "retained_fraction"],
    )?;
    for r in &report.runs {
        for p in &r.density {
            t.row([
                p.task.clone(),
                p.seed.to_string(),
                p.scorer.name().to_string(),
                p.percent.to_string(),
                p.retained_docs.to_string(),
                f(p.value),
                f(p.retained_fraction),
            ])?;
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "overhead.csv",
        &[
            "task", "seed", "run", "entries", "ledger_bytes", "bytes_per_entry", "dataset_root_ms",
            "initial_commit_ms", "checkpoint_commit_ms", "verify_ms", "verdict",
        ],
    )?;
    for r in &report.runs {
        for run in &r.runs {
            let o = &run.overhead;
            t.row([
                r.task.clone(),
                r.seed.to_string(),
                run.label.clone(),
                run.entries.to_string(),
                o.ledger_bytes.to_string(),
                f(o.bytes_per_entry()),
                f(o.dataset_root_secs * 1e3),
                f(o.initial_commit_secs * 1e3),
                f(o.mean_checkpoint_secs * 1e3),
                f(run.verify_secs * 1e3),
                match &run.verdict {
                    crate::ledger::Verdict::Accept => "accept".to_string(),
                    crate::ledger::Verdict::Reject(why) => format!("reject ({why})"),
                },
            ])?;
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "bootstrap.csv",
        &["task", "seed", "baseline", "proxy_minus_baseline_rho", "ci_low", "ci_high", "skipped"],
    )?;
    for r in &report.runs {
        for b in &r.bootstrap {
            let (m, lo, hi, sk) = match &b.interval {
                Some(i) => (f(i.mean_difference), f(i.low), f(i.high), i.skipped.to_string()),
                None => Default::default(),
            };
            t.row([r.task.clone(), r.seed.to_string(), b.method.to_string(), m, lo, hi, sk])?;
        }
    }
    written.push(t.finish()?);

    let mut t = Table::create(
        dir,
        "prices.csv",
        &[
            "task", "seed", "source", "tokens", "dqs_mean", "proxy_gain", "influence", "shapley",
            "unified", "ci_low", "ci_high", "price", "price_low", "price_high",
        ],
    )?;
    for r in &report.runs {
        let rows = price_sources(
            &r.valuation.sources,
            &r.valuation.token_counts,
            &r.valuation.components(),
            &r.calibration.weights,
            pricing,
        )?;
        for v in rows {
            t.row([
                r.task.clone(),
                r.seed.to_string(),
                v.source,
                v.token_count.to_string(),
                f(v.dqs_mean),
                f(v.proxy_gain),
                f(v.influence),
                f(v.shapley),
                f(v.unified),
                f(v.ci_low),
                f(v.ci_high),
                f(v.price),
                f(v.price_low),
                f(v.price_high),
            ])?;
        }
    }
    written.push(t.finish()?);

    let manifest = manifest(report, pricing);
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

fn run_entry(r: &TaskRun) -> serde_json::Value {
    json!({
        "task": r.task,
        "seed": r.seed,
        "sources": r.valuation.sources,
        "shapley_seed": r.seed,
        "shapley_permutations": r.valuation.shapley.permutations_used,
        "shapley_cache": r.valuation.shapley.cache_stats,
        "cg_iterations": r.valuation.cg.iterations,
        "cg_converged": r.valuation.cg.converged,
        "cg_residual": r.valuation.cg.residual_norm(),
        "scale_factor": r.valuation.scale_factor,
        "calibrated_weights": r.calibration.weights,
        "ledgers": r.runs.iter().map(|l| json!({
            "run": l.label,
            "dir": l.dir,
            "entries": l.entries,
            "claimed_improvement": l.claimed_improvement,
            "verdict": l.verdict,
        })).collect::<Vec<_>>(),
        "elapsed_secs": r.elapsed_secs,
    })
}

pub fn manifest(report: &BenchmarkReport, pricing: &PricingConfig) -> serde_json::Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seeds": report.seeds,
        "tasks": report.tasks,
        "config": report.config,
        "pricing": pricing,
        "conventions": {
            "ci_std_divisor": "k-1 (sample standard deviation over the normalized proxy, influence and Shapley signals)",
            "calibration": "grid search on the same split as the realized gains",
            "realized_gains": "leave-one-source-out on the target proxy",
            "log_base": "natural log in the value function, bits for information density",
        },
        "runs": report.runs.iter().map(run_entry).collect::<Vec<_>>(),
        "elapsed_secs": report.elapsed_secs,
    })
}
