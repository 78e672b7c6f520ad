use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use shardvalue::corpus::{load_corpus, Corpus};
use shardvalue::harness::bench::{realized_gains, run_benchmark, BenchConfig, BenchInput};
use shardvalue::harness::report::write_report;
use shardvalue::harness::synthetic::generate_synthetic;
use shardvalue::ledger::{
    read_doc_ids, read_entries, record_training, LedgerFingerprint, Opening, RecorderConfig,
    Verdict, VerifyOptions,
};
use shardvalue::pricing::{calibrate_weights, price_sources, EnsembleWeights, PricingConfig, DEFAULT_GRID_STEPS};
use shardvalue::proxy::{LabelPolicy, ProxyConfig, ProxyProblem, TrainConfig, DEFAULT_SCALING_ALPHA};
use shardvalue::quality::{score_train_documents, train_trigram};
use shardvalue::valuation::{run_valuation_with, ScalingConfig, ValuationConfig};

#[derive(Parser)]
#[command(name = "shardvalue", version, about = "Value, price and audit text data sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-document quality scores (information density, coherence, richness, DQS).
    Score(ScoreArgs),
    /// Per-source proxy gain, influence and Shapley value.
    Value(ValueArgs),
    /// Unified scores, confidence intervals and prices.
    Price(PriceArgs),
    /// Record or verify a training ledger.
    #[command(subcommand)]
    Ledger(LedgerCommand),
    /// Benchmark harness.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Write the synthetic five-source corpus as JSONL.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-source means; defaults to `<out>.sources.csv`.
    #[arg(long)]
    source_out: Option<PathBuf>,
    /// Trigram smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args, Clone)]
struct LabelArgs {
    /// Label documents 1 iff their domain matches; stored labels otherwise.
    #[arg(long)]
    target_domain: Option<String>,
    /// Validation negatives kept from each other domain.
    #[arg(long)]
    negatives_per_domain: Option<usize>,
}

impl LabelArgs {
    fn policy(&self) -> LabelPolicy {
        match &self.target_domain {
            None => LabelPolicy::Stored,
            Some(d) => LabelPolicy::TargetDomain {
                domain: d.clone(),
                negatives_per_domain: self.negatives_per_domain,
            },
        }
    }
}

#[derive(Args, Clone)]
struct ProxyArgs {
    #[arg(long, default_value_t = 256)]
    dim: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
}

impl ProxyArgs {
    fn config(&self) -> ProxyConfig {
        ProxyConfig {
            dim: self.dim,
            train: TrainConfig {
                lambda: self.lambda,
                epochs: self.epochs,
                learning_rate: self.learning_rate,
                seed: 0,
            },
            normalize: true,
        }
    }
}

#[derive(Args, Clone)]
struct ValuationArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    proxy: ProxyArgs,
    #[arg(long, default_value_t = 64)]
    shapley_permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target parameter count for gain extrapolation (off when omitted).
    #[arg(long)]
    n_target: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SCALING_ALPHA)]
    scaling_alpha: f64,
}

impl ValuationArgs {
    fn config(&self) -> ValuationConfig {
        let mut c = ValuationConfig::new(self.labels.policy());
        c.proxy = self.proxy.config();
        c.shapley_permutations = self.shapley_permutations;
        c.shapley_seed = self.seed;
        c.scaling = self.n_target.map(|n_target| ScalingConfig {
            n_target,
            alpha: self.scaling_alpha,
        });
        c
    }
}

#[derive(Args)]
struct ValueArgs {
    #[command(flatten)]
    valuation: ValuationArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightChoice {
    Default,
    Calibrated,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    valuation: ValuationArgs,
    #[arg(long, value_enum, default_value_t = WeightChoice::Default)]
    weights: WeightChoice,
    #[arg(long, default_value_t = 1e-6)]
    p_base: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Feature dimension of the target proxy used for calibration.
    #[arg(long, default_value_t = 1024)]
    target_dim: usize,
    #[arg(long, default_value_t = 400)]
    target_epochs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Exit status 0 on accept, 2 on reject.
    Verify {
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        doc_ids: PathBuf,
        #[arg(long)]
        claimed_gain: Option<f64>,
        /// Disclosed parameters and nonce for the commitment check.
        #[arg(long)]
        opening: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Train on every source and write ledger, fingerprint, doc ids and opening.
    Record {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        proxy: ProxyArgs,
        /// Epochs between ledger entries.
        #[arg(long, default_value_t = 1)]
        cadence: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    Run {
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        corpus: Option<PathBuf>,
        #[arg(long)]
        synthetic: bool,
        /// Number of seeds, starting at 0.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_adversarial: bool,
        #[arg(long)]
        no_density: bool,
        #[arg(long, default_value_t = 64)]
        shapley_permutations: usize,
    },
}

fn load(path: &Path) -> Result<Corpus> {
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn score(args: ScoreArgs) -> Result<()> {
    let corpus = load(&args.corpus)?;
    let model = train_trigram(&corpus, args.alpha)?;
    let scored = score_train_documents(&corpus, &model)?;
    let mut w = csv::Writer::from_path(&args.out)?;
    w.write_record(["id", "source", "bits", "norm", "syn_co", "sem_rich", "dqs"])?;
    for (d, s) in &scored {
        w.write_record([
            d.id.clone(),
            d.source.clone(),
            s.info_density_bits.to_string(),
            s.info_density_norm.to_string(),
            s.syn_co.to_string(),
            s.sem_rich.to_string(),
            s.dqs.to_string(),
        ])?;
    }
    w.flush()?;

    let source_out = args.source_out.unwrap_or_else(|| args.out.with_extension("sources.csv"));
    let mut w = csv::Writer::from_path(&source_out)?;
    w.write_record(["source", "docs", "bits", "norm", "syn_co", "sem_rich", "dqs"])?;
    for src in corpus.sources() {
        let rows: Vec<_> = scored.iter().filter(|(d, _)| &d.source == src).map(|(_, s)| s).collect();
        let n = rows.len() as f64;
        let mean = |f: fn(&shardvalue::quality::QualityScores) -> f64| rows.iter().map(|s| f(s)).sum::<f64>() / n;
        w.write_record([
            src.clone(),
            rows.len().to_string(),
            mean(|s| s.info_density_bits).to_string(),
            mean(|s| s.info_density_norm).to_string(),
            mean(|s| s.syn_co).to_string(),
            mean(|s| s.sem_rich).to_string(),
            mean(|s| s.dqs).to_string(),
        ])?;
    }
    w.flush()?;
    eprintln!("wrote {} and {}", args.out.display(), source_out.display());
    Ok(())
}

fn value(args: ValueArgs) -> Result<()> {
    let corpus = load(&args.valuation.corpus)?;
    let config = args.valuation.config();
    let problem = ProxyProblem::new(&corpus, &config.policy, config.proxy)?;
    let v = run_valuation_with(&corpus, &problem, &config)?;
    let se = v.shapley.standard_errors();
    let mut w = csv::Writer::from_path(&args.out)?;
    w.write_record([
        "source", "docs", "tokens", "dqs_mean", "gain", "value_full", "value_without",
        "task_utility_without", "log_loss_without", "influence", "shapley", "shapley_se",
    ])?;
    for (i, src) in v.sources.iter().enumerate() {
        let l = &v.loso[i];
        w.write_record([
            src.clone(),
            v.doc_counts[i].to_string(),
            v.token_counts[i].to_string(),
            v.dqs_mean[i].to_string(),
            v.proxy_gain[i].to_string(),
            l.full.value.to_string(),
            l.without.value.to_string(),
            l.without.task_utility.to_string(),
            l.without.log_loss.to_string(),
            v.influence[i].to_string(),
            v.shapley.phi[i].to_string(),
            se[i].to_string(),
        ])?;
    }
    w.flush()?;
    let stats = problem.cache_stats();
    eprintln!(
        "wrote {} ({} sources, {} subset trainings, {} cache hits, CG {} iterations, residual {:.2e})",
        args.out.display(),
        v.sources.len(),
        stats.evaluations,
        stats.hits,
        v.cg.iterations,
        v.cg.residual_norm()
    );
    Ok(())
}

fn price(args: PriceArgs) -> Result<()> {
    let corpus = load(&args.valuation.corpus)?;
    let config = args.valuation.config();
    let problem = ProxyProblem::new(&corpus, &config.policy, config.proxy)?;
    let v = run_valuation_with(&corpus, &problem, &config)?;
    let components = v.components();
    let weights = match args.weights {
        WeightChoice::Default => EnsembleWeights::default(),
        WeightChoice::Calibrated => {
            let mut target = config.proxy;
            target.dim = args.target_dim;
            target.train.epochs = args.target_epochs;
            let target = ProxyProblem::new(&corpus, &config.policy, target)?;
            let realized = realized_gains(&target, RecorderConfig { cadence: 10 }, None)?;
            let cal = calibrate_weights(&components, &realized.gains, DEFAULT_GRID_STEPS)?;
            eprintln!(
                "calibrated weights {:?} (Spearman {:.3})",
                cal.weights.as_array(),
                cal.spearman
            );
            cal.weights
        }
    };
    let pricing = PricingConfig {
        p_base: args.p_base,
        beta: args.beta,
    };
    let rows = price_sources(&v.sources, &v.token_counts, &components, &weights, &pricing)?;
    let mut w = csv::Writer::from_path(&args.out)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn ledger(cmd: LedgerCommand) -> Result<ExitCode> {
    match cmd {
        LedgerCommand::Verify {
            fingerprint,
            ledger,
            doc_ids,
            claimed_gain,
            opening,
            tolerance,
        } => {
            let fingerprint = LedgerFingerprint::load(&fingerprint);
            let entries = read_entries(&ledger);
            let ids = read_doc_ids(&doc_ids)?;
            let opening = opening.map(|p| Opening::load(p)).transpose();
            let verdict = match (fingerprint, entries, opening) {
                (Ok(fp), Ok(entries), Ok(opening)) => shardvalue::ledger::verify_ledger(
                    &fp,
                    &ids,
                    &entries,
                    VerifyOptions {
                        claimed_improvement: claimed_gain,
                        opening: opening.as_ref(),
                        metric_tolerance: tolerance,
                    },
                ),
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                    Verdict::Reject(shardvalue::ledger::RejectReason::Malformed(e.to_string()))
                }
            };
            match verdict {
                Verdict::Accept => {
                    println!("accept");
                    Ok(ExitCode::SUCCESS)
                }
                Verdict::Reject(why) => {
                    println!("reject: {why}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        LedgerCommand::Record {
            corpus,
            labels,
            proxy,
            cadence,
            out,
        } => {
            let corpus = load(&corpus)?;
            let problem = ProxyProblem::new(&corpus, &labels.policy(), proxy.config())?;
            std::fs::create_dir_all(&out)?;
            let journal = out.join("ledger.jsonl");
            if journal.exists() {
                bail!("{} already exists; ledgers are append-only", journal.display());
            }
            let run = record_training(&problem, &problem.all_sources(), RecorderConfig { cadence }, Some(&journal))?;
            run.fingerprint.save(out.join("fingerprint.json"))?;
            shardvalue::ledger::write_doc_ids(out.join("doc_ids.txt"), &run.doc_ids)?;
            run.opening.save(out.join("opening.json"))?;
            println!(
                "{} entries, claimed gain {:.8}, chain tail {}",
                run.ledger.entries().len(),
                run.claimed_improvement,
                hex::encode(run.fingerprint.chain_tail)
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn bench(cmd: BenchCommand) -> Result<()> {
    let BenchCommand::Run {
        corpus,
        synthetic,
        seeds,
        out,
        no_adversarial,
        no_density,
        shapley_permutations,
    } = cmd;
    let input = match (corpus, synthetic) {
        (Some(path), false) => BenchInput::Corpus(load(&path)?),
        (None, true) => BenchInput::Synthetic,
        _ => bail!("give exactly one of --corpus or --synthetic"),
    };
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let mut config = BenchConfig::default();
    config.valuation.shapley_permutations = shapley_permutations;
    if no_adversarial {
        config.adversarial = None;
    }
    if no_density {
        config.density_percents.clear();
    }
    let seeds: Vec<u64> = (0..seeds).collect();
    let report = run_benchmark(&input, &config, &seeds, Some(&out.join("ledgers")))?;
    let written = write_report(&report, &out, &PricingConfig::default())?;
    for s in &report.summary {
        println!(
            "{:<20} spearman {:>7.3} ± {:.3}  top-k {:.2}",
            s.method.name(),
            s.spearman.mean,
            s.spearman.std,
            s.top_k_overlap.mean
        );
    }
    eprintln!("wrote {} files to {} in {:.1}s", written.len(), out.display(), report.elapsed_secs);
    Ok(())
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Score(a) => score(a)?,
        Command::Value(a) => value(a)?,
        Command::Price(a) => price(a)?,
        Command::Ledger(c) => return ledger(c),
        Command::Bench(c) => bench(c)?,
        Command::Synth { seed, out } => generate_synthetic(seed).save(&out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
