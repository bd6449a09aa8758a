use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use botgraph::eval::{EvalMode, SplitConfig};
use botgraph::pipeline::{self, ExtractOptions, LearnOptions};
use botgraph::synth::ScenarioSpec;
use botgraph::{ConvergenceConfig, GraphMode, SamplingConfig, TrainConfig, WindowConfig};
use clap::{Args, Parser, Subcommand};

/// Botnet host detection from communication-graph time series.
#[derive(Parser, Debug)]
#[command(name = "botgraph", version, about)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic labeled capture.
    Synth(SynthArgs),
    /// Turn a capture into a per-interval feature cache.
    Extract(ExtractArgs),
    /// Train a classifier on one or more feature caches.
    Train(TrainArgs),
    /// Evaluate under the within, cross or combined protocol.
    Eval(EvalArgs),
    /// Classify the hosts of a capture or feature cache.
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override one scenario key, e.g. `--set bot_hosts=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the three-scenario default suite into --out-dir instead.
    #[arg(long, conflicts_with_all = ["spec", "overrides", "events", "truth"])]
    suite: bool,
    #[arg(long, requires = "suite")]
    out_dir: Option<PathBuf>,
    #[arg(long, required_unless_present = "suite")]
    events: Option<PathBuf>,
    #[arg(long, required_unless_present = "suite")]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GraphArgs {
    #[arg(long, default_value_t = 300.0)]
    window_s: f64,
    #[arg(long, default_value_t = 150.0)]
    step_s: f64,
    /// `multi` (one edge per packet) or `weighted` (counted edges).
    #[arg(long, default_value = "multi")]
    graph_mode: GraphMode,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    /// Extraction threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Capture length in seconds; defaults to the last timestamp.
    #[arg(long)]
    duration_s: Option<f64>,
}

impl GraphArgs {
    fn options(&self) -> anyhow::Result<ExtractOptions> {
        let window = WindowConfig::new(self.window_s, self.step_s)?;
        let convergence = ConvergenceConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            damping: self.damping,
        };
        convergence.validate()?;
        Ok(ExtractOptions {
            window,
            convergence,
            mode: self.graph_mode,
            workers: self.workers,
            duration_s: self.duration_s,
        })
    }
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Events CSV or classic pcap.
    input: PathBuf,
    /// Ground-truth CSV (`host,infection_time_s`).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Feature cache to write.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    graph: GraphArgs,
    /// Repeat extraction with this many workers and report the speedup.
    #[arg(long, value_name = "WORKERS")]
    compare_workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct LearnArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 6.0)]
    malicious_weight: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Benign hosts kept per malicious host.
    #[arg(long, default_value_t = 10)]
    neg_pos_ratio: usize,
    /// Keep every benign host.
    #[arg(long)]
    no_undersample: bool,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Threads for scoring and for evaluation runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl LearnArgs {
    fn options(&self) -> anyhow::Result<LearnOptions> {
        let opts = LearnOptions {
            sampling: SamplingConfig {
                neg_pos_ratio: self.neg_pos_ratio,
                seed: self.seed,
                ..SamplingConfig::default()
            },
            split: SplitConfig {
                train_fraction: self.train_fraction,
                seed: self.seed,
            },
            train: TrainConfig {
                epochs: self.epochs,
                learning_rate: self.lr,
                malicious_weight: self.malicious_weight,
                batch_size: self.batch_size,
                hidden_dim: self.hidden,
                seed: self.seed,
                ..TrainConfig::default()
            },
            undersample: !self.no_undersample,
            threshold: self.threshold,
        };
        opts.sampling.validate()?;
        opts.split.validate()?;
        opts.train.validate()?;
        Ok(opts)
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Feature caches written by `extract`.
    #[arg(required = true)]
    caches: Vec<PathBuf>,
    /// Model file to write.
    #[arg(long, short)]
    model: PathBuf,
    #[command(flatten)]
    learn: LearnArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Feature caches written by `extract`, one per collection.
    #[arg(required = true)]
    caches: Vec<PathBuf>,
    /// `within`, `cross` or `combined`.
    #[arg(long)]
    mode: EvalMode,
    /// Score this model instead of training per protocol.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory for reports, ROC curves and split manifests.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    learn: LearnArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Feature cache, events CSV or pcap.
    input: PathBuf,
    #[arg(long, short)]
    model: PathBuf,
    /// Per-host verdict CSV to write.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[command(flatten)]
    graph: GraphArgs,
}

fn init_threads(workers: usize) -> anyhow::Result<()> {
    if workers == 0 {
        bail!(botgraph::Error::Config("workers must be at least 1".into()));
    }
    // Fails only if a pool already exists, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    if args.suite {
        let dir = args.out_dir.unwrap_or_else(|| PathBuf::from("."));
        let made = pipeline::cmd_synth_suite(args.seed.unwrap_or(0), &dir)?;
        for (spec, s) in made {
            println!("{}: {} events, {} bots", spec.name, s.events.len(), s.bots.len());
        }
        return Ok(());
    }
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ScenarioSpec::parse(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ScenarioSpec::default(),
    };
    for kv in &args.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!(botgraph::Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")));
        };
        spec.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let (events, truth) = (args.events.expect("required"), args.truth.expect("required"));
    let s = pipeline::cmd_synth(&spec, &events, &truth)?;
    println!("{}: {} events, {} bots", spec.name, s.events.len(), s.bots.len());
    Ok(())
}

fn extract(args: ExtractArgs) -> anyhow::Result<()> {
    let opts = args.graph.options()?;
    let summary = pipeline::cmd_extract(&args.input, args.truth.as_deref(), &args.out, &opts, args.compare_workers)?;
    print!("{}", summary.run.summary());
    if let (Some(c), Some(speedup)) = (&summary.comparison, summary.speedup()) {
        println!(
            "speedup vs {} workers: {speedup:.3} (identical output: {})",
            c.baseline_workers, c.identical
        );
    }
    Ok(())
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    init_threads(args.learn.workers)?;
    let opts = args.learn.options()?;
    let s = pipeline::cmd_train(&args.caches, &opts, &args.model)?;
    println!(
        "trained on {} windows ({} held out); final loss {}; training accuracy {:.4}",
        s.train_windows,
        s.test_windows,
        s.outcome.loss_history.last().copied().unwrap_or(f64::NAN),
        s.train_accuracy
    );
    println!("model: {}", s.model_path.display());
    Ok(())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    init_threads(args.learn.workers)?;
    let opts = args.learn.options()?;
    let s = pipeline::cmd_eval(args.model.as_deref(), &args.caches, args.mode, &opts, &args.out_dir)?;
    print!("{}", s.report.to_text());
    Ok(())
}

fn predict(args: PredictArgs) -> anyhow::Result<()> {
    init_threads(args.graph.workers)?;
    let opts = args.graph.options()?;
    let verdicts = pipeline::cmd_predict(&args.model, &args.input, &opts, args.threshold, &args.out)?;
    let flagged = verdicts.iter().filter(|v| v.verdict == "botnet").count();
    let unknown = verdicts.iter().filter(|v| v.windows == 0).count();
    println!(
        "{} hosts: {flagged} botnet, {} normal, {unknown} insufficient data",
        verdicts.len(),
        verdicts.len() - flagged - unknown
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<botgraph::Error>())
        .map_or(2, |e| e.kind().exit_code())
}

/// Joins the cause chain, skipping causes whose text the previous message already ends with.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
