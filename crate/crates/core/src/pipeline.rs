//! End-to-end commands: synthesize, extract, train, evaluate, predict.
//!
//! Each command writes its artifacts and returns a summary; the CLI crate
//! only parses flags and maps errors to exit codes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{info, warn};
use serde::Serialize;

use crate::cache::FeatureCache;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_modes, host_classes, split, Dataset, EvalConfig, EvalMode, EvalReport, HostSplit, RunReport,
    SplitConfig,
};
use crate::graphfeat::{extract_intervals, ConvergenceConfig, FeatureTiming, GraphMode, IntervalTiming};
use crate::ingest::{
    looks_like_pcap, read_ground_truth, write_events_csv, write_ground_truth, CaptureMeta, EventCsvReader,
    GroundTruth, PacketEvent, PcapReader,
};
use crate::model::{load_model, predict_scores, save_model, train, Provenance, SavedModel, TrainConfig, TrainOutcome};
use crate::synth::{default_suite, generate, Scenario, ScenarioSpec};
use crate::timeseries::{assemble, slice_windows, undersample, SamplingConfig, WindowSample};
use crate::windowing::{Slicer, WindowConfig};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// A capture file opened as CSV or classic pcap, chosen by content.
pub enum EventSource {
    Csv(EventCsvReader<BufReader<File>>),
    Pcap(PcapReader<BufReader<File>>),
}

impl EventSource {
    pub fn open(path: &Path) -> Result<Self> {
        let mut head = [0u8; 4];
        let n = File::open(path)
            .and_then(|mut f| f.read(&mut head))
            .map_err(|e| Error::io(path, e))?;
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        if looks_like_pcap(&head[..n]) {
            Ok(EventSource::Pcap(PcapReader::new(BufReader::new(file))?))
        } else {
            Ok(EventSource::Csv(EventCsvReader::new(BufReader::new(file))))
        }
    }

    pub fn meta(&self) -> CaptureMeta {
        match self {
            EventSource::Csv(r) => r.meta(),
            EventSource::Pcap(r) => r.meta(),
        }
    }

    /// Frames dropped because they were not IPv4 (always 0 for CSV).
    pub fn skipped(&self) -> u64 {
        match self {
            EventSource::Csv(_) => 0,
            EventSource::Pcap(r) => r.skipped(),
        }
    }
}

impl Iterator for EventSource {
    type Item = Result<PacketEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            EventSource::Csv(r) => r.next(),
            EventSource::Pcap(r) => r.next(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub window: WindowConfig,
    pub convergence: ConvergenceConfig,
    pub mode: GraphMode,
    pub workers: usize,
    /// Capture length; defaults to the last timestamp.
    pub duration_s: Option<f64>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            convergence: ConvergenceConfig::default(),
            mode: GraphMode::default(),
            workers: 1,
            duration_s: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractRun {
    pub cache: FeatureCache,
    pub timings: Vec<IntervalTiming>,
    pub wall: Duration,
    pub workers: usize,
    pub peak_buffered_events: usize,
    pub skipped_frames: u64,
}

impl ExtractRun {
    pub fn events_per_second(&self) -> f64 {
        self.cache.meta.event_count as f64 / self.wall.as_secs_f64().max(1e-9)
    }

    pub fn feature_totals(&self) -> FeatureTiming {
        let mut total = FeatureTiming::default();
        for t in &self.timings {
            total.add(&t.timing);
        }
        total
    }

    /// One row per interval, seconds per feature family.
    pub fn timing_csv(&self) -> String {
        let mut s = String::from("interval_index,events,nodes");
        for c in FeatureTiming::COLUMNS {
            let _ = write!(s, ",{c}_s");
        }
        s.push_str(",total_s\n");
        for t in &self.timings {
            let _ = write!(s, "{},{},{}", t.index, t.events, t.nodes);
            for d in t.timing.as_array() {
                let _ = write!(s, ",{:.9}", d.as_secs_f64());
            }
            let _ = writeln!(s, ",{:.9}", t.timing.total().as_secs_f64());
        }
        s
    }

    pub fn summary(&self) -> String {
        let c = &self.cache;
        let mut s = String::new();
        let _ = writeln!(s, "graph_mode: {}", c.mode.as_str());
        let _ = writeln!(s, "window_s: {} step_s: {}", c.window.window_s, c.window.step_s);
        let _ = writeln!(
            s,
            "epsilon: {} max_iters: {} damping: {}",
            c.convergence.epsilon, c.convergence.max_iters, c.convergence.damping
        );
        let _ = writeln!(s, "workers: {}", self.workers);
        let _ = writeln!(
            s,
            "events: {} hosts: {} duration_s: {} intervals: {}",
            c.meta.event_count,
            c.meta.host_count,
            c.meta.duration_s,
            c.interval_count()
        );
        if self.skipped_frames > 0 {
            let _ = writeln!(s, "skipped non-IPv4 frames: {}", self.skipped_frames);
        }
        let _ = writeln!(s, "wall_s: {:.6}", self.wall.as_secs_f64());
        let _ = writeln!(s, "events_per_s: {:.1}", self.events_per_second());
        let _ = writeln!(s, "peak_buffered_events: {}", self.peak_buffered_events);
        let totals = self.feature_totals();
        let sum = totals.total().as_secs_f64().max(1e-12);
        let _ = writeln!(s, "cpu time by feature family:");
        for (name, d) in FeatureTiming::COLUMNS.iter().zip(totals.as_array()) {
            let _ = writeln!(s, "  {name:<12} {:>12.6} s {:>6.1}%", d.as_secs_f64(), 100.0 * d.as_secs_f64() / sum);
        }
        if !c.eigenvector_degenerate.is_empty() || !c.hits_degenerate.is_empty() {
            let _ = writeln!(
                s,
                "degenerate spectra: eigenvector in {} intervals, hits in {} intervals",
                c.eigenvector_degenerate.len(),
                c.hits_degenerate.len()
            );
        }
        s
    }
}

fn run_extraction<I>(
    slicer: &mut Slicer<I>,
    truth: GroundTruth,
    opts: &ExtractOptions,
    meta: impl FnOnce(&I) -> (CaptureMeta, u64),
) -> Result<ExtractRun>
where
    I: Iterator<Item = Result<PacketEvent>>,
{
    let output = extract_intervals(&mut *slicer, opts.mode, &opts.convergence, opts.workers)?;
    let (meta, skipped) = meta(slicer.source());
    let cache = FeatureCache::from_extraction(&output, opts.window, opts.convergence, opts.mode, meta, truth);
    Ok(ExtractRun {
        cache,
        timings: output.timings,
        wall: output.wall,
        workers: output.workers,
        peak_buffered_events: slicer.peak_buffered_events(),
        skipped_frames: skipped,
    })
}

/// Streams a capture file through windowing and feature extraction.
pub fn extract_file(input: &Path, truth: GroundTruth, opts: &ExtractOptions) -> Result<ExtractRun> {
    let source = EventSource::open(input)?;
    let mut slicer = Slicer::new(source, opts.window, opts.duration_s)?;
    run_extraction(&mut slicer, truth, opts, |s| (s.meta(), s.skipped()))
}

pub fn extract_events(events: &[PacketEvent], truth: GroundTruth, opts: &ExtractOptions) -> Result<ExtractRun> {
    let mut slicer = Slicer::new(events.iter().copied().map(Ok), opts.window, opts.duration_s)?;
    run_extraction(&mut slicer, truth, opts, |_| (CaptureMeta::from_events(events), 0))
}

fn load_truth(path: Option<&Path>) -> Result<GroundTruth> {
    match path {
        Some(p) if p.exists() => read_ground_truth(p),
        Some(p) => {
            warn!("ground truth {} not found; labeling every host benign", p.display());
            Ok(GroundTruth::new())
        }
        None => {
            warn!("no ground truth given; labeling every host benign");
            Ok(GroundTruth::new())
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpeedupComparison {
    pub baseline_workers: usize,
    pub baseline_wall: Duration,
    pub identical: bool,
}

#[derive(Debug, Clone)]
pub struct ExtractSummary {
    pub run: ExtractRun,
    pub comparison: Option<SpeedupComparison>,
    pub cache_path: PathBuf,
    pub timing_csv_path: PathBuf,
    pub report_path: PathBuf,
}

impl ExtractSummary {
    /// Baseline wall time over this run's wall time.
    pub fn speedup(&self) -> Option<f64> {
        self.comparison
            .as_ref()
            .map(|c| c.baseline_wall.as_secs_f64() / self.run.wall.as_secs_f64().max(1e-9))
    }
}

/// Extracts `input` into a feature cache at `out`, plus `<out>.timing.csv`
/// and `<out>.timing.txt`. With `compare_workers`, the extraction is
/// repeated on that many workers to report speedup and check that both
/// runs produce the same cache.
pub fn cmd_extract(
    input: &Path,
    truth: Option<&Path>,
    out: &Path,
    opts: &ExtractOptions,
    compare_workers: Option<usize>,
) -> Result<ExtractSummary> {
    let truth = load_truth(truth)?;
    let run = extract_file(input, truth.clone(), opts)?;
    let text = run.cache.to_csv_string();
    write_file(out, &text)?;
    let comparison = match compare_workers {
        Some(w) => {
            let base = extract_file(input, truth, &ExtractOptions { workers: w, ..*opts })?;
            let identical = base.cache.to_csv_string() == text;
            if !identical {
                warn!("extraction with {w} workers produced a different cache");
            }
            Some(SpeedupComparison {
                baseline_workers: w,
                baseline_wall: base.wall,
                identical,
            })
        }
        None => None,
    };
    let mut report = run.summary();
    if let Some(c) = &comparison {
        let _ = writeln!(
            report,
            "baseline: {} workers, wall_s {:.6}, speedup {:.3}, identical output: {}",
            c.baseline_workers,
            c.baseline_wall.as_secs_f64(),
            c.baseline_wall.as_secs_f64() / run.wall.as_secs_f64().max(1e-9),
            c.identical
        );
    }
    let timing_csv_path = with_suffix(out, ".timing.csv");
    let report_path = with_suffix(out, ".timing.txt");
    write_file(&timing_csv_path, &run.timing_csv())?;
    write_file(&report_path, &report)?;
    info!("wrote {} ({} intervals)", out.display(), run.cache.interval_count());
    Ok(ExtractSummary {
        run,
        comparison,
        cache_path: out.to_path_buf(),
        timing_csv_path,
        report_path,
    })
}

/// Settings shared by training, evaluation and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearnOptions {
    pub sampling: SamplingConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub undersample: bool,
    pub threshold: f64,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self {
            sampling: SamplingConfig::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            undersample: true,
            threshold: crate::eval::DEFAULT_THRESHOLD,
        }
    }
}

/// Assembles, optionally undersamples, and slices one cache. `id` keeps
/// hosts of different captures apart; it also offsets the sampling seed.
pub fn dataset_from_cache(
    cache: &FeatureCache,
    id: u32,
    name: &str,
    sampling: &SamplingConfig,
    undersample_hosts: bool,
) -> Result<Dataset> {
    sampling.validate()?;
    let mut series = assemble(&cache.intervals, &cache.truth, &cache.window, id);
    if undersample_hosts {
        let cfg = SamplingConfig {
            seed: sampling.seed.wrapping_add(u64::from(id)),
            ..*sampling
        };
        series = undersample(series, &cfg).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{name}: {m}")),
            other => other,
        })?;
    }
    Ok(Dataset {
        name: name.to_string(),
        samples: slice_windows(&series, sampling),
    })
}

fn dataset_name(path: &Path) -> String {
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    for ext in [".features.csv", ".csv"] {
        if let Some(stem) = name.strip_suffix(ext) {
            return stem.to_string();
        }
    }
    name
}

/// Reads caches and names them after their file stems, which must be unique.
pub fn load_caches(paths: &[PathBuf]) -> Result<Vec<(String, FeatureCache)>> {
    if paths.is_empty() {
        return Err(Error::Input("no feature caches given".into()));
    }
    let mut names = BTreeSet::new();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let mut name = dataset_name(p);
        if !names.insert(name.clone()) {
            name = format!("{name}#{}", out.len());
            names.insert(name.clone());
        }
        out.push((name, FeatureCache::read(p)?));
    }
    let first = out[0].1.window;
    if let Some((n, c)) = out.iter().find(|(_, c)| c.window != first) {
        return Err(Error::Config(format!(
            "cache {n} uses window {}/{} s, others {}/{} s",
            c.window.window_s, c.window.step_s, first.window_s, first.step_s
        )));
    }
    Ok(out)
}

pub fn datasets_from_caches(caches: &[(String, FeatureCache)], opts: &LearnOptions) -> Result<Vec<Dataset>> {
    caches
        .iter()
        .enumerate()
        .map(|(id, (name, cache))| dataset_from_cache(cache, id as u32, name, &opts.sampling, opts.undersample))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub outcome: TrainOutcome,
    pub split: HostSplit,
    pub train_windows: usize,
    pub test_windows: usize,
    /// Accuracy on the training windows at the configured threshold.
    pub train_accuracy: f64,
    pub model_path: PathBuf,
    pub loss_path: PathBuf,
    pub split_path: PathBuf,
}

fn provenance(caches: &[(String, FeatureCache)], opts: &LearnOptions) -> Provenance {
    Provenance {
        window: caches.first().map(|(_, c)| c.window),
        sampling: Some(opts.sampling),
        train_fraction: Some(opts.split.train_fraction),
        split_seed: Some(opts.split.seed),
        inputs: caches.iter().map(|(n, _)| n.clone()).collect(),
    }
}

fn config_comment(opts: &LearnOptions) -> String {
    format!("# {}\n", serde_json::to_string(opts).expect("options serialize"))
}

/// Trains on the training hosts of the pooled caches. Writes the model,
/// `<model>.loss.csv` and the host split manifest `<model>.split.csv`.
pub fn cmd_train(caches: &[PathBuf], opts: &LearnOptions, model_out: &Path) -> Result<TrainSummary> {
    let caches = load_caches(caches)?;
    let datasets = datasets_from_caches(&caches, opts)?;
    let pooled: Vec<WindowSample> = datasets.into_iter().flat_map(|d| d.samples).collect();
    if !host_classes(&pooled).values().any(|&m| m) {
        return Err(Error::Config("no malicious hosts in the training data".into()));
    }
    let host_split = split(&pooled, &opts.split)?;
    let (train_set, test_set) = host_split.partition(&pooled);
    info!(
        "training on {} windows from {} hosts ({} held out)",
        train_set.len(),
        host_split.train.len(),
        host_split.test.len()
    );
    let outcome = train(&train_set, &opts.train)?;
    let scores = predict_scores(&outcome.params, &train_set)?;
    let correct = scores
        .iter()
        .zip(&train_set)
        .filter(|(&s, w)| (s >= opts.threshold) == w.label)
        .count();
    let train_accuracy = correct as f64 / train_set.len() as f64;

    save_model(model_out, &outcome.params, &opts.train, &provenance(&caches, opts))?;
    let loss_path = with_suffix(model_out, ".loss.csv");
    let mut loss = config_comment(opts);
    loss.push_str("epoch,loss\n");
    for (k, l) in outcome.loss_history.iter().enumerate() {
        let _ = writeln!(loss, "{},{l}", k + 1);
    }
    write_file(&loss_path, &loss)?;
    let split_path = with_suffix(model_out, ".split.csv");
    write_file(&split_path, &(config_comment(opts) + &host_split.to_csv()))?;
    Ok(TrainSummary {
        outcome,
        split: host_split,
        train_windows: train_set.len(),
        test_windows: test_set.len(),
        train_accuracy,
        model_path: model_out.to_path_buf(),
        loss_path,
        split_path,
    })
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '+' { c } else { '_' })
        .collect()
}

/// Scores an already trained model under one protocol: held-out hosts for
/// `within` and `combined` (the split is recomputed from the model's
/// recorded settings), whole collections for `cross`.
pub fn evaluate_model(saved: &SavedModel, datasets: &[Dataset], mode: EvalMode, opts: &LearnOptions) -> Result<EvalReport> {
    let split_cfg = SplitConfig {
        train_fraction: saved.provenance.train_fraction.unwrap_or(opts.split.train_fraction),
        seed: saved.provenance.split_seed.unwrap_or(opts.split.seed),
    };
    let model_name = "model";
    let held_out = |name: &str, samples: &[WindowSample]| -> Result<(RunReport, Option<HostSplit>)> {
        let s = split(samples, &split_cfg)?;
        let (tr, te) = s.partition(samples);
        let r = RunReport::score(mode, model_name, name, &saved.params, tr.len(), &te, opts.threshold)?;
        Ok((r, Some(s)))
    };
    let results: Vec<(RunReport, Option<HostSplit>)> = match mode {
        EvalMode::Within => datasets.iter().map(|d| held_out(&d.name, &d.samples)).collect::<Result<_>>()?,
        EvalMode::Combined => {
            let name = datasets.iter().map(|d| d.name.as_str()).collect::<Vec<_>>().join("+");
            let pooled: Vec<WindowSample> = datasets.iter().flat_map(|d| d.samples.iter().cloned()).collect();
            vec![held_out(&name, &pooled)?]
        }
        EvalMode::Cross => datasets
            .iter()
            .map(|d| {
                let mut r = RunReport::score(mode, model_name, &d.name, &saved.params, 0, &d.samples, opts.threshold)?;
                r.leakage = saved.provenance.inputs.contains(&d.name);
                Ok((r, None))
            })
            .collect::<Result<_>>()?,
    };
    let (runs, splits) = results.into_iter().unzip();
    Ok(EvalReport {
        mode,
        runs,
        matrix: None,
        splits,
    })
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub report: EvalReport,
    pub files: Vec<PathBuf>,
}

/// Runs one evaluation protocol over the caches and writes `report.txt`,
/// `report.jsonl`, a ROC CSV and SVG per run, `auroc_matrix.csv` in cross
/// mode and a host split manifest per split run. Without `model`, models are
/// trained as the protocol prescribes; with one, that model is scored.
pub fn cmd_eval(
    model: Option<&Path>,
    caches: &[PathBuf],
    mode: EvalMode,
    opts: &LearnOptions,
    out_dir: &Path,
) -> Result<EvalSummary> {
    let caches = load_caches(caches)?;
    let saved = model.map(load_model).transpose()?;
    let mut opts = *opts;
    if let Some(s) = &saved {
        if let Some(sampling) = s.provenance.sampling {
            opts.sampling = sampling;
        }
        if let (Some(w), Some((_, c))) = (s.provenance.window, caches.first()) {
            if w != c.window {
                warn!("model was trained on {}/{} s windows, caches use {}/{} s", w.window_s, w.step_s, c.window.window_s, c.window.step_s);
            }
        }
    }
    let datasets = datasets_from_caches(&caches, &opts)?;
    let report = match &saved {
        Some(s) => evaluate_model(s, &datasets, mode, &opts)?,
        None => evaluate_modes(
            &datasets,
            mode,
            &EvalConfig {
                split: opts.split,
                train: opts.train,
                threshold: Some(opts.threshold),
            },
        )?,
    };
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    let mut emit = |name: String, contents: &str| -> Result<()> {
        let path = out_dir.join(name);
        write_file(&path, contents)?;
        files.push(path);
        Ok(())
    };
    let header = format!(
        "# mode={mode} model={} inputs={}\n{}",
        model.map_or_else(|| "(trained per protocol)".to_string(), |p| p.display().to_string()),
        caches.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(","),
        config_comment(&opts)
    );
    emit("report.txt".into(), &(header.clone() + &report.to_text()))?;
    let config_line = serde_json::json!({ "mode": mode, "options": opts, "model": model.map(|p| p.display().to_string()) });
    emit("report.jsonl".into(), &format!("{config_line}\n{}", report.to_json_lines()))?;
    for (run, host_split) in report.runs.iter().zip(&report.splits) {
        let stem = format!("{}__{}", file_safe(&run.train_on), file_safe(&run.test_on));
        if let Some(curve) = &run.roc {
            emit(format!("roc_{stem}.csv"), &curve.to_csv())?;
            emit(
                format!("roc_{stem}.svg"),
                &curve.to_svg(&format!("{} {} on {}", mode, run.train_on, run.test_on)),
            )?;
        }
        if let Some(s) = host_split {
            emit(format!("split_{stem}.csv"), &s.to_csv())?;
        }
    }
    if let Some(m) = &report.matrix {
        emit("auroc_matrix.csv".into(), &m.to_csv())?;
    }
    Ok(EvalSummary { report, files })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HostVerdict {
    pub host: std::net::Ipv4Addr,
    pub windows: usize,
    pub max_score: Option<f64>,
    pub mean_score: Option<f64>,
    pub verdict: &'static str,
}

pub fn verdicts_to_csv(verdicts: &[HostVerdict], header: &str) -> String {
    let mut s = String::from(header);
    s.push_str("host,windows,max_score,mean_score,verdict\n");
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for v in verdicts {
        let _ = writeln!(s, "{},{},{},{},{}", v.host, v.windows, opt(v.max_score), opt(v.mean_score), v.verdict);
    }
    s
}

/// Scores every host seen in the input. Hosts with fewer intervals than
/// one window get an `insufficient data` row.
pub fn predict_cache(saved: &SavedModel, cache: &FeatureCache, threshold: f64) -> Result<Vec<HostVerdict>> {
    let sampling = saved.provenance.sampling.unwrap_or_default();
    if let Some(w) = saved.provenance.window {
        if w != cache.window {
            warn!("model was trained on {}/{} s windows, input uses {}/{} s", w.window_s, w.step_s, cache.window.window_s, cache.window.step_s);
        }
    }
    let series = assemble(&cache.intervals, &GroundTruth::new(), &cache.window, 0);
    let samples = slice_windows(&series, &sampling);
    let scores = predict_scores(&saved.params, &samples)?;
    let per_host = crate::eval::host_scores(&samples, &scores);
    Ok(series
        .iter()
        .map(|s| match per_host.get(&s.host) {
            Some(h) => HostVerdict {
                host: s.host.addr,
                windows: h.windows,
                max_score: Some(h.max),
                mean_score: Some(h.mean),
                verdict: if h.max >= threshold { "botnet" } else { "normal" },
            },
            None => HostVerdict {
                host: s.host.addr,
                windows: 0,
                max_score: None,
                mean_score: None,
                verdict: "insufficient data",
            },
        })
        .collect())
}

/// Classifies the hosts of a feature cache, events CSV or pcap file. Raw
/// captures are extracted first with `extract`.
pub fn cmd_predict(
    model: &Path,
    input: &Path,
    extract: &ExtractOptions,
    threshold: f64,
    out: &Path,
) -> Result<Vec<HostVerdict>> {
    let saved = load_model(model)?;
    let mut head = [0u8; 64];
    let n = File::open(input)
        .and_then(|mut f| f.read(&mut head))
        .map_err(|e| Error::io(input, e))?;
    let cache = if FeatureCache::sniff(&head[..n]) {
        FeatureCache::read(input)?
    } else {
        let window = saved.provenance.window.unwrap_or(extract.window);
        extract_file(input, GroundTruth::new(), &ExtractOptions { window, ..*extract })?.cache
    };
    let verdicts = predict_cache(&saved, &cache, threshold)?;
    let header = format!("# model={} input={} threshold={threshold}\n", model.display(), input.display());
    write_file(out, &verdicts_to_csv(&verdicts, &header))?;
    Ok(verdicts)
}

fn write_scenario(scenario: &Scenario, events_out: &Path, truth_out: &Path) -> Result<()> {
    let file = File::create(events_out).map_err(|e| Error::io(events_out, e))?;
    let mut w = BufWriter::new(file);
    write_events_csv(&mut w, &scenario.events)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(events_out, e))?;
    let mut buf = Vec::new();
    write_ground_truth(&mut buf, &scenario.truth).map_err(|e| Error::io(truth_out, e))?;
    fs::write(truth_out, buf).map_err(|e| Error::io(truth_out, e))
}

/// Generates one scenario into an events CSV and a ground-truth CSV.
pub fn cmd_synth(spec: &ScenarioSpec, events_out: &Path, truth_out: &Path) -> Result<Scenario> {
    let scenario = generate(spec)?;
    write_scenario(&scenario, events_out, truth_out)?;
    Ok(scenario)
}

/// Writes `<name>.spec`, `<name>.events.csv` and `<name>.truth.csv` for each
/// scenario of the default suite.
pub fn cmd_synth_suite(seed: u64, out_dir: &Path) -> Result<Vec<(ScenarioSpec, Scenario)>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    default_suite(seed)
        .into_iter()
        .map(|spec| {
            let scenario = generate(&spec)?;
            write_file(&out_dir.join(format!("{}.spec", spec.name)), &spec.to_config_string())?;
            write_scenario(
                &scenario,
                &out_dir.join(format!("{}.events.csv", spec.name)),
                &out_dir.join(format!("{}.truth.csv", spec.name)),
            )?;
            Ok((spec, scenario))
        })
        .collect()
}
