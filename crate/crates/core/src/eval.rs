//! Host-level splitting, confusion metrics, ROC analysis and the three
//! evaluation protocols (within, cross, combined).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{predict_scores, train, LstmParams, TrainConfig};
use crate::timeseries::{HostKey, WindowSample};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_fraction > 0.0 && self.train_fraction < 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )))
        }
    }

    /// `floor(train_fraction · n)`, tolerant of `0.7 · 10 = 6.999…`.
    pub fn train_count(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64) + 1e-9).floor() as usize
    }
}

/// Which hosts went to which side. A host is malicious if any of its windows is.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HostSplit {
    pub train: BTreeSet<HostKey>,
    pub test: BTreeSet<HostKey>,
    pub malicious: BTreeSet<HostKey>,
}

impl HostSplit {
    pub fn partition(&self, samples: &[WindowSample]) -> (Vec<WindowSample>, Vec<WindowSample>) {
        samples
            .iter()
            .filter(|s| self.train.contains(&s.host) || self.test.contains(&s.host))
            .cloned()
            .partition(|s| self.train.contains(&s.host))
    }

    /// `host,side,class` rows, hosts in key order within each side.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("host,side,class\n");
        for (side, hosts) in [("train", &self.train), ("test", &self.test)] {
            for h in hosts {
                let class = if self.malicious.contains(h) { "malicious" } else { "benign" };
                let _ = writeln!(out, "{h},{side},{class}");
            }
        }
        out
    }
}

pub fn host_classes(samples: &[WindowSample]) -> BTreeMap<HostKey, bool> {
    let mut classes = BTreeMap::new();
    for s in samples {
        *classes.entry(s.host).or_insert(false) |= s.label;
    }
    classes
}

/// Stratified host-level split: each class is shuffled independently and
/// its first `floor(f · n)` hosts go to training.
pub fn split(samples: &[WindowSample], cfg: &SplitConfig) -> Result<HostSplit> {
    cfg.validate()?;
    let classes = host_classes(samples);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = HostSplit::default();
    for (name, want) in [("malicious", true), ("benign", false)] {
        let mut hosts: Vec<HostKey> = classes.iter().filter(|(_, &m)| m == want).map(|(&h, _)| h).collect();
        if hosts.len() < 2 {
            return Err(Error::Split {
                class: name.into(),
                hosts: hosts.len(),
            });
        }
        hosts.shuffle(&mut rng);
        let k = cfg.train_count(hosts.len());
        out.train.extend(&hosts[..k]);
        out.test.extend(&hosts[k..]);
        if want {
            out.malicious.extend(&hosts);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// An exact count ratio; `den == 0` means undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn value(self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }
}

impl ConfusionCounts {
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        assert_eq!(scores.len(), labels.len());
        let mut c = Self::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn tpr_ratio(&self) -> Ratio {
        Ratio { num: self.tp, den: self.positives() }
    }

    pub fn fnr_ratio(&self) -> Ratio {
        Ratio { num: self.fn_, den: self.positives() }
    }

    pub fn tnr_ratio(&self) -> Ratio {
        Ratio { num: self.tn, den: self.negatives() }
    }

    pub fn fpr_ratio(&self) -> Ratio {
        Ratio { num: self.fp, den: self.negatives() }
    }

    pub fn precision_ratio(&self) -> Ratio {
        Ratio { num: self.tp, den: self.tp + self.fp }
    }

    pub fn accuracy_ratio(&self) -> Ratio {
        Ratio { num: self.tp + self.tn, den: self.total() }
    }
}

/// Rates are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let precision = c.precision_ratio().value();
    let recall = c.tpr_ratio().value();
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Metrics {
        accuracy: c.accuracy_ratio().value(),
        tpr: recall,
        tnr: c.tnr_ratio().value(),
        fpr: c.fpr_ratio().value(),
        fnr: c.fnr_ratio().value(),
        precision,
        recall,
        f_measure,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive; the origin uses `+inf`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auroc: f64,
    pub positives: u64,
    pub negatives: u64,
}

/// Sweeps every distinct score from high to low, moving tied scores as one
/// step, and integrates with the trapezoid rule. The area is accumulated in
/// integer half-units so it equals the normalized Mann-Whitney statistic.
pub fn roc(scored: &[(f64, bool)]) -> Result<RocCurve> {
    if let Some((s, _)) = scored.iter().find(|(s, _)| !s.is_finite()) {
        return Err(Error::Input(format!("non-finite score {s} in ROC input")));
    }
    let pos = scored.iter().filter(|(_, y)| *y).count() as u64;
    let neg = scored.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Input(format!(
            "ROC needs both classes, got {pos} positive and {neg} negative samples"
        )));
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += u128::from(fp - fp0) * u128::from(tp0 + tp);
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold,
        });
    }
    let auroc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve {
        points,
        auroc,
        positives: pos,
        negatives: neg,
    })
}

impl RocCurve {
    /// The point maximizing `tpr - fpr`; the highest threshold wins ties.
    pub fn youden(&self) -> RocPoint {
        let mut best = self.points[0];
        for p in &self.points[1..] {
            if p.tpr - p.fpr > best.tpr - best.fpr {
                best = *p;
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold);
        }
        out
    }

    /// A plain line plot with the chance diagonal.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 400.0;
        const PAD: f64 = 50.0;
        let x = |f: f64| PAD + f * SIZE;
        let y = |t: f64| PAD + (1.0 - t) * SIZE;
        let mut path = String::new();
        for p in &self.points {
            let _ = write!(path, "{:.2},{:.2} ", x(p.fpr), y(p.tpr));
        }
        let full = SIZE + 2.0 * PAD;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
        );
        let _ = writeln!(svg, r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="white" stroke="black"/>"#);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
            x(0.0),
            y(0.0),
            x(1.0),
            y(1.0)
        );
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, path.trim_end());
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{} (AUROC {:.4})</text>"#,
            full / 2.0,
            PAD / 2.0,
            xml_escape(title),
            self.auroc
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">false positive rate</text>"#,
            full / 2.0,
            full - PAD / 3.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 {} {})">true positive rate</text>"#,
            PAD / 3.0,
            full / 2.0,
            PAD / 3.0,
            full / 2.0
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Per-host summary of window scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostScore {
    pub max: f64,
    pub mean: f64,
    pub windows: usize,
    pub malicious: bool,
}

pub fn host_scores(samples: &[WindowSample], scores: &[f64]) -> BTreeMap<HostKey, HostScore> {
    let mut acc: BTreeMap<HostKey, (f64, f64, usize, bool)> = BTreeMap::new();
    for (s, &score) in samples.iter().zip(scores) {
        let e = acc.entry(s.host).or_insert((f64::NEG_INFINITY, 0.0, 0, false));
        e.0 = e.0.max(score);
        e.1 += score;
        e.2 += 1;
        e.3 |= s.label;
    }
    acc.into_iter()
        .map(|(h, (max, sum, n, malicious))| {
            (
                h,
                HostScore {
                    max,
                    mean: sum / n as f64,
                    windows: n,
                    malicious,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Within,
    Cross,
    Combined,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Within => "within",
            EvalMode::Cross => "cross",
            EvalMode::Combined => "combined",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "within" => Ok(EvalMode::Within),
            "cross" => Ok(EvalMode::Cross),
            "combined" => Ok(EvalMode::Combined),
            other => Err(Error::Config(format!(
                "unknown evaluation mode {other:?} (expected within, cross or combined)"
            ))),
        }
    }
}

/// A named collection of labeled windows, e.g. one capture after sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<WindowSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalConfig {
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub threshold: Option<f64>,
}

impl EvalConfig {
    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(DEFAULT_THRESHOLD)
    }
}

/// Threshold-dependent results at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    /// Malicious test hosts with at least one window at or above the threshold.
    pub bots_flagged: usize,
    pub bots_total: usize,
    pub benign_hosts_flagged: usize,
    pub benign_hosts_total: usize,
}

impl OperatingPoint {
    fn at(threshold: f64, scores: &[f64], labels: &[bool], hosts: &BTreeMap<HostKey, HostScore>) -> Self {
        let counts = ConfusionCounts::from_scores(scores, labels, threshold);
        let count = |malicious: bool, flagged: bool| {
            hosts
                .values()
                .filter(|h| h.malicious == malicious && (!flagged || h.max >= threshold))
                .count()
        };
        Self {
            threshold,
            counts,
            metrics: metrics(&counts),
            bots_flagged: count(true, true),
            bots_total: count(true, false),
            benign_hosts_flagged: count(false, true),
            benign_hosts_total: count(false, false),
        }
    }
}

/// One train/test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: EvalMode,
    pub train_on: String,
    pub test_on: String,
    pub train_windows: usize,
    pub test_windows: usize,
    pub test_positive_windows: usize,
    pub test_negative_windows: usize,
    /// Training and test sets coincide, so the scores are optimistic.
    pub leakage: bool,
    pub final_train_loss: Option<f64>,
    pub auroc: f64,
    pub at_threshold: OperatingPoint,
    pub at_youden: OperatingPoint,
    #[serde(skip)]
    pub roc: Option<RocCurve>,
}

impl RunReport {
    /// Scores a trained model on `test` and summarizes.
    pub fn score(
        mode: EvalMode,
        train_on: &str,
        test_on: &str,
        params: &LstmParams,
        train_windows: usize,
        test: &[WindowSample],
        threshold: f64,
    ) -> Result<Self> {
        let scores = predict_scores(params, test)?;
        let labels: Vec<bool> = test.iter().map(|s| s.label).collect();
        let pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
        let curve = roc(&pairs).map_err(|e| match e {
            Error::Input(m) => Error::Input(format!("test set {test_on}: {m}")),
            other => other,
        })?;
        let hosts = host_scores(test, &scores);
        let youden = curve.youden();
        let positives = labels.iter().filter(|&&l| l).count();
        Ok(Self {
            mode,
            train_on: train_on.into(),
            test_on: test_on.into(),
            train_windows,
            test_windows: test.len(),
            test_positive_windows: positives,
            test_negative_windows: test.len() - positives,
            leakage: false,
            final_train_loss: None,
            auroc: curve.auroc,
            at_threshold: OperatingPoint::at(threshold, &scores, &labels, &hosts),
            at_youden: OperatingPoint::at(youden.threshold, &scores, &labels, &hosts),
            roc: Some(curve),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[{}] train={} test={}", self.mode, self.train_on, self.test_on);
        if self.leakage {
            let _ = writeln!(s, "  WARNING: training and test data are identical; scores are optimistic");
        }
        let _ = writeln!(
            s,
            "  windows: train {} / test {} ({} malicious, {} benign, ratio 1:{:.2})",
            self.train_windows,
            self.test_windows,
            self.test_positive_windows,
            self.test_negative_windows,
            self.test_negative_windows as f64 / self.test_positive_windows.max(1) as f64
        );
        if let Some(l) = self.final_train_loss {
            let _ = writeln!(s, "  final training loss: {l:.6}");
        }
        let _ = writeln!(s, "  AUROC: {:.6}", self.auroc);
        for (label, op) in [("threshold", &self.at_threshold), ("Youden-optimal threshold", &self.at_youden)] {
            let m = &op.metrics;
            let _ = writeln!(s, "  at {label} {:.6}:", op.threshold);
            let c = &op.counts;
            let _ = writeln!(s, "    tp={} tn={} fp={} fn={}", c.tp, c.tn, c.fp, c.fn_);
            let _ = writeln!(
                s,
                "    accuracy={} tpr={} tnr={} fpr={} fnr={}",
                fmt_opt(m.accuracy),
                fmt_opt(m.tpr),
                fmt_opt(m.tnr),
                fmt_opt(m.fpr),
                fmt_opt(m.fnr)
            );
            let _ = writeln!(
                s,
                "    precision={} recall={} f_measure={}",
                fmt_opt(m.precision),
                fmt_opt(m.recall),
                fmt_opt(m.f_measure)
            );
            let _ = writeln!(
                s,
                "    hosts flagged: {}/{} malicious, {}/{} benign",
                op.bots_flagged, op.bots_total, op.benign_hosts_flagged, op.benign_hosts_total
            );
        }
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

/// Cross-mode AUROCs, rows = training collection, columns = test collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AurocMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl AurocMatrix {
    /// Mean over training collections for each test collection.
    pub fn test_averages(&self) -> Vec<f64> {
        let n = self.names.len();
        (0..n)
            .map(|j| self.values.iter().map(|row| row[j]).sum::<f64>() / n as f64)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("train\\test");
        for n in &self.names {
            let _ = write!(s, ",{n}");
        }
        s.push('\n');
        for (name, row) in self.names.iter().zip(&self.values) {
            s.push_str(name);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s.push_str("avg");
        for v in self.test_averages() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub runs: Vec<RunReport>,
    pub matrix: Option<AurocMatrix>,
    /// Host assignment for each run that used a split, keyed like `runs`.
    pub splits: Vec<Option<HostSplit>>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            s.push_str(&r.to_text());
        }
        if let Some(m) = &self.matrix {
            let _ = writeln!(s, "AUROC matrix (rows: train, columns: test; avg over rows per test collection)");
            s.push_str(&m.to_csv());
        }
        s
    }

    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            s.push_str(&r.to_json());
            s.push('\n');
        }
        if let Some(m) = &self.matrix {
            s.push_str(&serde_json::to_string(m).expect("matrix serializes"));
            s.push('\n');
        }
        s
    }
}

fn train_split(
    mode: EvalMode,
    name: &str,
    samples: &[WindowSample],
    cfg: &EvalConfig,
) -> Result<(RunReport, HostSplit)> {
    let host_split = split(samples, &cfg.split).map_err(|e| match e {
        Error::Split { class, hosts } => Error::Split {
            class: format!("{class} ({name})"),
            hosts,
        },
        other => other,
    })?;
    let (train_set, test_set) = host_split.partition(samples);
    let outcome = train(&train_set, &cfg.train)?;
    let mut report = RunReport::score(
        mode,
        name,
        name,
        &outcome.params,
        train_set.len(),
        &test_set,
        cfg.threshold(),
    )?;
    report.final_train_loss = outcome.loss_history.last().copied();
    Ok((report, host_split))
}

/// Runs one protocol. `within` splits each collection on its own, `cross`
/// trains on all of one collection and tests on all of each collection
/// (including itself, flagged as leakage), `combined` pools then splits.
pub fn evaluate_modes(datasets: &[Dataset], mode: EvalMode, cfg: &EvalConfig) -> Result<EvalReport> {
    if datasets.is_empty() {
        return Err(Error::Input("no datasets to evaluate".into()));
    }
    cfg.split.validate()?;
    cfg.train.validate()?;
    match mode {
        EvalMode::Within => {
            let results: Vec<_> = datasets
                .par_iter()
                .map(|d| train_split(mode, &d.name, &d.samples, cfg))
                .collect::<Result<_>>()?;
            let (runs, splits) = results.into_iter().map(|(r, s)| (r, Some(s))).unzip();
            Ok(EvalReport {
                mode,
                runs,
                matrix: None,
                splits,
            })
        }
        EvalMode::Combined => {
            let name = datasets.iter().map(|d| d.name.as_str()).collect::<Vec<_>>().join("+");
            let pooled: Vec<WindowSample> = datasets.iter().flat_map(|d| d.samples.iter().cloned()).collect();
            let (run, host_split) = train_split(mode, &name, &pooled, cfg)?;
            Ok(EvalReport {
                mode,
                runs: vec![run],
                matrix: None,
                splits: vec![Some(host_split)],
            })
        }
        EvalMode::Cross => {
            if datasets.len() < 2 {
                return Err(Error::Input("cross mode needs at least two datasets".into()));
            }
            let models: Vec<_> = datasets
                .par_iter()
                .map(|d| train(&d.samples, &cfg.train).map_err(|e| annotate(e, &d.name)))
                .collect::<Result<_>>()?;
            let pairs: Vec<(usize, usize)> = (0..datasets.len())
                .flat_map(|i| (0..datasets.len()).map(move |j| (i, j)))
                .collect();
            let runs: Vec<RunReport> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    let mut r = RunReport::score(
                        mode,
                        &datasets[i].name,
                        &datasets[j].name,
                        &models[i].params,
                        datasets[i].samples.len(),
                        &datasets[j].samples,
                        cfg.threshold(),
                    )?;
                    r.leakage = i == j;
                    r.final_train_loss = models[i].loss_history.last().copied();
                    Ok(r)
                })
                .collect::<Result<_>>()?;
            let n = datasets.len();
            let matrix = AurocMatrix {
                names: datasets.iter().map(|d| d.name.clone()).collect(),
                values: runs.chunks(n).map(|row| row.iter().map(|r| r.auroc).collect()).collect(),
            };
            let splits = vec![None; runs.len()];
            Ok(EvalReport {
                mode,
                runs,
                matrix: Some(matrix),
                splits,
            })
        }
    }
}

fn annotate(e: Error, name: &str) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{name}: {m}")),
        other => other,
    }
}
