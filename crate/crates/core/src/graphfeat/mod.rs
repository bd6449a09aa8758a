//! Per-interval communication graphs and the ten per-node graph features.
//!
//! Feature order is fixed and shared by every downstream consumer:
//! out-degree, in-degree, out-neighbors, in-neighbors, PageRank,
//! betweenness, eigenvector, authority, hub, local clustering.
//!
//! Path-based features (betweenness, clustering, neighbor counts) use the
//! simple digraph underneath the interval graph. Spectral features and
//! degrees use packet multiplicity as weight. Both graph modes therefore
//! compute the same features; weighted mode just stores fewer edges.

mod betweenness;
mod clustering;
mod degree;
mod graph;
mod pagerank;
mod pool;
mod spectral;

use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use betweenness::betweenness;
pub use clustering::clustering_coeff;
pub use degree::{degree_features, DegreeFeatures};
pub use graph::{build_graph, GraphMode, IntervalGraph};
pub use pagerank::pagerank;
pub use pool::{extract_intervals, ExtractionOutput, IntervalTiming};
pub use spectral::{eigenvector, eigenvector_hits, hits, HitsScores, PowerScores, SpectralScores};

use crate::error::{Error, Result};
use crate::windowing::Interval;

pub const FEATURE_COUNT: usize = 10;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "out_degree",
    "in_degree",
    "out_neighbors",
    "in_neighbors",
    "pagerank",
    "betweenness",
    "eigenvector",
    "authority",
    "hub",
    "clustering",
];

pub const NORM_LOW: f64 = 0.05;
pub const NORM_HIGH: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    /// PageRank only.
    pub damping: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iters: 10_000,
            damping: 0.85,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Config(format!("damping {} must lie in (0, 1)", self.damping)));
        }
        Ok(())
    }
}

/// Ten features for one node in one interval. Normalized vectors lie in
/// `[0.05, 0.95]`; the all-zero vector marks an interval where the host was silent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub const ZERO: FeatureVector = FeatureVector([0.0; FEATURE_COUNT]);

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

/// Unnormalized per-node features, indexed like the graph's nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawFeatures {
    pub rows: Vec<[f64; FEATURE_COUNT]>,
    pub eigenvector_degenerate: bool,
    pub hits_degenerate: bool,
}

/// Columns whose spread is below this fraction of their magnitude count as
/// constant. Such a spread is rounding noise from the iterative features, and
/// scaling it up would make the result depend on summation order.
pub const CONSTANT_SPREAD: f64 = 1e-10;

/// `0.05 + 0.9 (f - min) / (max - min)` per feature column; a constant column
/// maps to 0.05 and the column maximum maps to exactly 0.95.
pub fn normalize(rows: &[[f64; FEATURE_COUNT]]) -> Vec<FeatureVector> {
    let mut lo = [f64::INFINITY; FEATURE_COUNT];
    let mut hi = [f64::NEG_INFINITY; FEATURE_COUNT];
    for row in rows {
        for k in 0..FEATURE_COUNT {
            lo[k] = lo[k].min(row[k]);
            hi[k] = hi[k].max(row[k]);
        }
    }
    rows.iter()
        .map(|row| {
            let mut out = [NORM_LOW; FEATURE_COUNT];
            for k in 0..FEATURE_COUNT {
                let span = hi[k] - lo[k];
                if span <= CONSTANT_SPREAD * lo[k].abs().max(hi[k].abs()) {
                    continue;
                }
                out[k] = if row[k] == hi[k] {
                    NORM_HIGH
                } else {
                    let scaled = NORM_LOW + (NORM_HIGH - NORM_LOW) * (row[k] - lo[k]) / span;
                    scaled.clamp(NORM_LOW, NORM_HIGH)
                };
            }
            FeatureVector(out)
        })
        .collect()
}

/// Wall time spent per feature family on one interval.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureTiming {
    pub build: Duration,
    pub degree: Duration,
    pub pagerank: Duration,
    pub betweenness: Duration,
    pub eigenvector: Duration,
    pub hits: Duration,
    pub clustering: Duration,
    pub normalize: Duration,
}

impl FeatureTiming {
    pub const COLUMNS: [&'static str; 8] = [
        "build", "degree", "pagerank", "betweenness", "eigenvector", "hits", "clustering", "normalize",
    ];

    pub fn as_array(&self) -> [Duration; 8] {
        [
            self.build,
            self.degree,
            self.pagerank,
            self.betweenness,
            self.eigenvector,
            self.hits,
            self.clustering,
            self.normalize,
        ]
    }

    pub fn total(&self) -> Duration {
        self.as_array().iter().sum()
    }

    pub fn add(&mut self, other: &FeatureTiming) {
        self.build += other.build;
        self.degree += other.degree;
        self.pagerank += other.pagerank;
        self.betweenness += other.betweenness;
        self.eigenvector += other.eigenvector;
        self.hits += other.hits;
        self.clustering += other.clustering;
        self.normalize += other.normalize;
    }
}

/// Normalized features of every node active in one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFeatures {
    pub index: usize,
    pub features: BTreeMap<Ipv4Addr, FeatureVector>,
    pub eigenvector_degenerate: bool,
    pub hits_degenerate: bool,
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

/// All ten raw features of every node of `g`.
pub fn raw_features(g: &IntervalGraph, cfg: &ConvergenceConfig) -> Result<RawFeatures> {
    raw_features_timed(g, cfg, &mut FeatureTiming::default())
}

fn raw_features_timed(
    g: &IntervalGraph,
    cfg: &ConvergenceConfig,
    timing: &mut FeatureTiming,
) -> Result<RawFeatures> {
    let degree = timed(&mut timing.degree, || degree_features(g));
    let pr = timed(&mut timing.pagerank, || pagerank(g, cfg))?;
    let btw = timed(&mut timing.betweenness, || betweenness(g));
    let eig = timed(&mut timing.eigenvector, || eigenvector(g, cfg))?;
    let hit = timed(&mut timing.hits, || hits(g, cfg))?;
    let clu = timed(&mut timing.clustering, || clustering_coeff(g));
    let rows = (0..g.node_count())
        .map(|v| {
            let d = degree[v];
            [
                d.out_degree as f64,
                d.in_degree as f64,
                d.out_neighbors as f64,
                d.in_neighbors as f64,
                pr[v],
                btw[v],
                eig.scores[v],
                hit.authority[v],
                hit.hub[v],
                clu[v],
            ]
        })
        .collect();
    Ok(RawFeatures {
        rows,
        eigenvector_degenerate: eig.degenerate,
        hits_degenerate: hit.degenerate,
    })
}

/// Graph construction, all features, then per-interval normalization.
pub fn extract_interval(
    interval: &Interval,
    mode: GraphMode,
    cfg: &ConvergenceConfig,
) -> Result<IntervalFeatures> {
    extract_interval_timed(interval, mode, cfg).map(|(f, _)| f)
}

pub fn extract_interval_timed(
    interval: &Interval,
    mode: GraphMode,
    cfg: &ConvergenceConfig,
) -> Result<(IntervalFeatures, FeatureTiming)> {
    let mut timing = FeatureTiming::default();
    let g = timed(&mut timing.build, || build_graph(interval, mode));
    let raw = raw_features_timed(&g, cfg, &mut timing).map_err(|e| e.in_interval(interval.index))?;
    let normalized = timed(&mut timing.normalize, || normalize(&raw.rows));
    let features = g.nodes().iter().copied().zip(normalized).collect();
    Ok((
        IntervalFeatures {
            index: interval.index,
            features,
            eigenvector_degenerate: raw.eigenvector_degenerate,
            hits_degenerate: raw.hits_degenerate,
        },
        timing,
    ))
}
