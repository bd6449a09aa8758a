//! Per-host feature sequences and fixed-length labeled training windows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::Ipv4Addr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphfeat::{FeatureVector, FEATURE_COUNT};
use crate::ingest::GroundTruth;
use crate::windowing::WindowConfig;

/// A host within a named collection; the same address in two captures is two hosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HostKey {
    pub dataset: u32,
    pub addr: Ipv4Addr,
}

impl HostKey {
    pub fn new(dataset: u32, addr: Ipv4Addr) -> Self {
        Self { dataset, addr }
    }
}

impl fmt::Display for HostKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.dataset, self.addr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTimeSeries {
    pub host: HostKey,
    /// One entry per interval of the capture; [`FeatureVector::ZERO`] where the host was silent.
    pub sequence: Vec<FeatureVector>,
    pub labels: Vec<bool>,
}

impl NodeTimeSeries {
    pub fn is_malicious(&self) -> bool {
        self.labels.iter().any(|&l| l)
    }
}

/// One `slice_len × 10` training or scoring unit.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub host: HostKey,
    pub start_interval: usize,
    pub matrix: Vec<[f64; FEATURE_COUNT]>,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub neg_pos_ratio: usize,
    pub slice_len: usize,
    pub slice_overlap: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            neg_pos_ratio: 10,
            slice_len: 5,
            slice_overlap: 2,
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neg_pos_ratio == 0 || self.slice_len == 0 || self.slice_overlap >= self.slice_len {
            return Err(Error::Config(format!(
                "sampling ratio {} / slice {} / overlap {}: need ratio > 0 and overlap < slice",
                self.neg_pos_ratio, self.slice_len, self.slice_overlap
            )));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.slice_len - self.slice_overlap
    }

    /// Windows produced by a sequence of `len` intervals.
    pub fn windows_for(&self, len: usize) -> usize {
        if len < self.slice_len {
            0
        } else {
            (len - self.slice_len) / self.stride() + 1
        }
    }
}

/// Builds one zero-padded series per host ever seen, labeled per interval start.
pub fn assemble(
    intervals: &[BTreeMap<Ipv4Addr, FeatureVector>],
    truth: &GroundTruth,
    window: &WindowConfig,
    dataset: u32,
) -> Vec<NodeTimeSeries> {
    let hosts: BTreeSet<Ipv4Addr> = intervals.iter().flat_map(|m| m.keys().copied()).collect();
    let starts: Vec<f64> = (0..intervals.len()).map(|i| window.start_of(i)).collect();
    hosts
        .into_iter()
        .map(|addr| NodeTimeSeries {
            host: HostKey::new(dataset, addr),
            sequence: intervals
                .iter()
                .map(|m| m.get(&addr).copied().unwrap_or(FeatureVector::ZERO))
                .collect(),
            labels: starts.iter().map(|&s| truth.is_malicious_at(addr, s)).collect(),
        })
        .collect()
}

/// Keeps every malicious host and at most `neg_pos_ratio` benign hosts per
/// malicious one, drawn uniformly without replacement. Input order is kept.
pub fn undersample(series: Vec<NodeTimeSeries>, cfg: &SamplingConfig) -> Result<Vec<NodeTimeSeries>> {
    cfg.validate()?;
    let malicious = series.iter().filter(|s| s.is_malicious()).count();
    if malicious == 0 {
        return Err(Error::Config(
            "no malicious hosts to undersample against; disable undersampling for this input".into(),
        ));
    }
    let benign: Vec<usize> = (0..series.len()).filter(|&i| !series[i].is_malicious()).collect();
    let keep = benign.len().min(cfg.neg_pos_ratio * malicious);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chosen: BTreeSet<usize> = rand::seq::index::sample(&mut rng, benign.len(), keep)
        .into_iter()
        .map(|k| benign[k])
        .collect();
    Ok(series
        .into_iter()
        .enumerate()
        .filter(|(i, s)| s.is_malicious() || chosen.contains(i))
        .map(|(_, s)| s)
        .collect())
}

/// Cuts each series into windows starting at `0, stride, 2·stride, ...`;
/// a trailing remainder shorter than `slice_len` is dropped. A window is
/// positive iff the host is malicious in any interval it covers.
pub fn slice_windows(series: &[NodeTimeSeries], cfg: &SamplingConfig) -> Vec<WindowSample> {
    let stride = cfg.stride();
    let mut out = Vec::new();
    for s in series {
        for w in 0..cfg.windows_for(s.sequence.len()) {
            let start = w * stride;
            let range = start..start + cfg.slice_len;
            out.push(WindowSample {
                host: s.host,
                start_interval: start,
                matrix: s.sequence[range.clone()].iter().map(|v| v.0).collect(),
                label: s.labels[range].iter().any(|&l| l),
            });
        }
    }
    out
}

/// Debug dump: `host,start_interval,label,m00..m49` (row-major).
pub fn windows_to_csv(samples: &[WindowSample]) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("host,start_interval,label");
    let cells = samples.first().map_or(5 * FEATURE_COUNT, |w| w.matrix.len() * FEATURE_COUNT);
    for k in 0..cells {
        let _ = write!(s, ",m{k:02}");
    }
    s.push('\n');
    for w in samples {
        let _ = write!(s, "{},{},{}", w.host, w.start_interval, u8::from(w.label));
        for row in &w.matrix {
            for x in row {
                let _ = write!(s, ",{x}");
            }
        }
        s.push('\n');
    }
    s
}
