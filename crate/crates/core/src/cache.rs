//! Feature cache: the artifact between extraction and training.
//!
//! ```text
//! # botgraph feature cache v1
//! # window_s=300
//! # ...
//! # truth=10.0.0.7 0
//! interval_index,node,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10
//! 0,10.0.0.1,0.05,0.95,...
//! ```
//!
//! Feature values carry 9 significant digits. Header comments record the
//! configuration that produced the file and the ground truth it was labeled with.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::net::Ipv4Addr;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graphfeat::{
    ConvergenceConfig, ExtractionOutput, FeatureVector, GraphMode, FEATURE_COUNT, FEATURE_NAMES,
};
use crate::ingest::{CaptureMeta, GroundTruth};
use crate::windowing::WindowConfig;

const MAGIC: &str = "# botgraph feature cache v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub window: WindowConfig,
    pub convergence: ConvergenceConfig,
    pub mode: GraphMode,
    pub meta: CaptureMeta,
    pub truth: GroundTruth,
    /// One map per interval index, `0..interval_count`.
    pub intervals: Vec<BTreeMap<Ipv4Addr, FeatureVector>>,
    pub eigenvector_degenerate: Vec<usize>,
    pub hits_degenerate: Vec<usize>,
}

/// Formats `x` with 9 significant digits in plain decimal notation.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

impl FeatureCache {
    pub fn from_extraction(
        output: &ExtractionOutput,
        window: WindowConfig,
        convergence: ConvergenceConfig,
        mode: GraphMode,
        meta: CaptureMeta,
        truth: GroundTruth,
    ) -> Self {
        let mut intervals = vec![BTreeMap::new(); output.intervals.len()];
        let mut eig = Vec::new();
        let mut hits = Vec::new();
        for f in &output.intervals {
            intervals[f.index] = f.features.clone();
            if f.eigenvector_degenerate {
                eig.push(f.index);
            }
            if f.hits_degenerate {
                hits.push(f.index);
            }
        }
        Self {
            window,
            convergence,
            mode,
            meta,
            truth,
            intervals,
            eigenvector_degenerate: eig,
            hits_degenerate: hits,
        }
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    /// Values as stored on disk, i.e. rounded to 9 significant digits.
    pub fn rounded(&self) -> Self {
        let mut out = self.clone();
        for map in out.intervals.iter_mut() {
            for v in map.values_mut() {
                for x in v.0.iter_mut() {
                    *x = format_sig9(*x).parse().expect("formatted float");
                }
            }
        }
        out
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "# window_s={}", self.window.window_s);
        let _ = writeln!(s, "# step_s={}", self.window.step_s);
        let _ = writeln!(s, "# graph_mode={}", self.mode.as_str());
        let _ = writeln!(s, "# epsilon={}", self.convergence.epsilon);
        let _ = writeln!(s, "# max_iters={}", self.convergence.max_iters);
        let _ = writeln!(s, "# damping={}", self.convergence.damping);
        let _ = writeln!(s, "# duration_s={}", self.meta.duration_s);
        let _ = writeln!(s, "# event_count={}", self.meta.event_count);
        let _ = writeln!(s, "# host_count={}", self.meta.host_count);
        let _ = writeln!(s, "# interval_count={}", self.interval_count());
        let _ = writeln!(s, "# eigenvector_degenerate={}", join(&self.eigenvector_degenerate));
        let _ = writeln!(s, "# hits_degenerate={}", join(&self.hits_degenerate));
        let _ = writeln!(s, "# features={}", FEATURE_NAMES.join(","));
        for (host, t) in self.truth.iter() {
            let _ = writeln!(s, "# truth={host} {t}");
        }
        s.push_str("interval_index,node");
        for k in 1..=FEATURE_COUNT {
            let _ = write!(s, ",f{k}");
        }
        s.push('\n');
        for (index, map) in self.intervals.iter().enumerate() {
            for (host, v) in map {
                let _ = write!(s, "{index},{host}");
                for x in v.0 {
                    let _ = write!(s, ",{}", format_sig9(x));
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    /// Whether `head` looks like the start of a feature cache file.
    pub fn sniff(head: &[u8]) -> bool {
        head.starts_with(MAGIC.as_bytes())
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let mut truth = GroundTruth::new();
        let mut rows: Vec<(usize, Ipv4Addr, FeatureVector)> = Vec::new();
        let mut saw_magic = false;
        let mut saw_columns = false;

        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let n = i as u64 + 1;
            let line = line.map_err(|e| Error::parse(n, e.to_string()))?;
            let line = line.trim_end();
            if n == 1 {
                if line != MAGIC {
                    return Err(Error::parse(n, "not a feature cache (missing magic line)"));
                }
                saw_magic = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix("# ") {
                let (key, value) = comment
                    .split_once('=')
                    .ok_or_else(|| Error::parse(n, "header comment without key=value"))?;
                if key == "truth" {
                    let (host, t) = value
                        .split_once(' ')
                        .ok_or_else(|| Error::parse(n, "truth entry needs host and time"))?;
                    let host = host.parse().map_err(|_| Error::parse(n, format!("bad host {host:?}")))?;
                    let t = t.parse().map_err(|_| Error::parse(n, format!("bad time {t:?}")))?;
                    truth.insert(host, t)?;
                } else {
                    header.insert(key.to_string(), value.to_string());
                }
                continue;
            }
            if !saw_columns {
                if !line.starts_with("interval_index,node") {
                    return Err(Error::parse(n, "missing column header"));
                }
                saw_columns = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 + FEATURE_COUNT {
                return Err(Error::parse(
                    n,
                    format!("expected {} fields, found {}", 2 + FEATURE_COUNT, fields.len()),
                ));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(n, format!("bad interval index {:?}", fields[0])))?;
            let host: Ipv4Addr = fields[1]
                .parse()
                .map_err(|_| Error::parse(n, format!("bad host {:?}", fields[1])))?;
            let mut v = [0.0; FEATURE_COUNT];
            for (k, f) in fields[2..].iter().enumerate() {
                v[k] = f
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| Error::parse(n, format!("bad feature value {f:?}")))?;
            }
            rows.push((index, host, FeatureVector(v)));
        }
        if !saw_magic {
            return Err(Error::parse(1, "empty feature cache"));
        }

        let get = |key: &str| -> Result<&String> {
            header
                .get(key)
                .ok_or_else(|| Error::Input(format!("feature cache header lacks {key}")))
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Input(format!("feature cache header {key}={v:?} is invalid")))
        }
        let indices = |key: &str| -> Result<Vec<usize>> {
            get(key)?.split_whitespace().map(|t| num(key, t)).collect()
        };

        let window = WindowConfig::new(num("window_s", get("window_s")?)?, num("step_s", get("step_s")?)?)?;
        let convergence = ConvergenceConfig {
            epsilon: num("epsilon", get("epsilon")?)?,
            max_iters: num("max_iters", get("max_iters")?)?,
            damping: num("damping", get("damping")?)?,
        };
        let mode: GraphMode = get("graph_mode")?.parse().map_err(Error::Input)?;
        let meta = CaptureMeta {
            duration_s: num("duration_s", get("duration_s")?)?,
            event_count: num("event_count", get("event_count")?)?,
            host_count: num("host_count", get("host_count")?)?,
        };
        let count: usize = num("interval_count", get("interval_count")?)?;
        let mut intervals = vec![BTreeMap::new(); count];
        for (index, host, v) in rows {
            let slot = intervals
                .get_mut(index)
                .ok_or_else(|| Error::Input(format!("interval {index} out of range 0..{count}")))?;
            if slot.insert(host, v).is_some() {
                return Err(Error::Input(format!("duplicate row for {host} in interval {index}")));
            }
        }
        Ok(Self {
            window,
            convergence,
            mode,
            meta,
            truth,
            intervals,
            eigenvector_degenerate: indices("eigenvector_degenerate")?,
            hits_degenerate: indices("hits_degenerate")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.5), "0.500000000");
        assert_eq!(format_sig9(0.05), "0.0500000000");
        assert_eq!(format_sig9(0.123456789123), "0.123456789");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1234.5), "1234.50000");
    }

    fn sample() -> FeatureCache {
        let mut a = BTreeMap::new();
        a.insert(Ipv4Addr::new(10, 0, 0, 1), FeatureVector([0.05, 0.95, 0.5, 0.1234567891, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8]));
        let truth: GroundTruth = [(Ipv4Addr::new(10, 0, 0, 1), 150.0)].into_iter().collect();
        FeatureCache {
            window: WindowConfig::default(),
            convergence: ConvergenceConfig::default(),
            mode: GraphMode::Weighted,
            meta: CaptureMeta { duration_s: 400.5, event_count: 3, host_count: 2 },
            truth,
            intervals: vec![a, BTreeMap::new()],
            eigenvector_degenerate: vec![0, 1],
            hits_degenerate: vec![],
        }
    }

    #[test]
    fn reparse_equals_rounded_cache() {
        let cache = sample();
        let back = FeatureCache::parse(cache.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, cache.rounded());
        assert_eq!(back.to_csv_string(), cache.to_csv_string());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(FeatureCache::parse("timestamp,src,dst,size_bytes\n".as_bytes()).is_err());
        let text = sample().to_csv_string().replace("# interval_count=2", "# interval_count=0");
        assert!(FeatureCache::parse(text.as_bytes()).is_err());
    }
}
