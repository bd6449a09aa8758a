use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csv_events::{parse_host, parse_timestamp};
use crate::error::{Error, Result};

/// Infected hosts and the time (seconds since capture start) they became infected.
/// Hosts not listed are benign.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    entries: BTreeMap<Ipv4Addr, f64>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, host: Ipv4Addr, infection_time_s: f64) -> Result<()> {
        if !(infection_time_s.is_finite() && infection_time_s >= 0.0) {
            return Err(Error::Input(format!(
                "infection time {infection_time_s} for {host} must be finite and non-negative"
            )));
        }
        if self.entries.insert(host, infection_time_s).is_some() {
            return Err(Error::DuplicateHost(host));
        }
        Ok(())
    }

    pub fn infection_time(&self, host: Ipv4Addr) -> Option<f64> {
        self.entries.get(&host).copied()
    }

    /// A host is malicious in an interval iff it was infected at or before the interval start.
    pub fn is_malicious_at(&self, host: Ipv4Addr, interval_start_s: f64) -> bool {
        self.infection_time(host)
            .is_some_and(|t| t <= interval_start_s)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ipv4Addr, f64)> + '_ {
        self.entries.iter().map(|(h, t)| (*h, *t))
    }

    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut truth = GroundTruth::new();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| {
                Error::parse(e.position().map_or(0, |p| p.line()), e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if i == 0 && record.iter().eq(["host", "infection_time_s"]) {
                continue;
            }
            if record.len() != 2 {
                return Err(Error::parse(
                    line,
                    format!("expected 2 fields, found {}", record.len()),
                ));
            }
            let host = parse_host(&record[0]).map_err(|m| Error::parse(line, m))?;
            let t = parse_timestamp(&record[1]).map_err(|m| Error::parse(line, m))?;
            truth.insert(host, t)?;
        }
        Ok(truth)
    }
}

impl FromIterator<(Ipv4Addr, f64)> for GroundTruth {
    /// Later duplicates overwrite earlier ones; use [`GroundTruth::insert`] to detect them.
    fn from_iter<I: IntoIterator<Item = (Ipv4Addr, f64)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    GroundTruth::parse(BufReader::new(file))
}

pub fn write_ground_truth<W: Write>(mut out: W, truth: &GroundTruth) -> std::io::Result<()> {
    writeln!(out, "host,infection_time_s")?;
    for (host, t) in truth.iter() {
        writeln!(out, "{host},{t}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_entry() {
        let truth = GroundTruth::parse("10.0.0.9,0\n".as_bytes()).unwrap();
        assert_eq!(truth.infection_time("10.0.0.9".parse().unwrap()), Some(0.0));
        assert_eq!(truth.len(), 1);
    }

    #[test]
    fn duplicate_host_is_rejected() {
        let err = GroundTruth::parse("10.0.0.9,0\n10.0.0.9,5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateHost(h) if h == Ipv4Addr::new(10, 0, 0, 9)));
    }

    #[test]
    fn empty_file_means_all_benign() {
        let truth = GroundTruth::parse("".as_bytes()).unwrap();
        assert!(truth.is_empty());
        assert!(!truth.is_malicious_at("10.0.0.1".parse().unwrap(), 1e9));
    }

    #[test]
    fn interval_start_rule() {
        let host: Ipv4Addr = "10.0.0.5".parse().unwrap();
        let truth: GroundTruth = [(host, 400.0)].into_iter().collect();
        assert!(!truth.is_malicious_at(host, 300.0));
        assert!(truth.is_malicious_at(host, 400.0));
        assert!(truth.is_malicious_at(host, 450.0));
    }

    #[test]
    fn malformed_line_is_reported() {
        let err = GroundTruth::parse("host,infection_time_s\n10.0.0.1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }
}
