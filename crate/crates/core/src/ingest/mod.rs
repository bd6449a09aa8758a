//! Traffic ingestion.
//!
//! Every input format is normalized into one ordered stream of
//! [`PacketEvent`]s: a timestamped, directed communication between two IPv4
//! hosts. Ports, protocols and payloads are intentionally not carried.

mod csv_events;
mod pcap;
mod truth;

use std::collections::HashSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

pub use csv_events::{read_events_csv, write_events_csv, EventCsvReader};
pub use pcap::{looks_like_pcap, read_events_pcap, PcapReader};
pub use truth::{read_ground_truth, write_ground_truth, GroundTruth};

use crate::error::{Error, Result};

/// One packet: `src` sent something to `dst` at `timestamp` seconds after capture start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketEvent {
    pub timestamp: f64,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    /// Informational only; no feature depends on it.
    pub size_bytes: u32,
}

impl PacketEvent {
    pub fn new(timestamp: f64, src: Ipv4Addr, dst: Ipv4Addr, size_bytes: u32) -> Self {
        Self {
            timestamp,
            src,
            dst,
            size_bytes,
        }
    }
}

/// Summary of a capture, accumulated while streaming.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CaptureMeta {
    pub duration_s: f64,
    pub event_count: u64,
    pub host_count: u64,
}

impl CaptureMeta {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a PacketEvent>) -> Self {
        let mut tracker = MetaTracker::default();
        for e in events {
            tracker.observe(e);
        }
        tracker.meta()
    }
}

/// Incrementally builds a [`CaptureMeta`]. Holds the host set, never the events.
#[derive(Debug, Default, Clone)]
pub struct MetaTracker {
    duration_s: f64,
    events: u64,
    hosts: HashSet<Ipv4Addr>,
}

impl MetaTracker {
    pub fn observe(&mut self, event: &PacketEvent) {
        self.duration_s = self.duration_s.max(event.timestamp);
        self.events += 1;
        self.hosts.insert(event.src);
        self.hosts.insert(event.dst);
    }

    pub fn meta(&self) -> CaptureMeta {
        CaptureMeta {
            duration_s: self.duration_s,
            event_count: self.events,
            host_count: self.hosts.len() as u64,
        }
    }
}

/// Enforces the non-decreasing timestamp contract shared by all readers.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct OrderGuard {
    previous: Option<f64>,
}

impl OrderGuard {
    pub(crate) fn check(&mut self, record: u64, timestamp: f64) -> Result<()> {
        if let Some(previous) = self.previous {
            if timestamp < previous {
                return Err(Error::Ordering {
                    record,
                    previous,
                    got: timestamp,
                });
            }
        }
        self.previous = Some(timestamp);
        Ok(())
    }
}

/// Checks an in-memory event slice against the ordering contract.
pub fn check_ordered(events: &[PacketEvent]) -> Result<()> {
    let mut guard = OrderGuard::default();
    for (i, e) in events.iter().enumerate() {
        guard.check(i as u64 + 1, e.timestamp)?;
    }
    Ok(())
}
