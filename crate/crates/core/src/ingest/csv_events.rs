use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use super::{CaptureMeta, MetaTracker, OrderGuard, PacketEvent};
use crate::error::{Error, Result};

const HEADER: [&str; 4] = ["timestamp", "src", "dst", "size_bytes"];

/// Streaming reader for the canonical `timestamp,src,dst,size_bytes` format.
///
/// A header line is accepted only as the first line. Input must already be
/// sorted by timestamp; a regression is reported, never re-sorted.
pub struct EventCsvReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    guard: OrderGuard,
    tracker: MetaTracker,
    first: bool,
    failed: bool,
}

impl<R: Read> EventCsvReader<R> {
    pub fn new(reader: R) -> Self {
        let records = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader)
            .into_records();
        Self {
            records,
            guard: OrderGuard::default(),
            tracker: MetaTracker::default(),
            first: true,
            failed: false,
        }
    }

    /// Meta for the events yielded so far; complete once the iterator is exhausted.
    pub fn meta(&self) -> CaptureMeta {
        self.tracker.meta()
    }

    fn parse_record(&mut self, record: &csv::StringRecord) -> Result<Option<PacketEvent>> {
        let line = record.position().map_or(0, |p| p.line());
        let first = std::mem::replace(&mut self.first, false);
        if first && record.iter().eq(HEADER.iter().copied()) {
            return Ok(None);
        }
        if record.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected 4 fields, found {}", record.len()),
            ));
        }
        let timestamp = parse_timestamp(&record[0]).map_err(|m| Error::parse(line, m))?;
        let src = parse_host(&record[1]).map_err(|m| Error::parse(line, m))?;
        let dst = parse_host(&record[2]).map_err(|m| Error::parse(line, m))?;
        let size_bytes = record[3]
            .parse::<u32>()
            .map_err(|_| Error::parse(line, format!("invalid size_bytes {:?}", &record[3])))?;
        self.guard.check(line, timestamp)?;
        Ok(Some(PacketEvent::new(timestamp, src, dst, size_bytes)))
    }
}

impl<R: Read> Iterator for EventCsvReader<R> {
    type Item = Result<PacketEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let record = match self.records.next()? {
                Ok(r) => r,
                Err(e) => {
                    self.failed = true;
                    let line = e.position().map_or(0, |p| p.line());
                    return Some(Err(Error::parse(line, e.to_string())));
                }
            };
            match self.parse_record(&record) {
                Ok(Some(event)) => {
                    self.tracker.observe(&event);
                    return Some(Ok(event));
                }
                Ok(None) => continue,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

pub(super) fn parse_timestamp(field: &str) -> std::result::Result<f64, String> {
    match field.parse::<f64>() {
        Ok(t) if t.is_finite() && t >= 0.0 => Ok(t),
        _ => Err(format!("invalid timestamp {field:?}")),
    }
}

pub(super) fn parse_host(field: &str) -> std::result::Result<Ipv4Addr, String> {
    field
        .parse::<Ipv4Addr>()
        .map_err(|_| format!("invalid IPv4 host {field:?}"))
}

/// Opens `path` as an event CSV stream.
pub fn read_events_csv(path: impl AsRef<Path>) -> Result<EventCsvReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(EventCsvReader::new(BufReader::new(file)))
}

/// Writes events with a header line. Timestamps use the shortest exact decimal form.
pub fn write_events_csv<'a, W: Write>(
    mut out: W,
    events: impl IntoIterator<Item = &'a PacketEvent>,
) -> std::io::Result<()> {
    writeln!(out, "{}", HEADER.join(","))?;
    for e in events {
        writeln!(out, "{},{},{},{}", e.timestamp, e.src, e.dst, e.size_bytes)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_all(text: &str) -> Result<Vec<PacketEvent>> {
        EventCsvReader::new(text.as_bytes()).collect()
    }

    #[test]
    fn maps_fields_directly() {
        let events = read_all("0.0,10.0.0.1,10.0.0.2,60\n").unwrap();
        assert_eq!(
            events,
            vec![PacketEvent::new(
                0.0,
                "10.0.0.1".parse().unwrap(),
                "10.0.0.2".parse().unwrap(),
                60
            )]
        );
    }

    #[test]
    fn header_is_optional() {
        let with = read_all("timestamp,src,dst,size_bytes\n1.5,10.0.0.1,10.0.0.2,60\n").unwrap();
        let without = read_all("1.5,10.0.0.1,10.0.0.2,60\n").unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn empty_input_gives_empty_stream_and_zero_meta() {
        let mut reader = EventCsvReader::new("".as_bytes());
        assert!(reader.next().is_none());
        assert_eq!(reader.meta(), CaptureMeta::default());
    }

    #[test]
    fn non_ipv4_host_reports_line() {
        let err = read_all("0.0,10.0.0.1,10.0.0.2,60\n5.0,a.b.c.d,10.0.0.2,60\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("a.b.c.d"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn timestamp_regression_is_an_error() {
        let err = read_all("5.0,10.0.0.1,10.0.0.2,60\n4.0,10.0.0.1,10.0.0.2,60\n").unwrap_err();
        assert!(matches!(err, Error::Ordering { record: 2, .. }), "{err:?}");
    }

    #[test]
    fn wrong_field_count_and_negative_time_rejected() {
        assert!(matches!(
            read_all("1.0,10.0.0.1,10.0.0.2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_all("-1.0,10.0.0.1,10.0.0.2,1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn meta_tracks_duration_events_hosts() {
        let mut reader = EventCsvReader::new(
            "0,10.0.0.1,10.0.0.2,1\n2.5,10.0.0.2,10.0.0.3,1\n".as_bytes(),
        );
        let n = reader.by_ref().count();
        assert_eq!(n, 2);
        assert_eq!(
            reader.meta(),
            CaptureMeta {
                duration_s: 2.5,
                event_count: 2,
                host_count: 3
            }
        );
    }
}
