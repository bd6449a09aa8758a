//! Classic (libpcap) capture reader: Ethernet link layer, IPv4 payloads only.

use std::fs::File;
use std::io::{self, BufReader, Read};
use std::net::Ipv4Addr;
use std::path::Path;

use super::{CaptureMeta, MetaTracker, OrderGuard, PacketEvent};
use crate::error::{Error, Result};

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
const PCAPNG_SHB: u32 = 0x0a0d_0d0a;
const LINKTYPE_ETHERNET: u32 = 1;
const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERNET_HEADER: usize = 14;
const IPV4_MIN_HEADER: usize = 20;
const MAX_RECORD: u32 = 1 << 26;

#[derive(Debug, Clone, Copy)]
struct Header {
    big_endian: bool,
    nanos: bool,
}

impl Header {
    fn u32(&self, b: [u8; 4]) -> u32 {
        if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        }
    }
}

/// Streams [`PacketEvent`]s out of a classic pcap file.
///
/// Timestamps are rebased so the first record in the file is at t = 0.
/// Frames that are not IPv4-over-Ethernet are counted in [`skipped`](Self::skipped).
pub struct PcapReader<R: Read> {
    inner: R,
    header: Header,
    offset: u64,
    packets: u64,
    skipped: u64,
    origin: Option<(i64, i64)>,
    guard: OrderGuard,
    tracker: MetaTracker,
    done: bool,
    buf: Vec<u8>,
}

impl<R: Read> PcapReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut global = [0u8; 24];
        let got = read_fully(&mut inner, &mut global).map_err(|e| Error::Format(e.to_string()))?;
        if got >= 4 {
            let magic = u32::from_le_bytes(global[0..4].try_into().unwrap());
            if magic == PCAPNG_SHB {
                return Err(Error::Format("pcap-ng unsupported".into()));
            }
        }
        if got < 24 {
            return Err(Error::Truncated {
                offset: got as u64,
                what: "global header",
            });
        }
        let magic_le = u32::from_le_bytes(global[0..4].try_into().unwrap());
        let magic_be = u32::from_be_bytes(global[0..4].try_into().unwrap());
        let header = match (magic_le, magic_be) {
            (MAGIC_MICROS, _) => Header { big_endian: false, nanos: false },
            (MAGIC_NANOS, _) => Header { big_endian: false, nanos: true },
            (_, MAGIC_MICROS) => Header { big_endian: true, nanos: false },
            (_, MAGIC_NANOS) => Header { big_endian: true, nanos: true },
            _ => return Err(Error::Format(format!("bad magic number {magic_le:#010x}"))),
        };
        let linktype = header.u32(global[20..24].try_into().unwrap()) & 0x0fff_ffff;
        if linktype != LINKTYPE_ETHERNET {
            return Err(Error::Format(format!(
                "unsupported link type {linktype} (only Ethernet)"
            )));
        }
        Ok(Self {
            inner,
            header,
            offset: 24,
            packets: 0,
            skipped: 0,
            origin: None,
            guard: OrderGuard::default(),
            tracker: MetaTracker::default(),
            done: false,
            buf: Vec::new(),
        })
    }

    /// Number of frames read that did not produce an event.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    /// Number of records read so far.
    pub fn packets(&self) -> u64 {
        self.packets
    }

    pub fn meta(&self) -> CaptureMeta {
        self.tracker.meta()
    }

    fn next_record(&mut self) -> Result<Option<PacketEvent>> {
        loop {
            let mut rec = [0u8; 16];
            let got = read_fully(&mut self.inner, &mut rec).map_err(|e| Error::io("<pcap>", e))?;
            if got == 0 {
                return Ok(None);
            }
            if got < 16 {
                return Err(Error::Truncated {
                    offset: self.offset,
                    what: "record header",
                });
            }
            let h = self.header;
            let secs = h.u32(rec[0..4].try_into().unwrap()) as i64;
            let frac = h.u32(rec[4..8].try_into().unwrap()) as i64;
            let incl = h.u32(rec[8..12].try_into().unwrap());
            if incl > MAX_RECORD {
                return Err(Error::Format(format!(
                    "record at byte offset {} claims {incl} bytes",
                    self.offset
                )));
            }
            let record_offset = self.offset;
            self.offset += 16;
            self.buf.resize(incl as usize, 0);
            let got = read_fully(&mut self.inner, &mut self.buf).map_err(|e| Error::io("<pcap>", e))?;
            if got < incl as usize {
                return Err(Error::Truncated {
                    offset: record_offset,
                    what: "packet data",
                });
            }
            self.offset += incl as u64;
            self.packets += 1;

            let (origin_secs, origin_frac) = *self.origin.get_or_insert((secs, frac));
            let scale = if h.nanos { 1e-9 } else { 1e-6 };
            let timestamp = (secs - origin_secs) as f64 + (frac - origin_frac) as f64 * scale;
            self.guard.check(self.packets, timestamp)?;

            match parse_ipv4_endpoints(&self.buf) {
                Some((src, dst, size)) => {
                    return Ok(Some(PacketEvent::new(timestamp, src, dst, size)));
                }
                None => self.skipped += 1,
            }
        }
    }
}

impl<R: Read> Iterator for PcapReader<R> {
    type Item = Result<PacketEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(e)) => {
                self.tracker.observe(&e);
                Some(Ok(e))
            }
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn parse_ipv4_endpoints(frame: &[u8]) -> Option<(Ipv4Addr, Ipv4Addr, u32)> {
    if frame.len() < ETHERNET_HEADER + IPV4_MIN_HEADER {
        return None;
    }
    let ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    if ethertype != ETHERTYPE_IPV4 {
        return None;
    }
    let ip = &frame[ETHERNET_HEADER..];
    if ip[0] >> 4 != 4 || (ip[0] & 0x0f) < 5 {
        return None;
    }
    let total_len = u16::from_be_bytes([ip[2], ip[3]]) as u32;
    let src = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    Some((src, dst, total_len))
}

/// Reads until `buf` is full or EOF, returning the number of bytes read.
fn read_fully<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Whether `head` starts with a classic pcap or pcap-ng magic number.
pub fn looks_like_pcap(head: &[u8]) -> bool {
    let Some(bytes) = head.get(..4) else {
        return false;
    };
    let le = u32::from_le_bytes(bytes.try_into().expect("four bytes"));
    let be = u32::from_be_bytes(bytes.try_into().expect("four bytes"));
    [MAGIC_MICROS, MAGIC_NANOS, PCAPNG_SHB].iter().any(|&m| m == le || m == be)
}

pub fn read_events_pcap(path: impl AsRef<Path>) -> Result<PcapReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    PcapReader::new(BufReader::new(file))
}
