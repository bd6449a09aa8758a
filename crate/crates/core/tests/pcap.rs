//! The hand-written pcap reader against captures written and re-read by
//! the `pcap-file` crate.

use std::io::Cursor;
use std::net::Ipv4Addr;
use std::time::Duration;

use botgraph::ingest::PcapReader;
use botgraph::pipeline::{extract_file, ExtractOptions};
use botgraph::{GroundTruth, PacketEvent};
use pcap_file::pcap::{PcapHeader, PcapPacket, PcapReader as OracleReader, PcapWriter};
use pcap_file::{DataLink, Endianness, TsResolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut f = vec![0u8; 14];
    rng.fill(&mut f[..12]);
    match rng.gen_range(0..10) {
        0 => {
            f[12..14].copy_from_slice(&0x0806u16.to_be_bytes());
            f.extend_from_slice(&[0u8; 28]);
        }
        1 => {
            f[12..14].copy_from_slice(&0x86ddu16.to_be_bytes());
            f.extend_from_slice(&[0x60; 40]);
        }
        _ => {
            f[12..14].copy_from_slice(&0x0800u16.to_be_bytes());
            let options = rng.gen_range(0..3usize) * 4;
            let total = rng.gen_range(20 + options as u16..1500);
            let mut ip = vec![0u8; 20 + options];
            ip[0] = 0x40 | (5 + options / 4) as u8;
            ip[2..4].copy_from_slice(&total.to_be_bytes());
            ip[9] = 6;
            rng.fill(&mut ip[12..20]);
            f.extend_from_slice(&ip);
            // Payload is usually cut by the snap length.
            let payload = rng.gen_range(0..64);
            f.extend((0..payload).map(|_| rng.gen::<u8>()));
        }
    }
    f
}

fn capture(resolution: TsResolution, endianness: Endianness, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let header = PcapHeader {
        datalink: DataLink::ETHERNET,
        ts_resolution: resolution,
        endianness,
        ..Default::default()
    };
    let mut w = PcapWriter::with_header(Vec::new(), header).unwrap();
    let mut t = Duration::new(1_600_000_000, 0);
    for _ in 0..500 {
        t += match resolution {
            TsResolution::MicroSecond => Duration::from_micros(rng.gen_range(0..2_000_000)),
            TsResolution::NanoSecond => Duration::from_nanos(rng.gen_range(0..2_000_000_000)),
        };
        let data = frame(&mut rng);
        w.write_packet(&PcapPacket::new(t, data.len() as u32, &data)).unwrap();
    }
    w.into_writer()
}

/// What each IPv4 frame should become, decoded from the oracle's packets.
fn expected(bytes: &[u8]) -> (Vec<PacketEvent>, u64) {
    let mut r = OracleReader::new(Cursor::new(bytes)).unwrap();
    let mut out = Vec::new();
    let mut skipped = 0;
    let mut origin = None;
    while let Some(p) = r.next_packet() {
        let p = p.unwrap();
        let t0 = *origin.get_or_insert(p.timestamp);
        let d = &p.data;
        if d[12..14] != [0x08, 0x00] {
            skipped += 1;
            continue;
        }
        let ip = &d[14..];
        out.push(PacketEvent::new(
            (p.timestamp - t0).as_secs_f64(),
            Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]),
            Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]),
            u32::from(u16::from_be_bytes([ip[2], ip[3]])),
        ));
    }
    (out, skipped)
}

#[test]
fn reader_agrees_with_pcap_file() {
    let variants = [
        (TsResolution::MicroSecond, Endianness::Little),
        (TsResolution::MicroSecond, Endianness::Big),
        (TsResolution::NanoSecond, Endianness::Little),
        (TsResolution::NanoSecond, Endianness::Big),
    ];
    for (seed, (res, end)) in variants.into_iter().enumerate() {
        let bytes = capture(res, end, seed as u64);
        let (want, want_skipped) = expected(&bytes);
        let mut reader = PcapReader::new(Cursor::new(bytes)).unwrap();
        let got: Vec<PacketEvent> = reader.by_ref().collect::<Result<_, _>>().unwrap();
        assert_eq!(got.len(), want.len(), "{res:?} {end:?}");
        assert_eq!(reader.skipped(), want_skipped);
        for (g, w) in got.iter().zip(&want) {
            assert_eq!((g.src, g.dst, g.size_bytes), (w.src, w.dst, w.size_bytes));
            assert!((g.timestamp - w.timestamp).abs() < 1e-6, "{} vs {}", g.timestamp, w.timestamp);
        }
    }
}

#[test]
fn pcap_and_csv_extract_to_the_same_features() {
    let bytes = capture(TsResolution::MicroSecond, Endianness::Little, 7);
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("cap.pcap");
    std::fs::write(&pcap, &bytes).unwrap();
    let events: Vec<PacketEvent> = PcapReader::new(Cursor::new(&bytes[..]))
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    let csv = dir.path().join("cap.csv");
    let mut text = Vec::new();
    botgraph::ingest::write_events_csv(&mut text, &events).unwrap();
    std::fs::write(&csv, text).unwrap();

    let opts = ExtractOptions::default();
    let a = extract_file(&pcap, GroundTruth::new(), &opts).unwrap();
    let b = extract_file(&csv, GroundTruth::new(), &opts).unwrap();
    assert!(a.skipped_frames > 0);
    assert_eq!(a.cache.to_csv_string(), b.cache.to_csv_string());
}
