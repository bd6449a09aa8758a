mod common;

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use botgraph::eval::{roc, split, SplitConfig};
use botgraph::graphfeat::{build_graph, degree_features};
use botgraph::ingest::{read_events_csv, write_events_csv};
use botgraph::model::{loss, predict_scores, train, TrainConfig};
use botgraph::synth::{default_suite, generate, separable_windows, ScenarioSpec};
use botgraph::windowing::slice;
use botgraph::{HostKey, LstmParams, PacketEvent, WindowConfig, WindowSample};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::pairwise_auroc;

fn events_strategy() -> impl Strategy<Value = Vec<PacketEvent>> {
    prop::collection::vec((0.0..1e6f64, any::<u32>(), any::<u32>(), 0..u32::from(u16::MAX)), 0..200).prop_map(|rows| {
        let mut events: Vec<PacketEvent> = rows
            .into_iter()
            .map(|(t, s, d, n)| PacketEvent::new(t, Ipv4Addr::from(s), Ipv4Addr::from(d), n))
            .collect();
        events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        events
    })
}

fn scored_strategy() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((0u8..20, any::<bool>()), 2..120).prop_map(|mut v| {
        v[0].1 = true;
        v[1].1 = false;
        v.into_iter().map(|(s, l)| (f64::from(s) / 20.0, l)).collect()
    })
}

proptest! {
    #[test]
    fn events_csv_round_trip(events in events_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let mut bytes = Vec::new();
        write_events_csv(&mut bytes, &events).unwrap();
        std::fs::write(&path, bytes).unwrap();
        let back: Vec<PacketEvent> = read_events_csv(&path).unwrap().collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(back, events);
    }

    #[test]
    fn loss_is_non_negative_and_zero_only_when_exact(
        rows in prop::collection::vec((0.0..=1.0f64, any::<bool>()), 1..50),
        w in 1.0..10.0f64,
    ) {
        let (scores, labels): (Vec<f64>, Vec<bool>) = rows.into_iter().unzip();
        let l = loss(&scores, &labels, w);
        prop_assert!(l >= 0.0);
        let exact = scores.iter().zip(&labels).all(|(&s, &y)| s == f64::from(u8::from(y)));
        prop_assert_eq!(l == 0.0, exact);
        let perfect: Vec<f64> = labels.iter().map(|&y| f64::from(u8::from(y))).collect();
        prop_assert_eq!(loss(&perfect, &labels, w), 0.0);
    }

    #[test]
    fn auroc_matches_pairwise_and_ignores_monotone_transforms(scored in scored_strategy()) {
        let curve = roc(&scored).unwrap();
        prop_assert!((curve.auroc - pairwise_auroc(&scored)).abs() <= 1e-12);
        let squashed: Vec<(f64, bool)> = scored.iter().map(|&(s, l)| ((3.0 * s).exp() - 7.0, l)).collect();
        prop_assert_eq!(roc(&squashed).unwrap().auroc, curve.auroc);
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for p in curve.points.windows(2) {
            prop_assert!(p[0].fpr <= p[1].fpr && p[0].tpr <= p[1].tpr);
            prop_assert!(p[0].threshold > p[1].threshold);
        }
    }

    #[test]
    fn splits_are_host_disjoint_and_stratified(
        hosts in prop::collection::vec(any::<bool>(), 4..60),
        seed in any::<u64>(),
    ) {
        let mut labels = hosts;
        labels[..2].fill(true);
        labels[2..4].fill(false);
        let samples: Vec<WindowSample> = labels
            .iter()
            .enumerate()
            .flat_map(|(k, &bad)| {
                (0..3).map(move |w| WindowSample {
                    host: HostKey::new(0, Ipv4Addr::from(k as u32)),
                    start_interval: w * 3,
                    matrix: vec![[0.5; 10]; 5],
                    label: bad,
                })
            })
            .collect();
        let cfg = SplitConfig { seed, ..SplitConfig::default() };
        let s = split(&samples, &cfg).unwrap();
        prop_assert!(s.train.is_disjoint(&s.test));
        prop_assert_eq!(s.train.len() + s.test.len(), labels.len());
        let bad = labels.iter().filter(|&&b| b).count();
        let train_bad = s.train.iter().filter(|h| s.malicious.contains(h)).count();
        prop_assert_eq!(train_bad, cfg.train_count(bad));
        prop_assert_eq!(s.train.len() - train_bad, cfg.train_count(labels.len() - bad));
    }
}

#[test]
fn training_reduces_loss_on_separable_windows() {
    let samples = separable_windows(64, 5, 3);
    let cfg = TrainConfig { batch_size: 16, ..TrainConfig::default() };
    let out = train(&samples, &cfg).unwrap();
    assert_eq!(out.loss_history.len(), 200);
    assert!(out.loss_history[199] < out.loss_history[0], "{:?}", (out.loss_history[0], out.loss_history[199]));
}

#[test]
fn scores_do_not_depend_on_sample_order() {
    let params = LstmParams::init(10, 16, 9);
    let samples = separable_windows(50, 5, 4);
    let scores = predict_scores(&params, &samples).unwrap();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let shuffled: Vec<WindowSample> = order.iter().map(|&k| samples[k].clone()).collect();
    let again = predict_scores(&params, &shuffled).unwrap();
    for (pos, &k) in order.iter().enumerate() {
        assert_eq!(again[pos].to_bits(), scores[k].to_bits());
    }
}

#[test]
fn synth_streams_round_trip_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    for spec in default_suite(5) {
        let s = generate(&spec).unwrap();
        let path = dir.path().join(format!("{}.csv", spec.name));
        let mut bytes = Vec::new();
        write_events_csv(&mut bytes, &s.events).unwrap();
        std::fs::write(&path, bytes).unwrap();
        let back: Vec<PacketEvent> = read_events_csv(&path).unwrap().collect::<Result<_, _>>().unwrap();
        assert_eq!(back, s.events, "{}", spec.name);
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn bots_reach_more_hosts_than_the_benign_median() {
    for spec in default_suite(0) {
        let s = generate(&spec).unwrap();
        let intervals = slice(&s.events, WindowConfig::default(), spec.duration_s).unwrap();
        let mut seen: BTreeMap<Ipv4Addr, Vec<f64>> = BTreeMap::new();
        for interval in &intervals {
            let g = build_graph(interval, Default::default());
            for (node, d) in g.nodes().iter().zip(degree_features(&g)) {
                seen.entry(*node).or_default().push(d.out_neighbors as f64);
            }
        }
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        let benign: Vec<f64> = seen
            .iter()
            .filter(|(h, _)| !s.bots.contains(h) && h.octets()[0] == 10)
            .map(|(_, v)| mean(v))
            .collect();
        let line = median(benign);
        for bot in &s.bots {
            let m = mean(&seen[bot]);
            assert!(m > line, "{}: bot {bot} mean {m} vs benign median {line}", spec.name);
        }
    }
}

#[test]
fn default_specs_describe_the_suite() {
    let suite = default_suite(0);
    let names: Vec<&str> = suite.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["p2p", "cnc", "ddos"]);
    for s in &suite {
        assert_eq!((s.benign_hosts, s.bot_hosts, s.duration_s), (45, 5, 7200.0));
        assert_eq!(ScenarioSpec::parse(&s.to_config_string()).unwrap(), *s);
    }
}
