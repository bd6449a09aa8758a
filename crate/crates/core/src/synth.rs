//! Seeded synthetic captures: random background traffic among internal
//! hosts plus a periodic bot overlay that alternates between activity and
//! dormancy.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphfeat::FEATURE_COUNT;
use crate::ingest::{GroundTruth, PacketEvent};
use crate::timeseries::{HostKey, WindowSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BotPattern {
    /// Bots gossip with each other.
    P2p,
    /// Bots beacon one external controller.
    Cnc,
    /// Bots flood one external victim.
    Ddos,
}

impl BotPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            BotPattern::P2p => "p2p",
            BotPattern::Cnc => "cnc",
            BotPattern::Ddos => "ddos",
        }
    }
}

impl fmt::Display for BotPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BotPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p2p" => Ok(BotPattern::P2p),
            "cnc" => Ok(BotPattern::Cnc),
            "ddos" => Ok(BotPattern::Ddos),
            other => Err(Error::Config(format!("unknown bot pattern {other:?} (expected p2p, cnc or ddos)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration_s: f64,
    pub benign_hosts: usize,
    pub bot_hosts: usize,
    pub pattern: BotPattern,
    pub period_s: f64,
    /// Fraction of each period during which bots stay silent.
    pub dormancy_duty: f64,
    /// Background packets per second across all internal hosts.
    pub noise_rate: f64,
    /// Packets per second per bot while active.
    pub bot_rate: f64,
    /// Time at which every bot becomes infected and starts its pattern.
    pub infection_s: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            name: "p2p".into(),
            duration_s: 7200.0,
            benign_hosts: 45,
            bot_hosts: 5,
            pattern: BotPattern::P2p,
            period_s: 600.0,
            dormancy_duty: 0.5,
            noise_rate: 0.5,
            bot_rate: 0.2,
            infection_s: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(format!("scenario {}: {what}", self.name)));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if self.benign_hosts == 0 {
            return bad("benign_hosts must be positive".into());
        }
        if self.benign_hosts + self.bot_hosts > 1 << 16 {
            return bad("at most 65536 internal hosts".into());
        }
        if self.pattern == BotPattern::P2p && self.bot_hosts == 1 {
            return bad("p2p needs at least two bots".into());
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return bad(format!("period_s must be positive, got {}", self.period_s));
        }
        if !(0.0..=1.0).contains(&self.dormancy_duty) {
            return bad(format!("dormancy_duty must lie in [0, 1], got {}", self.dormancy_duty));
        }
        for (key, v) in [("noise_rate", self.noise_rate), ("bot_rate", self.bot_rate), ("infection_s", self.infection_s)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{key} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n as u64 + 1, format!("expected key=value, got {line:?}")))?;
            spec.set(key.trim(), value.trim())
                .map_err(|e| Error::parse(n as u64 + 1, e.to_string()))?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
        }
        match key {
            "name" => self.name = value.to_string(),
            "duration_s" => self.duration_s = num(key, value)?,
            "benign_hosts" => self.benign_hosts = num(key, value)?,
            "bot_hosts" => self.bot_hosts = num(key, value)?,
            "pattern" => self.pattern = value.parse()?,
            "period_s" => self.period_s = num(key, value)?,
            "dormancy_duty" => self.dormancy_duty = num(key, value)?,
            "noise_rate" => self.noise_rate = num(key, value)?,
            "bot_rate" => self.bot_rate = num(key, value)?,
            "infection_s" => self.infection_s = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown scenario key {other:?}"))),
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "name = {}\nduration_s = {}\nbenign_hosts = {}\nbot_hosts = {}\npattern = {}\nperiod_s = {}\n\
             dormancy_duty = {}\nnoise_rate = {}\nbot_rate = {}\ninfection_s = {}\nseed = {}\n",
            self.name,
            self.duration_s,
            self.benign_hosts,
            self.bot_hosts,
            self.pattern,
            self.period_s,
            self.dormancy_duty,
            self.noise_rate,
            self.bot_rate,
            self.infection_s,
            self.seed
        )
    }

    /// Whether bots run their pattern at time `t`.
    pub fn is_active(&self, t: f64) -> bool {
        if t < self.infection_s {
            return false;
        }
        let phase = (t - self.infection_s).rem_euclid(self.period_s) / self.period_s;
        phase < 1.0 - self.dormancy_duty
    }
}

/// The three-scenario suite: one scenario per pattern, 45 benign hosts and
/// 5 bots over two hours each.
pub fn default_suite(seed: u64) -> Vec<ScenarioSpec> {
    [BotPattern::P2p, BotPattern::Cnc, BotPattern::Ddos]
        .into_iter()
        .enumerate()
        .map(|(k, pattern)| ScenarioSpec {
            name: pattern.as_str().into(),
            pattern,
            seed: seed.wrapping_add(k as u64),
            ..ScenarioSpec::default()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub events: Vec<PacketEvent>,
    pub truth: GroundTruth,
    pub bots: Vec<Ipv4Addr>,
    /// Controller or victim, absent for p2p.
    pub target: Option<Ipv4Addr>,
}

fn internal(k: usize) -> Ipv4Addr {
    Ipv4Addr::new(10, 0, (k >> 8) as u8, (k & 0xff) as u8)
}

const EXTERNAL_TARGET: Ipv4Addr = Ipv4Addr::new(203, 0, 113, 7);

/// Exponential inter-arrival gap.
fn gap(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln() / rate
}

fn micros(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

/// Deterministic for a given spec. Events are sorted by time, then source,
/// then destination.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.benign_hosts + spec.bot_hosts;
    let hosts: Vec<Ipv4Addr> = (1..=n).map(internal).collect();
    let mut bots: Vec<Ipv4Addr> = sample(&mut rng, n, spec.bot_hosts).into_iter().map(|k| hosts[k]).collect();
    bots.sort();

    let mut events = Vec::new();
    if spec.noise_rate > 0.0 && n > 1 {
        let mut t = gap(&mut rng, spec.noise_rate);
        while t < spec.duration_s {
            let src = rng.gen_range(0..n);
            let mut dst = rng.gen_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            events.push(PacketEvent {
                timestamp: micros(t),
                src: hosts[src],
                dst: hosts[dst],
                size_bytes: rng.gen_range(60..=1500),
            });
            t += gap(&mut rng, spec.noise_rate);
        }
    }

    let target = match spec.pattern {
        BotPattern::P2p => None,
        BotPattern::Cnc | BotPattern::Ddos if !bots.is_empty() => Some(EXTERNAL_TARGET),
        _ => None,
    };
    if spec.bot_rate > 0.0 {
        for (b, &bot) in bots.iter().enumerate() {
            let mut t = spec.infection_s + gap(&mut rng, spec.bot_rate);
            while t < spec.duration_s {
                if spec.is_active(t) {
                    let dst = match spec.pattern {
                        BotPattern::P2p => {
                            let mut k = rng.gen_range(0..bots.len() - 1);
                            if k >= b {
                                k += 1;
                            }
                            bots[k]
                        }
                        BotPattern::Cnc | BotPattern::Ddos => EXTERNAL_TARGET,
                    };
                    let size_bytes = match spec.pattern {
                        BotPattern::Ddos => rng.gen_range(40..=120),
                        _ => rng.gen_range(60..=300),
                    };
                    events.push(PacketEvent {
                        timestamp: micros(t),
                        src: bot,
                        dst,
                        size_bytes,
                    });
                }
                t += gap(&mut rng, spec.bot_rate);
            }
        }
    }
    events.retain(|e| e.timestamp < spec.duration_s);
    events.sort_by(|a, b| {
        a.timestamp
            .total_cmp(&b.timestamp)
            .then(a.src.cmp(&b.src))
            .then(a.dst.cmp(&b.dst))
    });

    let mut truth = GroundTruth::new();
    for &bot in &bots {
        truth.insert(bot, spec.infection_s)?;
    }
    Ok(Scenario {
        events,
        truth,
        bots,
        target,
    })
}

/// `n` windows whose features sit near 0.8 for positives and 0.2 for
/// negatives; every fourth sample is positive.
pub fn separable_windows(n: usize, slice_len: usize, seed: u64) -> Vec<WindowSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let label = k % 4 == 0;
            let centre = if label { 0.8 } else { 0.2 };
            WindowSample {
                host: HostKey::new(0, internal(k + 1)),
                start_interval: 0,
                matrix: (0..slice_len)
                    .map(|_| std::array::from_fn::<f64, FEATURE_COUNT, _>(|_| centre + rng.gen_range(-0.1..0.1)))
                    .collect(),
                label,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::check_ordered;

    #[test]
    fn no_bots_means_empty_truth() {
        let s = generate(&ScenarioSpec {
            bot_hosts: 0,
            duration_s: 600.0,
            ..Default::default()
        })
        .unwrap();
        assert!(s.truth.is_empty());
        assert!(!s.events.is_empty());
    }

    #[test]
    fn same_seed_same_stream() {
        let spec = ScenarioSpec {
            duration_s: 900.0,
            ..Default::default()
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = ScenarioSpec { seed: 1, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap().events, generate(&other).unwrap().events);
    }

    #[test]
    fn output_is_ordered_and_in_range() {
        for spec in default_suite(3) {
            let s = generate(&spec).unwrap();
            check_ordered(&s.events).unwrap();
            assert!(s.events.iter().all(|e| e.timestamp >= 0.0 && e.timestamp < spec.duration_s));
            assert_eq!(s.truth.len(), spec.bot_hosts);
        }
    }

    #[test]
    fn p2p_bots_talk_only_to_bots_while_active() {
        let spec = ScenarioSpec {
            bot_hosts: 3,
            noise_rate: 0.0,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        assert!(!s.events.is_empty());
        for e in &s.events {
            assert!(s.bots.contains(&e.src) && s.bots.contains(&e.dst) && e.src != e.dst);
            assert!(spec.is_active(e.timestamp));
        }
    }

    #[test]
    fn infection_delays_bot_traffic() {
        let spec = ScenarioSpec {
            pattern: BotPattern::Cnc,
            noise_rate: 0.0,
            infection_s: 1800.0,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        assert!(s.events.iter().all(|e| e.timestamp >= 1800.0 && e.dst == EXTERNAL_TARGET));
        assert_eq!(s.truth.infection_time(s.bots[0]), Some(1800.0));
    }

    #[test]
    fn spec_file_round_trip() {
        let spec = ScenarioSpec {
            name: "x".into(),
            pattern: BotPattern::Ddos,
            noise_rate: 1.25,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(ScenarioSpec::parse(&spec.to_config_string()).unwrap(), spec);
        assert!(ScenarioSpec::parse("pattern = mesh").is_err());
        assert!(ScenarioSpec::parse("colour = red").is_err());
        assert!(ScenarioSpec::parse("dormancy_duty = 2").is_err());
    }

    #[test]
    fn activity_phases() {
        let spec = ScenarioSpec::default();
        assert!(spec.is_active(0.0));
        assert!(spec.is_active(299.0));
        assert!(!spec.is_active(300.0));
        assert!(spec.is_active(600.0));
    }
}
