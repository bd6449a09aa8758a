//! Fixed-duration, overlapping time intervals over an ordered event stream.
//!
//! Membership is half-open: an event at `t` belongs to interval `k` iff
//! `k * step <= t < k * step + window`. The slicer is a single streaming pass
//! that buffers an event in at most `ceil(window / step)` open intervals.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{OrderGuard, PacketEvent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_s: f64,
    pub step_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_s: 300.0,
            step_s: 150.0,
        }
    }
}

impl WindowConfig {
    pub fn new(window_s: f64, step_s: f64) -> Result<Self> {
        let cfg = Self { window_s, step_s };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.window_s.is_finite()
            && self.step_s.is_finite()
            && self.step_s > 0.0
            && self.step_s <= self.window_s;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "window {} s / step {} s: need 0 < step <= window",
                self.window_s, self.step_s
            )))
        }
    }

    pub fn start_of(&self, index: usize) -> f64 {
        index as f64 * self.step_s
    }

    /// Index of the last interval for a capture lasting `duration_s`.
    ///
    /// `ceil(max(duration - window, 0) / step)`, plus one more when that
    /// interval would end exactly at `duration_s`, so an event stamped at the
    /// duration itself is still covered.
    pub fn last_index(&self, duration_s: f64) -> usize {
        let over = (duration_s - self.window_s).max(0.0);
        let mut last = (over / self.step_s).ceil() as usize;
        if self.start_of(last) + self.window_s <= duration_s {
            last += 1;
        }
        last
    }

    pub fn interval_count(&self, duration_s: f64) -> usize {
        self.last_index(duration_s) + 1
    }
}

/// One time slice and the events that fall into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub events: Vec<PacketEvent>,
}

impl Interval {
    fn empty(index: usize, cfg: &WindowConfig) -> Self {
        let start_s = cfg.start_of(index);
        Self {
            index,
            start_s,
            end_s: start_s + cfg.window_s,
            events: Vec::new(),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t < self.end_s
    }
}

/// Streaming interval slicer.
///
/// With a known `duration_s`, exactly `cfg.interval_count(duration_s)`
/// intervals are produced (trailing ones possibly empty). Without one, the
/// largest timestamp seen stands in for the duration.
pub struct Slicer<I> {
    events: I,
    cfg: WindowConfig,
    duration_s: Option<f64>,
    guard: OrderGuard,
    seen: u64,
    max_t: f64,
    open: VecDeque<Interval>,
    next_index: usize,
    ready: VecDeque<Interval>,
    buffered: usize,
    peak_buffered: usize,
    state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Streaming,
    Drained,
    Failed,
}

impl<I> Slicer<I>
where
    I: Iterator<Item = Result<PacketEvent>>,
{
    pub fn new(events: I, cfg: WindowConfig, duration_s: Option<f64>) -> Result<Self> {
        cfg.validate()?;
        if let Some(d) = duration_s {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::Config(format!("invalid capture duration {d}")));
            }
        }
        Ok(Self {
            events,
            cfg,
            duration_s,
            guard: OrderGuard::default(),
            seen: 0,
            max_t: 0.0,
            open: VecDeque::new(),
            next_index: 0,
            ready: VecDeque::new(),
            buffered: 0,
            peak_buffered: 0,
            state: State::Streaming,
        })
    }

    /// Largest number of event copies held in open intervals at any time.
    pub fn peak_buffered_events(&self) -> usize {
        self.peak_buffered
    }

    /// The underlying event source, e.g. to read its statistics after draining.
    pub fn source(&self) -> &I {
        &self.events
    }

    fn close_front(&mut self) {
        let iv = self.open.pop_front().expect("open interval");
        self.buffered -= iv.events.len();
        self.ready.push_back(iv);
    }

    fn accept(&mut self, event: PacketEvent) -> Result<()> {
        self.seen += 1;
        let t = event.timestamp;
        self.guard.check(self.seen, t)?;
        if let Some(d) = self.duration_s {
            if t > d {
                return Err(Error::Input(format!(
                    "event at t={t} lies beyond the capture duration {d}"
                )));
            }
        }
        self.max_t = self.max_t.max(t);

        while self.open.front().is_some_and(|iv| iv.end_s <= t) {
            self.close_front();
        }
        // Gap with no events: intervals that both start and end before t.
        while self.open.is_empty() && self.cfg.start_of(self.next_index) + self.cfg.window_s <= t {
            self.ready.push_back(Interval::empty(self.next_index, &self.cfg));
            self.next_index += 1;
        }
        while self.cfg.start_of(self.next_index) <= t {
            self.open.push_back(Interval::empty(self.next_index, &self.cfg));
            self.next_index += 1;
        }
        for iv in self.open.iter_mut() {
            debug_assert!(iv.contains(t));
            iv.events.push(event);
        }
        self.buffered += self.open.len();
        self.peak_buffered = self.peak_buffered.max(self.buffered);
        Ok(())
    }

    fn drain(&mut self) {
        let last = self.cfg.last_index(self.duration_s.unwrap_or(self.max_t));
        while let Some(iv) = self.open.pop_front() {
            if iv.index <= last {
                self.ready.push_back(iv);
            }
        }
        self.buffered = 0;
        while self.next_index <= last {
            self.ready.push_back(Interval::empty(self.next_index, &self.cfg));
            self.next_index += 1;
        }
        self.state = State::Drained;
    }
}

impl<I> Iterator for Slicer<I>
where
    I: Iterator<Item = Result<PacketEvent>>,
{
    type Item = Result<Interval>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(iv) = self.ready.pop_front() {
                return Some(Ok(iv));
            }
            match self.state {
                State::Drained | State::Failed => return None,
                State::Streaming => {}
            }
            match self.events.next() {
                Some(Ok(event)) => {
                    if let Err(e) = self.accept(event) {
                        self.state = State::Failed;
                        return Some(Err(e));
                    }
                }
                Some(Err(e)) => {
                    self.state = State::Failed;
                    return Some(Err(e));
                }
                None => self.drain(),
            }
        }
    }
}

/// Slices an in-memory event list.
pub fn slice(events: &[PacketEvent], cfg: WindowConfig, duration_s: f64) -> Result<Vec<Interval>> {
    Slicer::new(events.iter().copied().map(Ok), cfg, Some(duration_s))?.collect()
}
