use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{extract_interval_timed, ConvergenceConfig, FeatureTiming, GraphMode, IntervalFeatures};
use crate::error::{Error, Result};
use crate::windowing::Interval;

/// Per-interval measurements from a parallel extraction run.
#[derive(Debug, Clone)]
pub struct IntervalTiming {
    pub index: usize,
    pub events: usize,
    pub nodes: usize,
    pub timing: FeatureTiming,
}

#[derive(Debug, Clone)]
pub struct ExtractionOutput {
    /// Ordered by interval index.
    pub intervals: Vec<IntervalFeatures>,
    pub timings: Vec<IntervalTiming>,
    pub wall: Duration,
    pub workers: usize,
}

/// Extracts features for a stream of intervals on a pool of `workers` threads.
///
/// Intervals are pulled in batches of `2 * workers`, so at most that many
/// are held in memory at once. Each interval is computed independently and
/// results are merged by index, so output does not depend on `workers`.
pub fn extract_intervals<I>(
    intervals: I,
    mode: GraphMode,
    cfg: &ConvergenceConfig,
    workers: usize,
) -> Result<ExtractionOutput>
where
    I: IntoIterator<Item = Result<Interval>>,
{
    cfg.validate()?;
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let batch_size = 2 * workers;
    let start = Instant::now();
    let mut out = ExtractionOutput {
        intervals: Vec::new(),
        timings: Vec::new(),
        wall: Duration::ZERO,
        workers,
    };
    let mut source = intervals.into_iter();
    let mut batch: Vec<Interval> = Vec::with_capacity(batch_size);
    loop {
        batch.clear();
        for item in source.by_ref().take(batch_size) {
            batch.push(item?);
        }
        if batch.is_empty() {
            break;
        }
        let results: Vec<Result<(IntervalFeatures, FeatureTiming)>> = pool.install(|| {
            batch
                .par_iter()
                .map(|iv| extract_interval_timed(iv, mode, cfg))
                .collect()
        });
        for (iv, result) in batch.iter().zip(results) {
            let (features, timing) = result?;
            out.timings.push(IntervalTiming {
                index: iv.index,
                events: iv.events.len(),
                nodes: features.features.len(),
                timing,
            });
            out.intervals.push(features);
        }
    }
    out.wall = start.elapsed();
    Ok(out)
}
