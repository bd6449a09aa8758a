//! Botnet host detection from time series of communication-graph features.
//!
//! The pipeline: [`ingest`] packets into an ordered event stream, slice it
//! into overlapping [`windowing`] intervals, compute ten per-node
//! [`graphfeat`] features per interval, assemble per-host [`timeseries`],
//! and classify fixed-length windows with the LSTM in [`model`]. [`eval`]
//! holds splitting, metrics and ROC analysis; [`synth`] generates labeled
//! traffic for tests; [`pipeline`] wires it all together for the CLI.

pub mod cache;
pub mod error;
pub mod eval;
pub mod graphfeat;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod timeseries;
pub mod windowing;

pub use cache::FeatureCache;
pub use error::{Error, ErrorKind, Result};
pub use graphfeat::{ConvergenceConfig, FeatureVector, GraphMode, IntervalGraph};
pub use ingest::{CaptureMeta, GroundTruth, PacketEvent};
pub use model::{LstmParams, TrainConfig};
pub use timeseries::{HostKey, NodeTimeSeries, SamplingConfig, WindowSample};
pub use windowing::{Interval, WindowConfig};
