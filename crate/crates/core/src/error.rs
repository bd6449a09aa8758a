use std::io;
use std::net::Ipv4Addr;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Config,
    Numeric,
}

impl ErrorKind {
    /// Process exit status for a command that failed with this kind.
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Input => 2,
            ErrorKind::Config => 3,
            ErrorKind::Numeric => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// `record` is a line number for CSV input and a packet number for pcap.
    #[error("record {record}: timestamp {got} precedes previous timestamp {previous}")]
    Ordering { record: u64, previous: f64, got: f64 },

    #[error("pcap format: {0}")]
    Format(String),

    #[error("pcap truncated at byte offset {offset}: {what}")]
    Truncated { offset: u64, what: &'static str },

    #[error("host {0} listed more than once in ground truth")]
    DuplicateHost(Ipv4Addr),

    #[error("interval {interval:?}: {feature} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        interval: Option<usize>,
        feature: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("cannot split: the {class} class has {hosts} host(s), need at least 2")]
    Split { class: String, hosts: usize },

    #[error("model file: {0}")]
    Model(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Ordering { .. }
            | Error::Format(_)
            | Error::Truncated { .. }
            | Error::DuplicateHost(_)
            | Error::Model(_)
            | Error::Input(_) => ErrorKind::Input,
            Error::Split { .. } | Error::Config(_) => ErrorKind::Config,
            Error::Convergence { .. } | Error::Divergence { .. } => ErrorKind::Numeric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attaches an interval index to a convergence failure.
    pub fn in_interval(self, index: usize) -> Self {
        match self {
            Error::Convergence {
                feature,
                iterations,
                residual,
                ..
            } => Error::Convergence {
                interval: Some(index),
                feature,
                iterations,
                residual,
            },
            other => other,
        }
    }
}
