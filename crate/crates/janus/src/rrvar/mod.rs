//! Reflective variables: the sensory and qualia service.
//!
//! A reflective variable is a named cell whose content is continuously and
//! asynchronously refreshed by a sampler task and read, without blocking, by
//! any number of clients. The registry owns the cells; each cell has exactly
//! one committer and any number of readers.

mod cell;
mod registry;
mod sampler;
mod trace;

pub use registry::{Freshness, Registry, RrVarDescriptor, RrVarHandle, Snapshot};
pub use sampler::{cpu_percent_from_proc_stat, CpuStatSample, SamplerKind, SamplerSpec};
pub use trace::{parse_replay_trace, trace_to_string, TraceSample};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("variable `{0}` is already registered")]
    DuplicateName(String),
    #[error("period {0} ms is below the 10 ms minimum")]
    InvalidPeriod(u64),
    #[error("no variable named `{0}`")]
    UnknownName(String),
    #[error("commit at t={next} precedes last commit at t={prev}")]
    NonMonotonicTime { prev: f64, next: f64 },
    #[error("value {value} is outside the `{kind}` sampler range")]
    OutOfRange { value: f64, kind: &'static str },
}

/// Errors raised while parsing a replay trace file.
#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}
