//! The algebraic fidelity model.
//!
//! A monitored system senses classes of raw facts and keeps cyber
//! representations of them (qualia). The association between the two is a
//! reflective map; it has perfect fidelity when it preserves the algebraic
//! structure on both sides. In practice the map is imperfect and the error
//! drifts over time. This module provides:
//!
//! * structure-preservation ([`check_homomorphism`]) and invertibility
//!   ([`check_bijectivity`]) checks for a map under test,
//! * the per-operation residual ([`residual_delta`]) and the per-instant
//!   drift of an observed quale against a reference ([`compute_drift`]),
//! * drift-series bookkeeping and the four-way drift classification
//!   ([`classify_drift`]): hard-bound, statistically bound, unbound with a
//!   trend, unbound with a random trend.

mod algebra;
mod drift;
mod types;

pub use algebra::{
    check_bijectivity, check_homomorphism, residual_delta, BijectivityReport, HomomorphismReport,
};
pub use drift::{classify_drift, compute_drift, linear_trend, DriftClassification, TrendFit};
pub use types::{
    BinaryOp, BinaryOpSpec, DriftClass, DriftClassifyParams, DriftSample, DriftSeries,
    MapUnderTest, Quale, QualiaClassId, RawFact,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("map is undefined at {input}")]
    DomainViolation { input: f64 },
    #[error("map has no inverse to check")]
    NoInverseProvided,
    #[error("series has {len} samples, classification needs at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("all abscissa values coincide, no line can be fitted")]
    DegenerateAbscissa,
    #[error("sample at t={next} is not after previous sample at t={prev}")]
    NonMonotonicTime { prev: f64, next: f64 },
    #[error("non-finite value {value} in drift sample")]
    NonFiniteSample { value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
}
