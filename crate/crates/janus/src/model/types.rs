//! Domain types for the fidelity model.

use std::fmt;
use std::sync::Arc;

use super::ModelError;

/// Index of a qualia class, unique within one registry and stable for the
/// life of a run. Class indices start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualiaClassId(u32);

impl QualiaClassId {
    pub const fn new(id: u32) -> Self {
        Self(id)
    }

    pub const fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for QualiaClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An environmental observable as sensed in the physical/user domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFact {
    pub class_id: QualiaClassId,
    pub value: f64,
    /// Monotonic seconds; non-decreasing per class within one source.
    pub timestamp: f64,
}

/// The cyber representation of a raw fact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quale {
    pub class_id: QualiaClassId,
    pub value: f64,
    /// Monotonic seconds; non-decreasing per class.
    pub timestamp: f64,
    /// Update counter; strictly increases per class across commits.
    pub seq: u64,
}

/// A binary operation on real values. The named variants carry no state;
/// `Custom` wraps an arbitrary total function.
#[derive(Clone)]
pub enum BinaryOp {
    Add,
    Mul,
    Custom {
        name: &'static str,
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    },
}

impl BinaryOp {
    pub fn apply(&self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Mul => a * b,
            BinaryOp::Custom { f, .. } => f(a, b),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Mul => "mul",
            BinaryOp::Custom { name, .. } => name,
        }
    }
}

impl fmt::Debug for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The pair of operations whose correspondence a reflective map must
/// preserve: one on raw-fact values, one on quale values.
#[derive(Debug, Clone)]
pub struct BinaryOpSpec {
    pub op_raw: BinaryOp,
    pub op_quale: BinaryOp,
}

impl BinaryOpSpec {
    pub fn new(op_raw: BinaryOp, op_quale: BinaryOp) -> Self {
        Self { op_raw, op_quale }
    }

    /// Addition on both sides.
    pub fn add_add() -> Self {
        Self::new(BinaryOp::Add, BinaryOp::Add)
    }

    /// Multiplication on both sides.
    pub fn mul_mul() -> Self {
        Self::new(BinaryOp::Mul, BinaryOp::Mul)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A raw-value -> quale-value association under test, with an optional
/// inverse and an optional declared domain interval. Evaluation outside the
/// domain, or an evaluation that produces a non-finite value, is a
/// [`ModelError::DomainViolation`].
#[derive(Clone)]
pub struct MapUnderTest {
    forward: ScalarFn,
    inverse: Option<ScalarFn>,
    domain: Option<(f64, f64)>,
}

impl MapUnderTest {
    pub fn new(forward: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            forward: Arc::new(forward),
            inverse: None,
            domain: None,
        }
    }

    pub fn with_inverse(mut self, inverse: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    /// Restrict the map to the closed interval `[lo, hi]`.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = Some((lo, hi));
        self
    }

    pub fn identity() -> Self {
        Self::new(|r| r).with_inverse(|q| q)
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn forward(&self, r: f64) -> Result<f64, ModelError> {
        self.eval(&self.forward, r)
    }

    pub fn inverse(&self, q: f64) -> Result<f64, ModelError> {
        let inv = self.inverse.as_ref().ok_or(ModelError::NoInverseProvided)?;
        // The declared domain restricts raw values; the inverse takes quale
        // values, so only the finiteness check applies.
        let out = inv(q);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(ModelError::DomainViolation { input: q })
        }
    }

    fn eval(&self, f: &ScalarFn, x: f64) -> Result<f64, ModelError> {
        if let Some((lo, hi)) = self.domain {
            if x < lo || x > hi {
                return Err(ModelError::DomainViolation { input: x });
            }
        }
        let out = f(x);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(ModelError::DomainViolation { input: x })
        }
    }
}

impl fmt::Debug for MapUnderTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapUnderTest")
            .field("has_inverse", &self.inverse.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

/// One drift measurement: the signed error of a quale class at an instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSample {
    pub class_id: QualiaClassId,
    pub t: f64,
    pub delta: f64,
}

/// Time-ordered drift samples for one qualia class. Construction enforces
/// strictly increasing `t` and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    class_id: QualiaClassId,
    samples: Vec<DriftSample>,
}

impl DriftSeries {
    pub fn new(class_id: QualiaClassId) -> Self {
        Self {
            class_id,
            samples: Vec::new(),
        }
    }

    pub fn from_samples(
        class_id: QualiaClassId,
        samples: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self, ModelError> {
        let mut series = Self::new(class_id);
        for (t, delta) in samples {
            series.push(t, delta)?;
        }
        Ok(series)
    }

    pub fn push(&mut self, t: f64, delta: f64) -> Result<(), ModelError> {
        if !t.is_finite() {
            return Err(ModelError::NonFiniteSample { value: t });
        }
        if !delta.is_finite() {
            return Err(ModelError::NonFiniteSample { value: delta });
        }
        if let Some(last) = self.samples.last() {
            if t <= last.t {
                return Err(ModelError::NonMonotonicTime {
                    prev: last.t,
                    next: t,
                });
            }
        }
        self.samples.push(DriftSample {
            class_id: self.class_id,
            t,
            delta,
        });
        Ok(())
    }

    pub fn class_id(&self) -> QualiaClassId {
        self.class_id
    }

    pub fn samples(&self) -> &[DriftSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest |delta| in the series, 0 for an empty series.
    pub fn max_abs_delta(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.delta.abs())
            .fold(0.0, f64::max)
    }
}

/// The four drift classes, ordered from most to least benign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriftClass {
    /// Every sample stays within the hard bound.
    HardBound,
    /// Excursions beyond the bound exist but a large fraction stays within.
    StatBound,
    /// Unbounded drift that follows a line.
    UnboundTrend,
    /// Unbounded drift with no usable trend.
    UnboundRandom,
}

impl DriftClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DriftClass::HardBound => "HardBound",
            DriftClass::StatBound => "StatBound",
            DriftClass::UnboundTrend => "UnboundTrend",
            DriftClass::UnboundRandom => "UnboundRandom",
        }
    }
}

impl fmt::Display for DriftClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of the drift-class decision cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftClassifyParams {
    /// Hard bound B on |delta|.
    pub bound: f64,
    /// Minimum in-bound fraction for the statistically-bound class.
    pub in_bound_fraction: f64,
    /// Minimum r-squared for a fitted line to count as a trend.
    pub trend_r2: f64,
    /// Minimum |slope| (delta units per second) to count as a trend.
    pub slope_min: f64,
}

impl DriftClassifyParams {
    pub const DEFAULT_IN_BOUND_FRACTION: f64 = 0.95;
    pub const DEFAULT_TREND_R2: f64 = 0.8;
    pub const DEFAULT_SLOPE_MIN: f64 = 1e-9;

    /// Defaults for everything but the bound, which has no sensible
    /// class-independent default.
    pub fn new(bound: f64) -> Result<Self, ModelError> {
        Self {
            bound,
            in_bound_fraction: Self::DEFAULT_IN_BOUND_FRACTION,
            trend_r2: Self::DEFAULT_TREND_R2,
            slope_min: Self::DEFAULT_SLOPE_MIN,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(ModelError::InvalidParams("bound must be positive"));
        }
        if !(self.in_bound_fraction > 0.0 && self.in_bound_fraction <= 1.0) {
            return Err(ModelError::InvalidParams(
                "in_bound_fraction must be in (0, 1]",
            ));
        }
        if !(self.trend_r2 > 0.0 && self.trend_r2 <= 1.0) {
            return Err(ModelError::InvalidParams("trend_r2 must be in (0, 1]"));
        }
        if !(self.slope_min.is_finite() && self.slope_min > 0.0) {
            return Err(ModelError::InvalidParams("slope_min must be positive"));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_series_rejects_non_monotonic_time() {
        let mut series = DriftSeries::new(QualiaClassId::new(1));
        series.push(1.0, 0.5).unwrap();
        series.push(2.0, 0.5).unwrap();
        let err = series.push(2.0, 0.1).unwrap_err();
        assert_eq!(err, ModelError::NonMonotonicTime { prev: 2.0, next: 2.0 });
        assert_eq!(series.len(), 2);
    }

    #[test]
    fn drift_series_rejects_non_finite() {
        let mut series = DriftSeries::new(QualiaClassId::new(1));
        assert!(series.push(0.0, f64::NAN).is_err());
        assert!(series.push(f64::INFINITY, 0.0).is_err());
        assert!(series.is_empty());
    }

    #[test]
    fn map_domain_is_enforced() {
        let map = MapUnderTest::new(|r| r.sqrt()).with_domain(0.0, 100.0);
        assert_eq!(map.forward(4.0).unwrap(), 2.0);
        assert_eq!(
            map.forward(-1.0).unwrap_err(),
            ModelError::DomainViolation { input: -1.0 }
        );
    }

    #[test]
    fn map_rejects_non_finite_output() {
        let map = MapUnderTest::new(|r| 1.0 / r);
        assert_eq!(
            map.forward(0.0).unwrap_err(),
            ModelError::DomainViolation { input: 0.0 }
        );
    }

    #[test]
    fn inverse_absent_is_reported() {
        let map = MapUnderTest::new(|r| r);
        assert_eq!(map.inverse(1.0).unwrap_err(), ModelError::NoInverseProvided);
    }

    #[test]
    fn classify_params_validation() {
        assert!(DriftClassifyParams::new(0.2).is_ok());
        assert!(DriftClassifyParams::new(0.0).is_err());
        assert!(DriftClassifyParams::new(-1.0).is_err());
        let bad = DriftClassifyParams {
            bound: 1.0,
            in_bound_fraction: 1.5,
            trend_r2: 0.8,
            slope_min: 1e-9,
        };
        assert!(bad.validated().is_err());
    }
}
