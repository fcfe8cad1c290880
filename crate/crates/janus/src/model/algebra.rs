//! Structure-preservation checks for maps under test.

use super::types::{BinaryOpSpec, MapUnderTest};
use super::ModelError;

/// Result of a homomorphism check over a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomomorphismReport {
    pub is_perfect: bool,
    /// Largest |residual| observed across the sample pairs.
    pub max_residual: f64,
}

/// Result of a round-trip invertibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BijectivityReport {
    pub ok: bool,
    pub max_roundtrip_error: f64,
}

/// Checks whether `map` preserves the operation pair over the sampled raw
/// values: for each pair, `forward(op_raw(r1, r2))` must agree with
/// `op_quale(forward(r1), forward(r2))` to within `tol`.
pub fn check_homomorphism(
    map: &MapUnderTest,
    ops: &BinaryOpSpec,
    sample_pairs: &[(f64, f64)],
    tol: f64,
) -> Result<HomomorphismReport, ModelError> {
    if sample_pairs.is_empty() {
        return Err(ModelError::EmptySampleSet);
    }
    let mut max_residual = 0.0f64;
    for &(r1, r2) in sample_pairs {
        let residual = residual_delta(map, ops, r1, r2)?;
        max_residual = max_residual.max(residual.abs());
    }
    Ok(HomomorphismReport {
        is_perfect: max_residual <= tol,
        max_residual,
    })
}

/// Checks `inverse(forward(r))` against `r` over the samples.
pub fn check_bijectivity(
    map: &MapUnderTest,
    samples: &[f64],
    tol: f64,
) -> Result<BijectivityReport, ModelError> {
    if !map.has_inverse() {
        return Err(ModelError::NoInverseProvided);
    }
    if samples.is_empty() {
        return Err(ModelError::EmptySampleSet);
    }
    let mut max_err = 0.0f64;
    for &r in samples {
        let roundtrip = map.inverse(map.forward(r)?)?;
        max_err = max_err.max((roundtrip - r).abs());
    }
    Ok(BijectivityReport {
        ok: max_err <= tol,
        max_roundtrip_error: max_err,
    })
}

/// The additive residual of the homomorphism identity at one pair:
/// `forward(op_raw(r1, r2)) - op_quale(forward(r1), forward(r2))`.
/// Zero exactly when the map preserves the operations at this pair.
pub fn residual_delta(
    map: &MapUnderTest,
    ops: &BinaryOpSpec,
    r1: f64,
    r2: f64,
) -> Result<f64, ModelError> {
    let combined_raw = ops.op_raw.apply(r1, r2);
    if !combined_raw.is_finite() {
        return Err(ModelError::DomainViolation { input: combined_raw });
    }
    let lhs = map.forward(combined_raw)?;
    let rhs = ops.op_quale.apply(map.forward(r1)?, map.forward(r2)?);
    if !rhs.is_finite() {
        return Err(ModelError::DomainViolation { input: rhs });
    }
    Ok(lhs - rhs)
}
