//! Drift measurement, trend fitting, and drift-class classification.

use super::types::{DriftClass, DriftClassifyParams, DriftSample, DriftSeries, Quale};
use super::ModelError;

/// Classification needs enough samples for trend and randomness to mean
/// anything at all.
pub const MIN_CLASSIFY_SAMPLES: usize = 8;

/// Ordinary least-squares fit of delta against time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Outcome of [`classify_drift`]. The fit diagnostics are populated in every
/// branch, including the bounded ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftClassification {
    pub class: DriftClass,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub in_bound_fraction: f64,
}

/// Per-instant drift of an observed quale against a reference value.
pub fn compute_drift(observed: &Quale, reference: f64) -> DriftSample {
    DriftSample {
        class_id: observed.class_id,
        t: observed.timestamp,
        delta: observed.value - reference,
    }
}

/// Classifies a drift series with the decision cascade: hard bound first,
/// then the in-bound fraction, then a trend test on the fitted line,
/// otherwise random.
pub fn classify_drift(
    series: &DriftSeries,
    params: &DriftClassifyParams,
) -> Result<DriftClassification, ModelError> {
    params.validated()?;
    if series.len() < MIN_CLASSIFY_SAMPLES {
        return Err(ModelError::SeriesTooShort {
            len: series.len(),
            min: MIN_CLASSIFY_SAMPLES,
        });
    }
    let fit = linear_trend(series)?;
    let n = series.len() as f64;
    let in_bound = series
        .samples()
        .iter()
        .filter(|s| s.delta.abs() <= params.bound)
        .count() as f64;
    let in_bound_fraction = in_bound / n;

    let class = if series.max_abs_delta() <= params.bound {
        DriftClass::HardBound
    } else if in_bound_fraction >= params.in_bound_fraction {
        DriftClass::StatBound
    } else if fit.r2 >= params.trend_r2 && fit.slope.abs() >= params.slope_min {
        DriftClass::UnboundTrend
    } else {
        DriftClass::UnboundRandom
    };

    Ok(DriftClassification {
        class,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        in_bound_fraction,
    })
}

/// Ordinary least-squares line through the series. A series whose delta has
/// zero variance fits a constant perfectly, so its r-squared is 1 by
/// convention.
pub fn linear_trend(series: &DriftSeries) -> Result<TrendFit, ModelError> {
    fit_line(series.samples().iter().map(|s| (s.t, s.delta)))
}

pub(crate) fn fit_line(points: impl Iterator<Item = (f64, f64)> + Clone) -> Result<TrendFit, ModelError> {
    let mut n = 0usize;
    let mut sum_t = 0.0;
    let mut sum_y = 0.0;
    for (t, y) in points.clone() {
        n += 1;
        sum_t += t;
        sum_y += y;
    }
    if n < 2 {
        return Err(ModelError::DegenerateAbscissa);
    }
    let mean_t = sum_t / n as f64;
    let mean_y = sum_y / n as f64;

    let mut s_tt = 0.0;
    let mut s_ty = 0.0;
    let mut ss_tot = 0.0;
    for (t, y) in points.clone() {
        let dt = t - mean_t;
        let dy = y - mean_y;
        s_tt += dt * dt;
        s_ty += dt * dy;
        ss_tot += dy * dy;
    }
    if s_tt == 0.0 {
        return Err(ModelError::DegenerateAbscissa);
    }
    let slope = s_ty / s_tt;
    let intercept = mean_y - slope * mean_t;

    let mut ss_res = 0.0;
    for (t, y) in points {
        let r = y - (intercept + slope * t);
        ss_res += r * r;
    }
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(TrendFit {
        slope,
        intercept,
        r2,
    })
}
