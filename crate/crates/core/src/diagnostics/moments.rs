//! Moment tracking along ensembles and power-law growth fits.

use serde::{Deserialize, Serialize};

use crate::annealer::TrialReport;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSample {
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// Trials contributing (diverged trials drop out after divergence).
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub p: u32,
    pub samples: Vec<MomentSample>,
    /// Least-squares slope of `ln estimate` against `ln(1+t)` over the tail half.
    pub exponent: f64,
}

/// Slope of `ln v` against `ln(1+t)` over the last half of the points.
pub fn fit_growth_exponent(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
    }
    if times.len() < 4 {
        return Err(Error::Config(format!("growth fit needs at least 4 checkpoints, got {}", times.len())));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Numerical("growth fit needs positive values".into()));
    }
    let start = times.len() / 2;
    let xs: Vec<f64> = times[start..].iter().map(|t| t.ln_1p()).collect();
    let ys: Vec<f64> = values[start..].iter().map(|v| v.ln()).collect();
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// `E[(U(X_t) - min U + |Y_t|^2)^p]` at every checkpoint time shared by the trials.
///
/// The energy is shifted by `min_u` so the moment is of a nonnegative quantity.
pub fn track_moments(trials: &[TrialReport], min_u: f64, p: u32) -> Result<MomentSeries> {
    if p == 0 {
        return Err(Error::Config("moment order must be at least 1".into()));
    }
    let mut times: Vec<f64> = trials.iter().flat_map(|t| t.checkpoints.iter().map(|c| c.t)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let samples: Vec<MomentSample> = times
        .iter()
        .map(|&t| {
            let vals: Vec<f64> = trials
                .iter()
                .filter_map(|tr| tr.checkpoints.iter().find(|c| c.t == t))
                .map(|c| (c.energy - min_u + c.kinetic).max(0.0).powi(p as i32))
                .collect();
            let count = vals.len();
            let mean = vals.iter().sum::<f64>() / count as f64;
            let var =
                if count > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64 } else { 0.0 };
            MomentSample { t, estimate: mean, std_error: (var / count as f64).sqrt(), count }
        })
        .collect();
    let exponent = fit_growth_exponent(
        &samples.iter().map(|s| s.t).collect::<Vec<_>>(),
        &samples.iter().map(|s| s.estimate).collect::<Vec<_>>(),
    )?;
    Ok(MomentSeries { p, samples, exponent })
}
