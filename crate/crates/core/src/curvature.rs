//! Approximated discrete curvature of the capacity fade curve.

use serde::Serialize;

use crate::dataset::CapacitySeries;
use crate::error::{Error, Result};
use crate::preprocess::{normalize, savgol_filter, SmootherConfig};

/// Curvature of normalized capacity against raw cycle number (cycle⁻¹).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureSeries {
    cycle: Vec<f64>,
    kappa: Vec<f64>,
    dt: f64,
}

impl CurvatureSeries {
    /// Builds a series on the uniform grid `start + k·dt`.
    pub fn on_grid(start: f64, dt: f64, kappa: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("grid step must be positive, got {dt}")));
        }
        let cycle = (0..kappa.len()).map(|k| start + k as f64 * dt).collect();
        Ok(Self { cycle, kappa, dt })
    }

    pub fn cycle(&self) -> &[f64] {
        &self.cycle
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }
}

/// Graph curvature `y'' / (1 + y'^2)^(3/2)`, elementwise.
pub fn curvature_from_derivatives(y1: &[f64], y2: &[f64]) -> Result<Vec<f64>> {
    if y1.len() != y2.len() {
        return Err(Error::Contract(format!(
            "first ({}) and second ({}) derivative lengths differ",
            y1.len(),
            y2.len()
        )));
    }
    Ok(y1
        .iter()
        .zip(y2)
        .map(|(d1, d2)| d2 / (1.0 + d1 * d1).powf(1.5))
        .collect())
}

/// Normalize, smooth and differentiate a uniformly sampled capacity series,
/// then take its curvature. Non-uniform series must be resampled first.
pub fn approximate_curvature(series: &CapacitySeries, cfg: &SmootherConfig) -> Result<CurvatureSeries> {
    let dt = series.step().ok_or_else(|| {
        Error::Domain("capacity series is not uniformly sampled; resample it first".into())
    })?;
    if cfg.max_deriv() < 2 {
        return Err(Error::Config(
            "curvature needs second derivatives; max_deriv must be 2".into(),
        ));
    }
    let y = normalize(series);
    let y1 = savgol_filter(&y, cfg, 1, dt)?;
    let y2 = savgol_filter(&y, cfg, 2, dt)?;
    let kappa = curvature_from_derivatives(&y1, &y2)?;
    Ok(CurvatureSeries {
        cycle: series.cycle().to_vec(),
        kappa,
        dt,
    })
}
