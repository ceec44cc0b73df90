//! End-to-end knee identification: resample, normalize, smooth, curvature,
//! segmentation.

use crate::curvature::{approximate_curvature, CurvatureSeries};
use crate::dataset::{resample_uniform, CapacitySeries};
use crate::error::{Error, Result};
use crate::preprocess::SmootherConfig;
use crate::segmentation::{identify_knee, PhasePartition, ResolvedSegmentation, SegmentationConfig};

/// Curvature magnitudes (cycle⁻¹) below this are indistinguishable from
/// rounding noise in the smoothed derivatives of a normalized series.
pub const MIN_CURVATURE_MAGNITUDE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Grid step used when the input is not uniformly sampled.
    pub grid_step: f64,
    /// `None` selects [`SmootherConfig::default_for_len`].
    pub smoother: Option<SmootherConfig>,
    pub segmentation: SegmentationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid_step: 1.0,
            smoother: None,
            segmentation: SegmentationConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KneeAnalysis {
    /// The uniformly sampled series the curvature was computed on.
    pub series: CapacitySeries,
    pub resampled: bool,
    pub smoother: SmootherConfig,
    pub segmentation: ResolvedSegmentation,
    pub curvature: CurvatureSeries,
    pub partition: PhasePartition,
}

/// Curvature of a capacity series on a uniform grid, resampling when needed.
pub fn curvature_pipeline(
    series: &CapacitySeries,
    cfg: &PipelineConfig,
) -> Result<(CapacitySeries, bool, SmootherConfig, CurvatureSeries)> {
    let (uniform, resampled) = if series.is_uniform() {
        (series.clone(), false)
    } else {
        (resample_uniform(series, cfg.grid_step)?, true)
    };
    let smoother = match cfg.smoother {
        Some(s) => s,
        None => SmootherConfig::default_for_len(uniform.len())?,
    };
    let curvature = approximate_curvature(&uniform, &smoother)?;
    Ok((uniform, resampled, smoother, curvature))
}

pub fn analyze_knee(series: &CapacitySeries, cfg: &PipelineConfig) -> Result<KneeAnalysis> {
    let (uniform, resampled, smoother, curvature) = curvature_pipeline(series, cfg)?;
    let peak = curvature.kappa().iter().fold(0.0f64, |a, k| a.max(k.abs()));
    if peak < MIN_CURVATURE_MAGNITUDE {
        return Err(Error::Degenerate(format!(
            "capacity fade has no curvature (max |kappa| = {peak:.3e}); no knee detectable"
        )));
    }
    let segmentation = cfg.segmentation.resolve(curvature.len())?;
    let partition = identify_knee(&curvature, &cfg.segmentation)?;
    Ok(KneeAnalysis {
        series: uniform,
        resampled,
        smoother,
        segmentation,
        curvature,
        partition,
    })
}
