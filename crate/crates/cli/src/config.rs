//! Flat JSON analysis configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use kneescope::ica::DEFAULT_DV;
use kneescope::pipeline::PipelineConfig;
use kneescope::preprocess::SmootherConfig;
use kneescope::segmentation::SegmentationConfig;
use kneescope::spectral::{SegmentLength, WelchConfig, WindowKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every tunable of the analysis. Absent keys take their defaults; unknown
/// keys are rejected. `None` means "derive from the data".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub input: Option<PathBuf>,
    pub rpt_manifest: Option<PathBuf>,
    pub cell_id: Option<String>,
    /// Defaults to the capacity of the first cycle.
    pub nominal_ah: Option<f64>,
    pub grid_step: f64,

    pub smoother_window_length: Option<usize>,
    /// Only meaningful together with `smoother_window_length`.
    pub smoother_poly_order: Option<usize>,

    pub subsequence_len: Option<usize>,
    pub exclusion: Option<usize>,
    pub regime_exclusion_factor: f64,
    pub n_boundaries: usize,

    /// Fixed Welch segment length in samples.
    pub welch_segment_len: Option<usize>,
    /// Number of equal segments; mutually exclusive with `welch_segment_len`.
    pub welch_segments: Option<usize>,
    pub welch_overlap: f64,
    pub welch_window: WindowKind,
    pub welch_detrend: bool,
    pub welch_pad_to: Option<usize>,

    pub ica_dv: f64,
    pub ica_window_length: usize,
    pub ica_poly_order: usize,
    pub ica_v_min: Option<f64>,
    pub ica_v_max: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            input: None,
            rpt_manifest: None,
            cell_id: None,
            nominal_ah: None,
            grid_step: 1.0,
            smoother_window_length: None,
            smoother_poly_order: None,
            subsequence_len: None,
            exclusion: None,
            regime_exclusion_factor: 5.0,
            n_boundaries: 2,
            welch_segment_len: None,
            welch_segments: None,
            welch_overlap: 0.5,
            welch_window: WindowKind::Hann,
            welch_detrend: true,
            welch_pad_to: None,
            ica_dv: DEFAULT_DV,
            ica_window_length: 11,
            ica_poly_order: 3,
            ica_v_min: None,
            ica_v_max: None,
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::user("config", format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::user("config", format!("invalid config {}: {e}", path.display())))
    }

    /// Checks every field that can be checked without data.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::user("config", msg));
        if let Some(q) = self.nominal_ah {
            if !(q.is_finite() && q > 0.0) {
                return bad(format!("nominal_ah must be positive, got {q}"));
            }
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return bad(format!("grid_step must be positive, got {}", self.grid_step));
        }
        match (self.smoother_window_length, self.smoother_poly_order) {
            (Some(w), p) => {
                SmootherConfig::new(w, p.unwrap_or(3), 2)?;
            }
            (None, Some(_)) => return bad("smoother_poly_order requires smoother_window_length".into()),
            (None, None) => {}
        }
        if self.welch_segment_len.is_some() && self.welch_segments.is_some() {
            return bad("welch_segment_len and welch_segments are mutually exclusive".into());
        }
        if !(0.0..1.0).contains(&self.welch_overlap) {
            return bad(format!("welch_overlap must lie in [0, 1), got {}", self.welch_overlap));
        }
        if self.welch_segments == Some(0) {
            return bad("welch_segments must be at least 1".into());
        }
        if !(self.ica_dv.is_finite() && self.ica_dv > 0.0) {
            return bad(format!("ica_dv must be positive, got {}", self.ica_dv));
        }
        SmootherConfig::new(self.ica_window_length, self.ica_poly_order, 1)?;
        if let (Some(lo), Some(hi)) = (self.ica_v_min, self.ica_v_max) {
            if lo >= hi {
                return bad(format!("ica_v_min {lo} must be below ica_v_max {hi}"));
            }
        }
        Ok(())
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, CliError> {
        let smoother = match self.smoother_window_length {
            Some(w) => Some(SmootherConfig::new(w, self.smoother_poly_order.unwrap_or(3), 2)?),
            None => None,
        };
        Ok(PipelineConfig {
            grid_step: self.grid_step,
            smoother,
            segmentation: SegmentationConfig {
                m: self.subsequence_len,
                exclusion: self.exclusion,
                regime_exclusion_factor: self.regime_exclusion_factor,
                n_boundaries: self.n_boundaries,
            },
        })
    }

    pub fn welch(&self) -> WelchConfig {
        let segment_len = match (self.welch_segment_len, self.welch_segments) {
            (Some(s), _) => SegmentLength::Samples(s),
            (None, Some(k)) => SegmentLength::Segments(k),
            (None, None) => SegmentLength::Auto,
        };
        WelchConfig {
            segment_len,
            overlap: self.welch_overlap,
            window: self.welch_window,
            detrend: self.welch_detrend,
            pad_to: self.welch_pad_to,
        }
    }

    pub fn ic_smoother(&self) -> Result<SmootherConfig, CliError> {
        Ok(SmootherConfig::new(self.ica_window_length, self.ica_poly_order, 1)?)
    }

    pub fn ica_window(&self) -> Option<(f64, f64)> {
        match (self.ica_v_min, self.ica_v_max) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))),
        }
    }
}
