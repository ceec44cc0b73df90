//! Command-line arguments. Flags override the corresponding config-file keys.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kneescope::spectral::WindowKind;

use crate::config::AnalysisConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "kneescope", version, about = "Capacity-fade knee, curvature PSD and incremental-capacity analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the knee-onset and knee of a capacity fade curve.
    Knee(KneeArgs),
    /// Welch PSD of the curvature in each degradation phase.
    Psd(PsdArgs),
    /// Incremental-capacity curves and largest-peak trajectory from RPTs.
    Ica(IcaArgs),
    /// Knee, PSD and ICA for one cell in a single document.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// JSON file with analysis settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write an SVG plot to this path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Capacity CSV with header `cycle,capacity_ah`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Nominal capacity in Ah (default: capacity of the first cycle).
    #[arg(long)]
    pub nominal_ah: Option<f64>,
    /// Identifier echoed in the report (default: input file stem).
    #[arg(long)]
    pub cell_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct SegmentationArgs {
    /// Number of arc-curve minima to extract; onset and knee are the outermost.
    #[arg(long)]
    pub boundaries: Option<usize>,
    /// Matrix-profile subsequence length.
    #[arg(long)]
    pub subsequence_len: Option<usize>,
    /// Savitzky-Golay window for the capacity curve.
    #[arg(long)]
    pub smoother_window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WelchArgs {
    /// Segment taper.
    #[arg(long, value_parser = ["rect", "rectangular", "hann"])]
    pub window: Option<String>,
    /// Fraction of a segment shared with the next, in [0, 1).
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Split each phase into this many segments.
    #[arg(long, conflicts_with = "segment_len")]
    pub segments: Option<usize>,
    /// Segment length in samples.
    #[arg(long)]
    pub segment_len: Option<usize>,
    /// Disable per-segment mean removal.
    #[arg(long)]
    pub no_detrend: bool,
}

#[derive(Debug, Args)]
pub struct IcaOptions {
    /// Voltage grid step in volts.
    #[arg(long)]
    pub dv: Option<f64>,
    /// Ignore peaks below this voltage.
    #[arg(long)]
    pub v_min: Option<f64>,
    /// Ignore peaks above this voltage.
    #[arg(long)]
    pub v_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KneeArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub capacity: CapacityArgs,
    #[command(flatten)]
    pub segmentation: SegmentationArgs,
}

#[derive(Debug, Args)]
pub struct PsdArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub capacity: CapacityArgs,
    #[command(flatten)]
    pub segmentation: SegmentationArgs,
    #[command(flatten)]
    pub welch: WelchArgs,
    /// Reuse the boundaries of a previous `knee` report.
    #[arg(long)]
    pub knee_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IcaArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    /// RPT manifest (JSON).
    #[arg(long, alias = "rpt-manifest")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub ica: IcaOptions,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(flatten)]
    pub capacity: CapacityArgs,
    #[command(flatten)]
    pub segmentation: SegmentationArgs,
    #[command(flatten)]
    pub welch: WelchArgs,
    /// RPT manifest (JSON); without it the `ica` section is null.
    #[arg(long)]
    pub rpt_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub ica: IcaOptions,
}

/// Loads the config file (if any) and applies `apply` on top.
pub fn resolve_config(out: &OutputArgs, apply: impl FnOnce(&mut AnalysisConfig)) -> Result<AnalysisConfig, CliError> {
    let mut cfg = match &out.config {
        Some(path) => AnalysisConfig::load(path)?,
        None => AnalysisConfig::default(),
    };
    apply(&mut cfg);
    cfg.validate().map_err(|e| match &out.config {
        Some(path) => e.context(format!("config {}", path.display())),
        None => e,
    })?;
    Ok(cfg)
}

impl CapacityArgs {
    pub fn apply(&self, cfg: &mut AnalysisConfig) {
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if self.nominal_ah.is_some() {
            cfg.nominal_ah = self.nominal_ah;
        }
        if self.cell_id.is_some() {
            cfg.cell_id = self.cell_id.clone();
        }
    }
}

impl SegmentationArgs {
    pub fn apply(&self, cfg: &mut AnalysisConfig) {
        if let Some(n) = self.boundaries {
            cfg.n_boundaries = n;
        }
        if self.subsequence_len.is_some() {
            cfg.subsequence_len = self.subsequence_len;
        }
        if self.smoother_window.is_some() {
            cfg.smoother_window_length = self.smoother_window;
        }
    }
}

impl WelchArgs {
    pub fn apply(&self, cfg: &mut AnalysisConfig) {
        if let Some(w) = &self.window {
            cfg.welch_window = if w == "hann" { WindowKind::Hann } else { WindowKind::Rectangular };
        }
        if let Some(o) = self.overlap {
            cfg.welch_overlap = o;
        }
        if self.segments.is_some() {
            cfg.welch_segments = self.segments;
            cfg.welch_segment_len = None;
        }
        if self.segment_len.is_some() {
            cfg.welch_segment_len = self.segment_len;
            cfg.welch_segments = None;
        }
        if self.no_detrend {
            cfg.welch_detrend = false;
        }
    }
}

impl IcaOptions {
    pub fn apply(&self, cfg: &mut AnalysisConfig) {
        if let Some(dv) = self.dv {
            cfg.ica_dv = dv;
        }
        if self.v_min.is_some() {
            cfg.ica_v_min = self.v_min;
        }
        if self.v_max.is_some() {
            cfg.ica_v_max = self.v_max;
        }
    }
}
