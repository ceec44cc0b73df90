//! Subcommand implementations. Each builds a serializable document; the
//! caller writes it.

use std::fs::File;
use std::path::Path;

use kneescope::curvature::CurvatureSeries;
use kneescope::dataset::{parse_capacity_csv, CapacitySeries, Direction};
use kneescope::ica::{incremental_capacity, peak_track, IcCurve, PeakRecord};
use kneescope::pipeline::{analyze_knee, curvature_pipeline, KneeAnalysis};
use kneescope::preprocess::normalize;
use kneescope::segmentation::{PhasePartition, ResolvedSegmentation};
use kneescope::spectral::phase_psd;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::error::CliError;
use crate::manifest::load_rpts;
use crate::svg::{Panel, Trace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

pub const SOFTWARE: Software = Software {
    name: env!("CARGO_PKG_NAME"),
    version: env!("CARGO_PKG_VERSION"),
};

/// Top-level JSON document shared by all subcommands.
#[derive(Debug, Serialize)]
pub struct Document<T: Serialize> {
    pub schema_version: u32,
    pub software: Software,
    pub command: &'static str,
    pub config: AnalysisConfig,
    #[serde(flatten)]
    pub body: T,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherEcho {
    pub window_length: usize,
    pub poly_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeReport {
    pub cell_id: String,
    pub onset_cycle: f64,
    pub knee_cycle: f64,
    pub onset_index: usize,
    pub knee_index: usize,
    /// Cycles of every extracted boundary, ascending.
    pub boundary_cycles: Vec<f64>,
    /// Samples in phases 1, 2 and 3.
    pub phase_samples: [usize; 3],
    pub nominal_ah: f64,
    pub samples: usize,
    pub grid_start: f64,
    pub grid_step: f64,
    pub resampled: bool,
    pub smoother: SmootherEcho,
    pub segmentation: ResolvedSegmentation,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub phase: u8,
    pub start_cycle: f64,
    pub end_cycle: f64,
    pub samples: usize,
    pub segment_len: usize,
    pub n_segments: usize,
    pub transform_len: usize,
    pub df: f64,
    pub total_power: f64,
    pub freq: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsdSection {
    pub phases: Vec<PhaseReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IcCurveReport {
    pub rpt_index: u32,
    pub cycle_at_rpt: f64,
    pub direction: Direction,
    pub dv: f64,
    pub voltage_v: Vec<f64>,
    pub dq_dv: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IcaSection {
    pub curves: Vec<IcCurveReport>,
    pub track: Vec<PeakRecord>,
    pub saturation: PeakRecord,
    pub rises_then_falls: bool,
}

#[derive(Debug, Serialize)]
pub struct KneeBody {
    pub knee: KneeReport,
}

#[derive(Debug, Serialize)]
pub struct PsdBody {
    pub knee: KneeReport,
    pub psd: PsdSection,
}

#[derive(Debug, Serialize)]
pub struct IcaBody {
    pub ica: IcaSection,
}

#[derive(Debug, Serialize)]
pub struct ReportBody {
    pub knee: KneeReport,
    pub psd: PsdSection,
    pub ica: Option<IcaSection>,
}

/// A finished subcommand: the document plus optional plot panels.
pub struct Outcome<T: Serialize> {
    pub document: Document<T>,
    pub panels: Vec<Panel>,
}

fn document<T: Serialize>(command: &'static str, config: AnalysisConfig, body: T, warnings: Vec<String>) -> Document<T> {
    Document {
        schema_version: SCHEMA_VERSION,
        software: SOFTWARE,
        command,
        config,
        body,
        warnings,
    }
}

pub fn load_capacity(cfg: &AnalysisConfig) -> Result<CapacitySeries, CliError> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::user("usage", "no capacity input given (--input or config `input`)"))?;
    let cell_id = cfg.cell_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cell".into())
    });
    let open = || {
        File::open(path).map_err(|e| CliError::user("io", format!("cannot open {}: {e}", path.display())))
    };
    let label = path.display().to_string();
    let series = parse_capacity_csv(open()?, &cell_id, cfg.nominal_ah.unwrap_or(1.0))
        .map_err(|e| CliError::from(e).context(&label))?;
    if cfg.nominal_ah.is_some() {
        return Ok(series);
    }
    let first = series.capacity_ah()[0];
    Ok(CapacitySeries::new(
        &cell_id,
        series.cycle().to_vec(),
        series.capacity_ah().to_vec(),
        first,
    )?)
}

fn knee_report(series: &CapacitySeries, analysis: &KneeAnalysis) -> KneeReport {
    let part = &analysis.partition;
    let cycle = analysis.curvature.cycle();
    let [p1, p2, p3] = part.phases();
    KneeReport {
        cell_id: series.cell_id().to_string(),
        onset_cycle: part.onset_cycle,
        knee_cycle: part.knee_cycle,
        onset_index: part.onset_index,
        knee_index: part.knee_index,
        boundary_cycles: part.boundaries.iter().map(|&i| cycle[i]).collect(),
        phase_samples: [p1.len(), p2.len(), p3.len()],
        nominal_ah: series.nominal_capacity_ah(),
        samples: analysis.curvature.len(),
        grid_start: cycle[0],
        grid_step: analysis.curvature.dt(),
        resampled: analysis.resampled,
        smoother: SmootherEcho {
            window_length: analysis.smoother.window_length(),
            poly_order: analysis.smoother.poly_order(),
        },
        segmentation: analysis.segmentation,
    }
}

fn knee_panels(analysis: &KneeAnalysis) -> Vec<Panel> {
    let part = &analysis.partition;
    let rules = vec![
        ("onset".to_string(), part.onset_cycle),
        ("knee".to_string(), part.knee_cycle),
    ];
    vec![
        Panel {
            title: format!("Capacity fade: {}", analysis.series.cell_id()),
            x_label: "cycle".into(),
            y_label: "state of health".into(),
            traces: vec![Trace {
                label: "SOH".into(),
                x: analysis.series.cycle().to_vec(),
                y: normalize(&analysis.series),
                points: false,
            }],
            rules: rules.clone(),
            ..Panel::default()
        },
        Panel {
            title: "Approximated curvature".into(),
            x_label: "cycle".into(),
            y_label: "curvature (1/cycle)".into(),
            traces: vec![Trace {
                label: "curvature".into(),
                x: analysis.curvature.cycle().to_vec(),
                y: analysis.curvature.kappa().to_vec(),
                points: false,
            }],
            rules,
            ..Panel::default()
        },
    ]
}

pub fn run_knee(cfg: AnalysisConfig) -> Result<Outcome<KneeBody>, CliError> {
    let series = load_capacity(&cfg)?;
    let analysis = analyze_knee(&series, &cfg.pipeline()?)?;
    let knee = knee_report(&series, &analysis);
    Ok(Outcome {
        panels: knee_panels(&analysis),
        document: document("knee", cfg, KneeBody { knee }, Vec::new()),
    })
}

fn psd_section(
    curv: &CurvatureSeries,
    part: &PhasePartition,
    cfg: &AnalysisConfig,
    warnings: &mut Vec<String>,
) -> PsdSection {
    let cycle = curv.cycle();
    let phases = phase_psd(curv, part, &cfg.welch())
        .into_iter()
        .filter_map(|ps| match ps.estimate {
            Ok(est) => Some(PhaseReport {
                phase: ps.phase,
                start_cycle: cycle[ps.range.start],
                end_cycle: cycle[ps.range.end - 1],
                samples: ps.range.len(),
                segment_len: est.segment_len,
                n_segments: est.n_segments,
                transform_len: est.transform_len,
                df: est.df,
                total_power: est.total_power,
                freq: est.freq,
                density: est.density,
            }),
            Err(e) => {
                warnings.push(format!("phase {} omitted: {e}", ps.phase));
                None
            }
        })
        .collect();
    PsdSection { phases }
}

fn psd_panel(psd: &PsdSection) -> Panel {
    Panel {
        title: "PSD of curvature by phase".into(),
        x_label: "frequency (1/cycle)".into(),
        y_label: "PSD".into(),
        log_x: true,
        log_y: true,
        traces: psd
            .phases
            .iter()
            .map(|p| Trace {
                label: format!("phase {}", p.phase),
                x: p.freq[1..].to_vec(),
                y: p.density[1..].to_vec(),
                points: false,
            })
            .collect(),
        ..Panel::default()
    }
}

/// Boundaries from an earlier knee report, mapped onto the current grid.
fn partition_from_report(path: &Path, curv: &CurvatureSeries) -> Result<(KneeReport, PhasePartition), CliError> {
    #[derive(Deserialize)]
    struct KneeDoc {
        knee: KneeReport,
    }
    let label = format!("knee report {}", path.display());
    let text = std::fs::read_to_string(path).map_err(|e| CliError::user("io", format!("cannot read {label}: {e}")))?;
    let doc: KneeDoc =
        serde_json::from_str(&text).map_err(|e| CliError::user("knee_report", format!("invalid {label}: {e}")))?;
    let knee = doc.knee;
    let index_of = |c: f64| -> Result<usize, CliError> {
        let pos = (c - curv.cycle()[0]) / curv.dt();
        let i = pos.round();
        if (pos - i).abs() > 1e-6 || i < 0.0 || i as usize >= curv.len() {
            return Err(CliError::user(
                "knee_report",
                format!("{label}: cycle {c} is not on the analysis grid"),
            ));
        }
        Ok(i as usize)
    };
    let (onset, kn) = (index_of(knee.onset_cycle)?, index_of(knee.knee_cycle)?);
    let part = PhasePartition::from_indices(onset, kn, curv.cycle(), Vec::new())
        .map_err(|e| CliError::from(e).context(&label))?;
    Ok((knee, part))
}

pub fn run_psd(cfg: AnalysisConfig, knee_report_path: Option<&Path>) -> Result<Outcome<PsdBody>, CliError> {
    let series = load_capacity(&cfg)?;
    let mut warnings = Vec::new();
    let (knee, curvature, partition, mut panels) = match knee_report_path {
        Some(path) => {
            let (_, _, _, curv) = curvature_pipeline(&series, &cfg.pipeline()?)?;
            let (knee, part) = partition_from_report(path, &curv)?;
            (knee, curv, part, Vec::new())
        }
        None => {
            let analysis = analyze_knee(&series, &cfg.pipeline()?)?;
            let knee = knee_report(&series, &analysis);
            let panels = knee_panels(&analysis);
            (knee, analysis.curvature, analysis.partition, panels)
        }
    };
    let psd = psd_section(&curvature, &partition, &cfg, &mut warnings);
    panels.push(psd_panel(&psd));
    Ok(Outcome {
        panels,
        document: document("psd", cfg, PsdBody { knee, psd }, warnings),
    })
}

fn ica_section(manifest: &Path, cfg: &AnalysisConfig) -> Result<(IcaSection, Vec<Panel>), CliError> {
    let rpts = load_rpts(manifest)?;
    let smoother = cfg.ic_smoother()?;
    let curves: Vec<IcCurve> = rpts
        .iter()
        .map(|r| {
            incremental_capacity(r, cfg.ica_dv, &smoother)
                .map_err(|e| CliError::from(e).context(format!("RPT {}", r.rpt_index)))
        })
        .collect::<Result<_, _>>()?;
    let track = peak_track(&curves, cfg.ica_window())?;
    let mut curves_sorted: Vec<&IcCurve> = curves.iter().collect();
    curves_sorted.sort_by_key(|c| c.rpt_index);

    let panels = vec![
        Panel {
            title: "Incremental capacity".into(),
            x_label: "voltage (V)".into(),
            y_label: "dQ/dV (Ah/V)".into(),
            traces: curves_sorted
                .iter()
                .map(|c| Trace {
                    label: format!("RPT {} ({})", c.rpt_index, c.cycle_at_rpt),
                    x: c.voltage_v.clone(),
                    y: c.dq_dv.clone(),
                    points: false,
                })
                .collect(),
            markers: track.records.iter().map(|r| (r.v_peak, r.amplitude)).collect(),
            ..Panel::default()
        },
        Panel {
            title: "Largest-peak amplitude".into(),
            x_label: "cycle".into(),
            y_label: "amplitude (Ah/V)".into(),
            traces: vec![Trace {
                label: "largest peak".into(),
                x: track.records.iter().map(|r| r.cycle_at_rpt).collect(),
                y: track.records.iter().map(|r| r.amplitude).collect(),
                points: true,
            }],
            ..Panel::default()
        },
    ];

    let section = IcaSection {
        curves: curves_sorted
            .into_iter()
            .map(|c| IcCurveReport {
                rpt_index: c.rpt_index,
                cycle_at_rpt: c.cycle_at_rpt,
                direction: c.direction,
                dv: c.dv(),
                voltage_v: c.voltage_v.clone(),
                dq_dv: c.dq_dv.clone(),
            })
            .collect(),
        saturation: *track.saturation(),
        rises_then_falls: track.rises_then_falls(),
        track: track.records,
    };
    Ok((section, panels))
}

pub fn run_ica(cfg: AnalysisConfig) -> Result<Outcome<IcaBody>, CliError> {
    let manifest = cfg
        .rpt_manifest
        .clone()
        .ok_or_else(|| CliError::user("usage", "no RPT manifest given (--input or config `rpt_manifest`)"))?;
    let (ica, panels) = ica_section(&manifest, &cfg)?;
    let mut warnings = Vec::new();
    if let Some(r) = ica.track.iter().find(|r| !r.interior) {
        warnings.push(format!(
            "RPT {} has no interior local maximum in the voltage window; the window maximum was used",
            r.rpt_index
        ));
    }
    Ok(Outcome {
        panels,
        document: document("ica", cfg, IcaBody { ica }, warnings),
    })
}

pub fn run_report(cfg: AnalysisConfig) -> Result<Outcome<ReportBody>, CliError> {
    let series = load_capacity(&cfg)?;
    let analysis = analyze_knee(&series, &cfg.pipeline()?)?;
    let knee = knee_report(&series, &analysis);
    let mut warnings = Vec::new();
    let psd = psd_section(&analysis.curvature, &analysis.partition, &cfg, &mut warnings);
    let mut panels = knee_panels(&analysis);
    panels.push(psd_panel(&psd));
    let ica = match &cfg.rpt_manifest {
        Some(path) => {
            let (section, ica_panels) = ica_section(path, &cfg)?;
            panels.extend(ica_panels);
            Some(section)
        }
        None => {
            warnings.push("no RPT manifest given; ica section omitted".into());
            None
        }
    };
    Ok(Outcome {
        panels,
        document: document("report", cfg, ReportBody { knee, psd, ica }, warnings),
    })
}
