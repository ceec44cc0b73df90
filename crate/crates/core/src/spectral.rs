//! Power spectral density estimation.
//!
//! Conventions, for a length-`N` record `x(n)` sampled every `dt` cycles and
//! a window `r(n)`:
//!
//! * `X(k) = Σ x(n) r(n) exp(-j2πnk/N)`
//! * `C = sqrt(Σ r(n)²)`
//! * energy `E = dt Σ |X(k)/C|²`, power `P = E / (N dt)`
//! * two-sided density `S(k) = dt |X(k)/C|²` on bins of width `1/(N dt)`
//!
//! Estimates are stored one-sided: bins `0..=N/2`, interior bins carry the
//! sum of the positive- and negative-frequency densities, DC and Nyquist are
//! not doubled. `total_power` is the two-sided sum `Σ S(k) df`.

use std::ops::Range;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureSeries;
use crate::error::{Error, Result};
use crate::segmentation::PhasePartition;

/// Shortest phase for which a spectrum is estimated.
pub const MIN_PHASE_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    #[serde(alias = "rect")]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub length: usize,
}

pub fn window_coefficients(spec: WindowSpec) -> Result<Vec<f64>> {
    let n = spec.length;
    match spec.kind {
        WindowKind::Rectangular => {
            if n == 0 {
                return Err(Error::Config("window length must be positive".into()));
            }
            Ok(vec![1.0; n])
        }
        WindowKind::Hann => {
            // N = 2 gives [0, 0], which has no normalization constant.
            if n < 3 {
                return Err(Error::Config(format!(
                    "Hann window needs at least 3 points, got {n}"
                )));
            }
            let denom = (n - 1) as f64;
            Ok((0..n)
                .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / denom).cos()))
                .collect())
        }
    }
}

/// `C = sqrt(Σ r²)`.
pub fn normalization_constant(r: &[f64]) -> Result<f64> {
    let c = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if c > 0.0 && c.is_finite() {
        Ok(c)
    } else {
        Err(Error::Domain("window is identically zero".into()))
    }
}

fn fft_forward(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// DFT of `x·r`.
pub fn windowed_dft(x: &[f64], r: &[f64]) -> Result<Vec<Complex64>> {
    if x.len() != r.len() {
        return Err(Error::Contract(format!(
            "series length {} differs from window length {}",
            x.len(),
            r.len()
        )));
    }
    let mut buf: Vec<Complex64> = x.iter().zip(r).map(|(a, w)| Complex64::new(a * w, 0.0)).collect();
    fft_forward(&mut buf);
    Ok(buf)
}

/// `E = dt Σ |X(k)/C|²`.
pub fn signal_energy(spectrum: &[Complex64], c: f64, dt: f64) -> f64 {
    dt * spectrum.iter().map(|z| (z / c).norm_sqr()).sum::<f64>()
}

/// `P = E / (N dt)`.
pub fn signal_power(spectrum: &[Complex64], c: f64, n: usize, dt: f64) -> f64 {
    signal_energy(spectrum, c, dt) / (n as f64 * dt)
}

/// One-sided spectral density estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdEstimate {
    /// Frequencies in cycle⁻¹, `k / (transform_len · dt)`.
    pub freq: Vec<f64>,
    pub density: Vec<f64>,
    pub df: f64,
    pub dt: f64,
    pub total_power: f64,
    pub segment_len: usize,
    pub n_segments: usize,
    pub transform_len: usize,
}

impl PsdEstimate {
    fn from_two_sided(two_sided: &[f64], dt: f64, segment_len: usize, n_segments: usize) -> Self {
        let m = two_sided.len();
        let df = 1.0 / (m as f64 * dt);
        let half = m / 2;
        let mut density = Vec::with_capacity(half + 1);
        density.push(two_sided[0]);
        for k in 1..=half {
            if 2 * k == m {
                density.push(two_sided[k]);
            } else {
                density.push(two_sided[k] + two_sided[m - k]);
            }
        }
        let freq = (0..=half).map(|k| k as f64 / (m as f64 * dt)).collect();
        let total_power = two_sided.iter().sum::<f64>() * df;
        Self {
            freq,
            density,
            df,
            dt,
            total_power,
            segment_len,
            n_segments,
            transform_len: m,
        }
    }

    /// Index of the largest density value (first on ties).
    pub fn argmax(&self) -> usize {
        self.density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("sampling interval must be positive, got {dt}")))
    }
}

/// Windowed frequency-discrete PSD of a single record.
pub fn psd_windowed(x: &[f64], spec: WindowSpec, dt: f64) -> Result<PsdEstimate> {
    check_dt(dt)?;
    if x.len() != spec.length {
        return Err(Error::Contract(format!(
            "series length {} differs from window length {}",
            x.len(),
            spec.length
        )));
    }
    let r = window_coefficients(spec)?;
    let c = normalization_constant(&r)?;
    let spectrum = windowed_dft(x, &r)?;
    let two_sided: Vec<f64> = spectrum.iter().map(|z| dt * (z / c).norm_sqr()).collect();
    Ok(PsdEstimate::from_two_sided(&two_sided, dt, x.len(), 1))
}

/// Classical periodogram `(1/N)|Σ x(n) exp(-j2πnk/N)|²`, scaled by `dt`.
pub fn periodogram(x: &[f64], dt: f64) -> Result<PsdEstimate> {
    check_dt(dt)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            found: n,
            required: 2,
        });
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut buf);
    let two_sided: Vec<f64> = buf.iter().map(|z| dt * z.norm_sqr() / n as f64).collect();
    Ok(PsdEstimate::from_two_sided(&two_sided, dt, n, 1))
}

/// How the Welch segment length is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLength {
    /// `max(8, ⌊2N/9⌋)`, about eight half-overlapping segments.
    Auto,
    Samples(usize),
    /// Split the record into this many segments of `⌊N/K⌋` samples.
    Segments(usize),
}

impl SegmentLength {
    pub fn resolve(self, n: usize) -> Result<usize> {
        match self {
            SegmentLength::Auto => Ok((2 * n / 9).max(8).min(n)),
            SegmentLength::Samples(s) => Ok(s),
            SegmentLength::Segments(0) => Err(Error::Config("segment count must be at least 1".into())),
            SegmentLength::Segments(k) => Ok(n / k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_len: SegmentLength,
    pub overlap: f64,
    pub window: WindowKind,
    /// Subtract each segment's mean before windowing.
    pub detrend: bool,
    /// Zero-pad each segment to this transform length.
    pub pad_to: Option<usize>,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_len: SegmentLength::Auto,
            overlap: 0.5,
            window: WindowKind::Hann,
            detrend: true,
            pad_to: None,
        }
    }
}

fn averaged_segments(
    x: &[f64],
    segment_len: usize,
    hop: usize,
    window: &[f64],
    detrend: bool,
    transform_len: usize,
    dt: f64,
) -> Result<PsdEstimate> {
    let c = normalization_constant(window)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(transform_len);
    let mut acc = vec![0.0; transform_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); transform_len];
    let mut n_segments = 0usize;
    let mut start = 0;
    while start + segment_len <= x.len() {
        let seg = &x[start..start + segment_len];
        let offset = if detrend {
            seg.iter().sum::<f64>() / segment_len as f64
        } else {
            0.0
        };
        buf.fill(Complex64::new(0.0, 0.0));
        for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(window) {
            *b = Complex64::new((v - offset) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += dt * (z / c).norm_sqr();
        }
        n_segments += 1;
        start += hop;
    }
    let k = n_segments as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(PsdEstimate::from_two_sided(&acc, dt, segment_len, n_segments))
}

/// Welch estimate: mean of windowed segment PSDs with hop
/// `max(1, round(L (1 - overlap)))`. Trailing samples that do not fill a
/// segment are ignored.
pub fn welch_psd(x: &[f64], cfg: &WelchConfig, dt: f64) -> Result<PsdEstimate> {
    check_dt(dt)?;
    let n = x.len();
    let seg = cfg.segment_len.resolve(n)?;
    if seg < 4 {
        return Err(Error::Config(format!("segment length must be at least 4, got {seg}")));
    }
    if seg > n {
        return Err(Error::Config(format!(
            "segment length {seg} exceeds series length {n}"
        )));
    }
    if !(cfg.overlap.is_finite() && (0.0..1.0).contains(&cfg.overlap)) {
        return Err(Error::Config(format!(
            "overlap must lie in [0, 1), got {}",
            cfg.overlap
        )));
    }
    let transform_len = cfg.pad_to.unwrap_or(seg);
    if transform_len < seg {
        return Err(Error::Config(format!(
            "padded length {transform_len} is shorter than the segment length {seg}"
        )));
    }
    let hop = ((seg as f64 * (1.0 - cfg.overlap)).round() as usize).max(1);
    let window = window_coefficients(WindowSpec {
        kind: cfg.window,
        length: seg,
    })?;
    averaged_segments(x, seg, hop, &window, cfg.detrend, transform_len, dt)
}

/// Bartlett estimate: mean periodogram of `n_segments` disjoint segments of
/// `⌊N/K⌋` samples.
pub fn bartlett_psd(x: &[f64], n_segments: usize, dt: f64) -> Result<PsdEstimate> {
    if n_segments < 1 {
        return Err(Error::Config("segment count must be at least 1".into()));
    }
    let seg = x.len() / n_segments;
    if seg < 4 {
        return Err(Error::Config(format!(
            "{n_segments} segments leave {seg} samples each; at least 4 required"
        )));
    }
    welch_psd(
        x,
        &WelchConfig {
            segment_len: SegmentLength::Samples(seg),
            overlap: 0.0,
            window: WindowKind::Rectangular,
            detrend: false,
            pad_to: None,
        },
        dt,
    )
}

/// Welch spectrum of one degradation phase.
#[derive(Debug)]
pub struct PhaseSpectrum {
    pub phase: u8,
    pub range: Range<usize>,
    pub estimate: Result<PsdEstimate>,
}

/// Welch PSD of the curvature within each of the three phases. A fixed
/// segment length longer than a phase is shrunk to the phase length; phases
/// shorter than [`MIN_PHASE_LEN`] yield a degenerate-phase error.
pub fn phase_psd(curv: &CurvatureSeries, part: &PhasePartition, cfg: &WelchConfig) -> Vec<PhaseSpectrum> {
    part.phases()
        .into_iter()
        .zip(1u8..)
        .map(|(range, phase)| {
            let estimate = phase_estimate(curv, range.clone(), phase, cfg);
            PhaseSpectrum {
                phase,
                range,
                estimate,
            }
        })
        .collect()
}

fn phase_estimate(curv: &CurvatureSeries, range: Range<usize>, phase: u8, cfg: &WelchConfig) -> Result<PsdEstimate> {
    let kappa = curv.kappa().get(range.clone()).ok_or_else(|| {
        Error::Contract(format!(
            "phase range {range:?} exceeds curvature length {}",
            curv.len()
        ))
    })?;
    let len = kappa.len();
    if len < MIN_PHASE_LEN {
        return Err(Error::DegeneratePhase {
            phase,
            len,
            required: MIN_PHASE_LEN,
        });
    }
    let mut local = *cfg;
    if let SegmentLength::Samples(s) = cfg.segment_len {
        local.segment_len = SegmentLength::Samples(s.min(len));
    }
    welch_psd(kappa, &local, curv.dt())
}
