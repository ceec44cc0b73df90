//! Incremental-capacity (dQ/dV) curves and largest-peak tracking across RPTs.

use serde::Serialize;

use crate::dataset::{Direction, RptRecord};
use crate::error::{Error, Result};
use crate::preprocess::{savgol_filter, SmootherConfig};

/// Default voltage grid step (V).
pub const DEFAULT_DV: f64 = 0.005;

/// Minimum voltage span of an RPT curve, in grid steps.
pub const MIN_SPAN_STEPS: f64 = 50.0;

/// Cubic fit over 11 grid points (55 mV at the default step).
pub fn default_ic_smoother() -> SmootherConfig {
    SmootherConfig::new(11, 3, 2).expect("static configuration is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcCurve {
    pub voltage_v: Vec<f64>,
    pub dq_dv: Vec<f64>,
    pub rpt_index: u32,
    pub cycle_at_rpt: f64,
    pub direction: Direction,
}

impl IcCurve {
    pub fn dv(&self) -> f64 {
        self.voltage_v[1] - self.voltage_v[0]
    }
}

fn interpolate_linear(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    let i = xs.partition_point(|&v| v <= t).clamp(1, n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (t - x0) / (x1 - x0);
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

/// dQ/dV on a uniform ascending voltage grid with step `dv`. Q(V) is linearly
/// interpolated onto the grid and differentiated with the Savitzky–Golay
/// filter. Discharge curves are sign-flipped so peaks are positive.
pub fn incremental_capacity(rpt: &RptRecord, dv: f64, cfg: &SmootherConfig) -> Result<IcCurve> {
    if !(dv.is_finite() && dv > 0.0) {
        return Err(Error::Domain(format!("voltage step must be positive, got {dv}")));
    }
    if cfg.max_deriv() < 1 {
        return Err(Error::Config("incremental capacity needs max_deriv >= 1".into()));
    }
    let (mut v, mut q) = (rpt.voltage_v.clone(), rpt.capacity_ah.clone());
    if rpt.direction == Direction::Discharge {
        v.reverse();
        q.reverse();
    }
    let v_lo = v[0];
    let span = v[v.len() - 1] - v_lo;
    if span < MIN_SPAN_STEPS * dv {
        return Err(Error::Domain(format!(
            "RPT {} spans {:.4} V, less than {MIN_SPAN_STEPS} steps of {dv} V",
            rpt.rpt_index, span
        )));
    }
    let n = (span / dv * (1.0 + 1e-12)).floor() as usize + 1;
    let voltage_v: Vec<f64> = (0..n).map(|k| v_lo + k as f64 * dv).collect();
    let q_grid: Vec<f64> = voltage_v.iter().map(|&t| interpolate_linear(&v, &q, t)).collect();
    let mut dq_dv = savgol_filter(&q_grid, cfg, 1, dv)?;
    if rpt.direction == Direction::Discharge {
        dq_dv.iter_mut().for_each(|d| *d = -*d);
    }
    Ok(IcCurve {
        voltage_v,
        dq_dv,
        rpt_index: rpt.rpt_index,
        cycle_at_rpt: rpt.cycle_at_rpt,
        direction: rpt.direction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub v_peak: f64,
    pub amplitude: f64,
    /// False when the window holds no interior local maximum and the window
    /// maximum was returned instead.
    pub interior: bool,
}

/// Largest interior local maximum of dQ/dV within `[v_min, v_max]`. A run of
/// equal values counts as one maximum located at its lowest voltage.
pub fn largest_peak(ic: &IcCurve, v_min: f64, v_max: f64) -> Result<Peak> {
    let tol = 1e-9;
    let idx: Vec<usize> = ic
        .voltage_v
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= v_min - tol && v <= v_max + tol)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 3 {
        return Err(Error::Domain(format!(
            "voltage window [{v_min}, {v_max}] covers {} grid points, at least 3 required",
            idx.len()
        )));
    }
    let y: Vec<f64> = idx.iter().map(|&i| ic.dq_dv[i]).collect();
    let at = |k: usize, interior: bool| Peak {
        v_peak: ic.voltage_v[idx[k]],
        amplitude: y[k],
        interior,
    };

    let mut best: Option<usize> = None;
    let mut a = 0;
    while a < y.len() {
        let mut b = a;
        while b + 1 < y.len() && y[b + 1] == y[a] {
            b += 1;
        }
        if a > 0 && b + 1 < y.len() && y[a - 1] < y[a] && y[b + 1] < y[b] && best.is_none_or(|k| y[a] > y[k]) {
            best = Some(a);
        }
        a = b + 1;
    }
    if let Some(k) = best {
        return Ok(at(k, true));
    }
    let k = (0..y.len()).fold(0, |bk, k| if y[k] > y[bk] { k } else { bk });
    Ok(at(k, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakRecord {
    pub rpt_index: u32,
    pub cycle_at_rpt: f64,
    pub v_peak: f64,
    pub amplitude: f64,
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakTrack {
    pub records: Vec<PeakRecord>,
}

impl PeakTrack {
    /// Record with the largest amplitude (earliest on ties).
    pub fn saturation(&self) -> &PeakRecord {
        self.records
            .iter()
            .reduce(|best, r| if r.amplitude > best.amplitude { r } else { best })
            .expect("a track holds at least two records")
    }

    /// True when the amplitude peaks strictly inside the track: it rises
    /// from the first RPT and falls again by the last.
    pub fn rises_then_falls(&self) -> bool {
        let sat = self.saturation();
        let first = &self.records[0];
        let last = &self.records[self.records.len() - 1];
        sat.amplitude > first.amplitude && sat.amplitude > last.amplitude
    }
}

/// Builds the peak track from precomputed IC curves, ordered by RPT index.
pub fn peak_track(curves: &[IcCurve], window: Option<(f64, f64)>) -> Result<PeakTrack> {
    if curves.len() < 2 {
        return Err(Error::InsufficientData {
            found: curves.len(),
            required: 2,
        });
    }
    let mut order: Vec<&IcCurve> = curves.iter().collect();
    order.sort_by_key(|c| c.rpt_index);
    if order.windows(2).any(|w| w[0].rpt_index == w[1].rpt_index) {
        return Err(Error::Domain("RPT indices must be unique".into()));
    }
    let records = order
        .into_iter()
        .map(|c| {
            let (lo, hi) = window.unwrap_or((c.voltage_v[0], c.voltage_v[c.voltage_v.len() - 1]));
            let p = largest_peak(c, lo, hi)?;
            Ok(PeakRecord {
                rpt_index: c.rpt_index,
                cycle_at_rpt: c.cycle_at_rpt,
                v_peak: p.v_peak,
                amplitude: p.amplitude,
                interior: p.interior,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PeakTrack { records })
}

/// IC curve and largest peak for every RPT, in RPT-index order.
pub fn peak_trajectory(
    rpts: &[RptRecord],
    dv: f64,
    cfg: &SmootherConfig,
    window: Option<(f64, f64)>,
) -> Result<PeakTrack> {
    if rpts.len() < 2 {
        return Err(Error::InsufficientData {
            found: rpts.len(),
            required: 2,
        });
    }
    let curves = rpts
        .iter()
        .map(|r| incremental_capacity(r, dv, cfg))
        .collect::<Result<Vec<_>>>()?;
    peak_track(&curves, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(v: Vec<f64>, dq: Vec<f64>) -> IcCurve {
        IcCurve {
            voltage_v: v,
            dq_dv: dq,
            rpt_index: 0,
            cycle_at_rpt: 0.0,
            direction: Direction::Charge,
        }
    }

    #[test]
    fn linear_capacity_gives_constant_ic() {
        let v: Vec<f64> = (0..200).map(|i| 3.0 + 0.006 * i as f64).collect();
        let q: Vec<f64> = v.iter().map(|x| 2.5 * (x - 3.0)).collect();
        let rpt = RptRecord::new(0, 0.0, v, q, Direction::Charge).unwrap();
        let ic = incremental_capacity(&rpt, DEFAULT_DV, &default_ic_smoother()).unwrap();
        assert!(ic.dq_dv.iter().all(|d| (d - 2.5).abs() < 1e-9));
    }

    #[test]
    fn narrow_span_rejected() {
        let v: Vec<f64> = (0..20).map(|i| 3.7 + 0.001 * i as f64).collect();
        let q: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        let rpt = RptRecord::new(0, 0.0, v, q, Direction::Charge).unwrap();
        assert!(matches!(
            incremental_capacity(&rpt, DEFAULT_DV, &default_ic_smoother()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn plateau_resolves_to_lower_voltage() {
        let v: Vec<f64> = (0..7).map(|i| 3.97 + 0.01 * i as f64).collect();
        let ic = curve(v, vec![1.0, 2.0, 3.0, 5.0, 5.0, 2.0, 1.0]);
        let p = largest_peak(&ic, 3.9, 4.1).unwrap();
        assert!((p.v_peak - 4.00).abs() < 1e-12);
        assert!(p.interior);
    }

    #[test]
    fn monotone_window_falls_back_to_max() {
        let v: Vec<f64> = (0..5).map(|i| 3.0 + 0.1 * i as f64).collect();
        let ic = curve(v, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let p = largest_peak(&ic, 3.0, 3.4).unwrap();
        assert!(!p.interior);
        assert_eq!(p.amplitude, 5.0);
    }

    #[test]
    fn empty_window_rejected() {
        let v: Vec<f64> = (0..5).map(|i| 3.0 + 0.1 * i as f64).collect();
        let ic = curve(v, vec![1.0; 5]);
        assert!(matches!(largest_peak(&ic, 4.0, 4.2), Err(Error::Domain(_))));
    }

    #[test]
    fn single_rpt_rejected() {
        let v: Vec<f64> = (0..200).map(|i| 3.0 + 0.006 * i as f64).collect();
        let rpt = RptRecord::new(0, 0.0, v.clone(), v, Direction::Charge).unwrap();
        assert!(matches!(
            peak_trajectory(&[rpt], DEFAULT_DV, &default_ic_smoother(), None),
            Err(Error::InsufficientData { found: 1, .. })
        ));
    }
}
