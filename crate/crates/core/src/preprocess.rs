//! Normalization and Savitzky–Golay smoothing/differentiation.
//!
//! The filter fits a least-squares polynomial over a sliding window and
//! evaluates it (or one of its derivatives) at the window centre. At the
//! series ends the first and last full windows are reused and evaluated at the
//! off-centre positions, so polynomials up to the fit order are reproduced
//! exactly everywhere, including the boundaries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::CapacitySeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmootherConfig {
    window_length: usize,
    poly_order: usize,
    max_deriv: usize,
}

impl SmootherConfig {
    pub fn new(window_length: usize, poly_order: usize, max_deriv: usize) -> Result<Self> {
        if window_length == 0 || window_length.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window length must be odd and positive, got {window_length}"
            )));
        }
        if window_length < poly_order + 1 {
            return Err(Error::Config(format!(
                "window length {window_length} cannot support polynomial order {poly_order}"
            )));
        }
        if max_deriv > 2 {
            return Err(Error::Config(format!("max_deriv must be 0, 1 or 2, got {max_deriv}")));
        }
        if poly_order < max_deriv {
            return Err(Error::Config(format!(
                "polynomial order {poly_order} is below the requested derivative {max_deriv}"
            )));
        }
        Ok(Self {
            window_length,
            poly_order,
            max_deriv,
        })
    }

    /// Default for a capacity series of `n` samples: cubic fit over the
    /// smallest odd window >= max(11, round(n/10)), capped at 101 and never
    /// longer than the series.
    pub fn default_for_len(n: usize) -> Result<Self> {
        let target = 11.max((0.1 * n as f64).round() as usize);
        let mut window = (target | 1).min(101);
        if window > n {
            window = if n % 2 == 1 { n } else { n.saturating_sub(1) };
        }
        let poly_order = 3.min(window.saturating_sub(1));
        Self::new(window, poly_order, poly_order.min(2))
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn poly_order(&self) -> usize {
        self.poly_order
    }

    pub fn max_deriv(&self) -> usize {
        self.max_deriv
    }
}

/// State of health: capacity divided by the nominal capacity.
pub fn normalize(series: &CapacitySeries) -> Vec<f64> {
    let nominal = series.nominal_capacity_ah();
    series.capacity_ah().iter().map(|q| q / nominal).collect()
}

/// Convolution weights that evaluate the `deriv`-th derivative of the
/// least-squares polynomial of degree `poly_order` fitted over `window`
/// unit-spaced samples, at offset `eval_offset` (in samples) from the window
/// centre. Weights are for unit sample spacing.
pub fn savgol_coefficients(
    window: usize,
    poly_order: usize,
    deriv: usize,
    eval_offset: f64,
) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) || window < poly_order + 1 {
        return Err(Error::Config(format!(
            "invalid window {window} for polynomial order {poly_order}"
        )));
    }
    if deriv > poly_order {
        return Err(Error::Config(format!(
            "derivative {deriv} exceeds polynomial order {poly_order}"
        )));
    }
    let half = (window / 2) as f64;
    // Abscissae scaled to [-1, 1] keep the design matrix well conditioned.
    let scale = if half > 0.0 { half } else { 1.0 };
    let cols = poly_order + 1;
    let design = DMatrix::from_fn(window, cols, |i, j| ((i as f64 - half) / scale).powi(j as i32));
    let pinv = design
        .pseudo_inverse(1e-13)
        .map_err(|e| Error::Config(format!("Savitzky-Golay fit is singular: {e}")))?;

    let u = eval_offset / scale;
    let mut basis = vec![0.0; cols];
    for (j, b) in basis.iter_mut().enumerate().skip(deriv) {
        // d^deriv/du^deriv of u^j
        let falling: f64 = ((j - deriv + 1)..=j).map(|v| v as f64).product();
        *b = falling * u.powi((j - deriv) as i32);
    }
    let chain = scale.powi(-(deriv as i32));
    Ok((0..window)
        .map(|i| chain * (0..cols).map(|j| basis[j] * pinv[(j, i)]).sum::<f64>())
        .collect())
}

/// Savitzky–Golay filtered `deriv`-th derivative of a uniformly sampled
/// series with spacing `dt`. The output has the input's length.
pub fn savgol_filter(y: &[f64], config: &SmootherConfig, deriv: usize, dt: f64) -> Result<Vec<f64>> {
    let w = config.window_length;
    if y.len() < w {
        return Err(Error::Config(format!(
            "series of length {} is shorter than the smoothing window {w}",
            y.len()
        )));
    }
    if deriv > config.max_deriv {
        return Err(Error::Config(format!(
            "derivative {deriv} exceeds configured maximum {}",
            config.max_deriv
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("sample spacing must be positive, got {dt}")));
    }

    let n = y.len();
    let half = w / 2;
    let scale = dt.powi(-(deriv as i32));
    let apply = |weights: &[f64], start: usize| -> f64 {
        scale * weights.iter().zip(&y[start..start + w]).map(|(c, v)| c * v).sum::<f64>()
    };

    let mut out = vec![0.0; n];
    let centre = savgol_coefficients(w, config.poly_order, deriv, 0.0)?;
    for i in half..n - half {
        out[i] = apply(&centre, i - half);
    }
    for i in 0..half {
        let head = savgol_coefficients(w, config.poly_order, deriv, i as f64 - half as f64)?;
        out[i] = apply(&head, 0);
        let tail = savgol_coefficients(w, config.poly_order, deriv, half as f64 - i as f64)?;
        out[n - 1 - i] = apply(&tail, n - w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_divides_by_nominal() {
        let cycle: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let cap = vec![5.0, 4.5, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0];
        let s = CapacitySeries::new("a", cycle, cap, 5.0).unwrap();
        let y = normalize(&s);
        assert_eq!(&y[..3], &[1.0, 0.9, 0.8]);
    }

    #[test]
    fn constant_capacity_normalizes_to_one() {
        let cycle: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let s = CapacitySeries::new("a", cycle, vec![4.2; 10], 4.2).unwrap();
        assert!(normalize(&s).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn config_invariants() {
        assert!(SmootherConfig::new(10, 2, 2).is_err());
        assert!(SmootherConfig::new(3, 3, 2).is_err());
        assert!(SmootherConfig::new(5, 1, 2).is_err());
        assert!(SmootherConfig::new(5, 2, 3).is_err());
        assert!(SmootherConfig::new(5, 2, 2).is_ok());
    }

    #[test]
    fn default_window_tracks_length() {
        assert_eq!(SmootherConfig::default_for_len(500).unwrap().window_length(), 51);
        assert_eq!(SmootherConfig::default_for_len(600).unwrap().window_length(), 61);
        assert_eq!(SmootherConfig::default_for_len(50).unwrap().window_length(), 11);
        assert_eq!(SmootherConfig::default_for_len(5000).unwrap().window_length(), 101);
        let short = SmootherConfig::default_for_len(8).unwrap();
        assert_eq!(short.window_length(), 7);
        assert_eq!(short.poly_order(), 3);
    }

    #[test]
    fn constant_is_preserved_exactly() {
        let y = vec![0.95; 40];
        let cfg = SmootherConfig::new(11, 3, 2).unwrap();
        let s = savgol_filter(&y, &cfg, 0, 1.0).unwrap();
        let worst = s.iter().map(|v| (v - 0.95).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-14, "worst {worst:e}");
    }

    #[test]
    fn linear_slope_is_recovered() {
        let y: Vec<f64> = (0..100).map(|n| 1.0 - 0.001 * n as f64).collect();
        let cfg = SmootherConfig::new(11, 2, 2).unwrap();
        let d = savgol_filter(&y, &cfg, 1, 1.0).unwrap();
        assert!(d.iter().all(|v| (v + 0.001).abs() < 1e-12));
    }

    #[test]
    fn too_short_series_is_config_error() {
        let cfg = SmootherConfig::new(11, 2, 2).unwrap();
        assert!(matches!(savgol_filter(&[1.0; 10], &cfg, 0, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn derivative_above_max_rejected() {
        let cfg = SmootherConfig::new(11, 3, 1).unwrap();
        assert!(savgol_filter(&[1.0; 20], &cfg, 2, 1.0).is_err());
    }
}
