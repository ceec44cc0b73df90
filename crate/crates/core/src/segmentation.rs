//! Matrix-profile arc-curve segmentation of the curvature series.
//!
//! The matrix profile pairs every length-`m` subsequence with its nearest
//! z-normalized neighbour outside a trivial-match zone. Each pair is an arc;
//! regime boundaries are where few arcs cross, i.e. the minima of the
//! corrected arc curve (CAC). With two boundaries the earlier one is the knee
//! onset and the later one the knee.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureSeries;
use crate::error::{Error, Result};

/// Subsequences whose standard deviation is below this fraction of the
/// series standard deviation are treated as flat.
pub const FLAT_REL_EPS: f64 = 1e-12;

/// Rows processed from one directly computed covariance row. Fixed so the
/// floating-point path does not depend on the thread count.
const ROW_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixProfile {
    pub distances: Vec<f64>,
    pub indices: Vec<usize>,
    pub m: usize,
    pub exclusion: usize,
}

impl MatrixProfile {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// `clamp(round(n / 20), 10, 100)`.
pub fn default_subsequence_len(n: usize) -> usize {
    ((n as f64 / 20.0).round() as usize).clamp(10, 100)
}

/// `ceil(m / 2)`.
pub fn default_exclusion(m: usize) -> usize {
    m.div_ceil(2)
}

struct Stats {
    mean: Vec<f64>,
    inv_norm: Vec<f64>,
    flat: Vec<bool>,
}

fn subsequence_stats(x: &[f64], m: usize) -> Result<Stats> {
    let n = x.len();
    let global_mean = x.iter().sum::<f64>() / n as f64;
    let global_sd = (x.iter().map(|v| (v - global_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !global_sd.is_finite() {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    let threshold = FLAT_REL_EPS * global_sd;

    let count = n - m + 1;
    let mut mean = Vec::with_capacity(count);
    let mut inv_norm = Vec::with_capacity(count);
    let mut flat = Vec::with_capacity(count);
    for w in x.windows(m) {
        let mu = w.iter().sum::<f64>() / m as f64;
        let ss = w.iter().map(|v| (v - mu).powi(2)).sum::<f64>();
        let sd = (ss / m as f64).sqrt();
        let is_flat = global_sd == 0.0 || sd < threshold || ss == 0.0;
        mean.push(mu);
        inv_norm.push(if is_flat { 0.0 } else { 1.0 / ss.sqrt() });
        flat.push(is_flat);
    }
    if flat.iter().all(|&f| f) {
        return Err(Error::Degenerate(
            "every subsequence is constant; no regime structure to segment".into(),
        ));
    }
    Ok(Stats {
        mean,
        inv_norm,
        flat,
    })
}

/// Exact z-normalized matrix profile. `distances[i]` is the minimum
/// z-normalized Euclidean distance from subsequence `i` to any subsequence `j`
/// with `|i - j| > exclusion`; ties resolve to the smallest `j`.
///
/// Flat subsequences are at distance 0 from each other and `2·sqrt(m)` from
/// everything else.
pub fn matrix_profile(x: &[f64], m: usize, exclusion: usize) -> Result<MatrixProfile> {
    let n = x.len();
    if m < 4 || 2 * m > n {
        return Err(Error::Config(format!(
            "subsequence length {m} must lie in [4, {}] for a series of length {n}",
            n / 2
        )));
    }
    if exclusion < 1 {
        return Err(Error::Config("exclusion zone must be at least 1".into()));
    }
    let count = n - m + 1;
    // The middle subsequence must have a neighbour beyond the zone.
    if (count - 1).div_ceil(2) <= exclusion {
        return Err(Error::Config(format!(
            "exclusion {exclusion} leaves no admissible neighbour among {count} subsequences"
        )));
    }

    let stats = subsequence_stats(x, m)?;
    let Stats {
        mean,
        inv_norm,
        flat,
    } = &stats;

    // Streaming covariance update terms.
    let mut df = vec![0.0; count];
    let mut dg = vec![0.0; count];
    for i in 1..count {
        df[i] = 0.5 * (x[i + m - 1] - x[i - 1]);
        dg[i] = (x[i + m - 1] - mean[i]) + (x[i - 1] - mean[i - 1]);
    }

    let direct_cov = |i: usize, j: usize| -> f64 {
        (0..m)
            .map(|k| (x[i + k] - mean[i]) * (x[j + k] - mean[j]))
            .sum()
    };
    let max_dist = 2.0 * (m as f64).sqrt();
    let two_m = 2.0 * m as f64;

    let nearest = |i: usize, cov: &[f64]| -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, &c) in cov.iter().enumerate() {
            if i.abs_diff(j) <= exclusion {
                continue;
            }
            let d = match (flat[i], flat[j]) {
                (true, true) => 0.0,
                (true, false) | (false, true) => max_dist,
                (false, false) => {
                    let rho = (c * inv_norm[i] * inv_norm[j]).clamp(-1.0, 1.0);
                    (two_m * (1.0 - rho)).max(0.0).sqrt()
                }
            };
            if d < best {
                best = d;
                best_j = j;
            }
        }
        (best, best_j)
    };

    let starts: Vec<usize> = (0..count).step_by(ROW_CHUNK).collect();
    let rows: Vec<Vec<(f64, usize)>> = starts
        .par_iter()
        .map(|&r0| {
            let r1 = (r0 + ROW_CHUNK).min(count);
            let mut cov: Vec<f64> = (0..count).map(|j| direct_cov(r0, j)).collect();
            let mut out = Vec::with_capacity(r1 - r0);
            out.push(nearest(r0, &cov));
            for i in r0 + 1..r1 {
                for j in (1..count).rev() {
                    cov[j] = cov[j - 1] + df[i] * dg[j] + df[j] * dg[i];
                }
                cov[0] = direct_cov(i, 0);
                out.push(nearest(i, &cov));
            }
            out
        })
        .collect();

    let (distances, indices) = rows.into_iter().flatten().unzip();
    Ok(MatrixProfile {
        distances,
        indices,
        m,
        exclusion,
    })
}

/// Z-normalized Euclidean distance between two equal-length windows,
/// computed directly. Flat windows follow the matrix-profile convention.
pub fn znorm_distance(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    let stats = |w: &[f64]| {
        let mu = w.iter().sum::<f64>() / m as f64;
        let sd = (w.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / m as f64).sqrt();
        (mu, sd)
    };
    let (ma, sa) = stats(a);
    let (mb, sb) = stats(b);
    match (sa == 0.0, sb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 2.0 * (m as f64).sqrt(),
        _ => a
            .iter()
            .zip(b)
            .map(|(u, v)| ((u - ma) / sa - (v - mb) / sb).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Corrected arc curve in `[0, 1]`: arcs crossing each position divided by
/// the count expected for uniformly random neighbours, `2k(L-k)/L`. The first
/// and last `m` positions are pinned to 1. Entries without a neighbour
/// (index out of range) contribute no arc.
pub fn corrected_arc_curve(mp: &MatrixProfile) -> Vec<f64> {
    let len = mp.indices.len();
    let mut delta = vec![0i64; len + 1];
    for (i, &j) in mp.indices.iter().enumerate() {
        if j >= len {
            continue;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        if hi > lo + 1 {
            delta[lo + 1] += 1;
            delta[hi] -= 1;
        }
    }
    let lf = len as f64;
    let mut crossings = 0i64;
    let mut cac = Vec::with_capacity(len);
    for (k, d) in delta.iter().take(len).enumerate() {
        crossings += d;
        let ideal = 2.0 * k as f64 * (lf - k as f64) / lf;
        let v = if ideal > 0.0 {
            (crossings as f64 / ideal).min(1.0)
        } else {
            1.0
        };
        cac.push(v);
    }
    let edge = mp.m.min(len);
    cac[..edge].fill(1.0);
    cac[len - edge..].fill(1.0);
    cac
}

/// Picks `n_boundaries` minima of the arc curve, masking `±exclusion`
/// positions around each pick. Returns indices in ascending order.
pub fn extract_regimes(cac: &[f64], n_boundaries: usize, exclusion: usize) -> Result<Vec<usize>> {
    if n_boundaries < 1 {
        return Err(Error::Config("at least one boundary must be requested".into()));
    }
    if exclusion < 1 {
        return Err(Error::Config("regime exclusion must be at least 1".into()));
    }
    if cac.len() < (n_boundaries + 1) * exclusion {
        return Err(Error::Config(format!(
            "arc curve of length {} is too short for {n_boundaries} boundaries spaced {exclusion} apart",
            cac.len()
        )));
    }
    let mut masked = vec![false; cac.len()];
    let mut picks = Vec::with_capacity(n_boundaries);
    for _ in 0..n_boundaries {
        let mut best: Option<(usize, f64)> = None;
        for (k, &v) in cac.iter().enumerate() {
            if masked[k] || v.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
        let (k, _) = best.ok_or_else(|| {
            Error::Config(format!(
                "no unmasked position left after {} boundaries",
                picks.len()
            ))
        })?;
        picks.push(k);
        let lo = k.saturating_sub(exclusion);
        let hi = (k + exclusion).min(cac.len() - 1);
        masked[lo..=hi].fill(true);
    }
    picks.sort_unstable();
    Ok(picks)
}

/// Segmentation parameters; `None` selects the length-dependent default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub m: Option<usize>,
    pub exclusion: Option<usize>,
    pub regime_exclusion_factor: f64,
    pub n_boundaries: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            m: None,
            exclusion: None,
            regime_exclusion_factor: 5.0,
            n_boundaries: 2,
        }
    }
}

/// Concrete parameters used for a series of a given length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedSegmentation {
    pub m: usize,
    pub exclusion: usize,
    pub regime_exclusion: usize,
    pub n_boundaries: usize,
}

impl SegmentationConfig {
    pub fn resolve(&self, n: usize) -> Result<ResolvedSegmentation> {
        let m = self.m.unwrap_or_else(|| default_subsequence_len(n));
        if n < 4 * m {
            return Err(Error::Config(format!(
                "curvature series of length {n} is shorter than 4·m = {}",
                4 * m
            )));
        }
        if self.n_boundaries < 2 {
            return Err(Error::Config(
                "knee identification needs at least two boundaries".into(),
            ));
        }
        if !(self.regime_exclusion_factor.is_finite() && self.regime_exclusion_factor > 0.0) {
            return Err(Error::Config(format!(
                "regime exclusion factor must be positive, got {}",
                self.regime_exclusion_factor
            )));
        }
        // Arc-curve positions outside the two edge clamps.
        let len = n + 1 - 3 * m;
        let regime_exclusion = ((self.regime_exclusion_factor * m as f64).round() as usize)
            .min(len / (self.n_boundaries + 1))
            .max(1);
        Ok(ResolvedSegmentation {
            m,
            exclusion: self.exclusion.unwrap_or_else(|| default_exclusion(m)),
            regime_exclusion,
            n_boundaries: self.n_boundaries,
        })
    }
}

/// Knee-onset and knee split the series into three phases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePartition {
    pub onset_index: usize,
    pub knee_index: usize,
    pub onset_cycle: f64,
    pub knee_cycle: f64,
    pub len: usize,
    /// All boundaries found, ascending; onset and knee are the first and last.
    pub boundaries: Vec<usize>,
    pub cac: Vec<f64>,
}

impl PhasePartition {
    /// Partition of a series sampled at `cycle` with the given boundaries.
    pub fn from_indices(
        onset_index: usize,
        knee_index: usize,
        cycle: &[f64],
        cac: Vec<f64>,
    ) -> Result<Self> {
        let len = cycle.len();
        if !(0 < onset_index && onset_index < knee_index && knee_index + 1 < len) {
            return Err(Error::Domain(format!(
                "boundaries ({onset_index}, {knee_index}) do not satisfy 0 < onset < knee < {}",
                len.saturating_sub(1)
            )));
        }
        Ok(Self {
            onset_index,
            knee_index,
            onset_cycle: cycle[onset_index],
            knee_cycle: cycle[knee_index],
            len,
            boundaries: vec![onset_index, knee_index],
            cac,
        })
    }

    /// Index ranges of phases 1, 2 and 3.
    pub fn phases(&self) -> [Range<usize>; 3] {
        [
            0..self.onset_index,
            self.onset_index..self.knee_index,
            self.knee_index..self.len,
        ]
    }
}

/// Matrix profile, corrected arc curve and regime extraction on a curvature
/// series.
pub fn identify_knee(curv: &CurvatureSeries, cfg: &SegmentationConfig) -> Result<PhasePartition> {
    let params = cfg.resolve(curv.len())?;
    let mp = matrix_profile(curv.kappa(), params.m, params.exclusion)?;
    let cac = corrected_arc_curve(&mp);
    // Positions inside the edge clamp are never boundaries.
    let interior = &cac[params.m..cac.len() - params.m];
    let boundaries: Vec<usize> = extract_regimes(interior, params.n_boundaries, params.regime_exclusion)?
        .into_iter()
        .map(|k| k + params.m)
        .collect();
    let onset = boundaries[0];
    let knee = boundaries[boundaries.len() - 1];
    let mut part = PhasePartition::from_indices(onset, knee, curv.cycle(), cac)?;
    part.boundaries = boundaries;
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        assert_eq!(default_subsequence_len(500), 25);
        assert_eq!(default_subsequence_len(100), 10);
        assert_eq!(default_subsequence_len(5000), 100);
        assert_eq!(default_exclusion(25), 13);
        assert_eq!(default_exclusion(8), 4);
    }

    #[test]
    fn m_out_of_range() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        assert!(matches!(matrix_profile(&x, 3, 2), Err(Error::Config(_))));
        assert!(matches!(matrix_profile(&x, 21, 2), Err(Error::Config(_))));
        assert!(matches!(matrix_profile(&x, 8, 0), Err(Error::Config(_))));
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert!(matches!(matrix_profile(&[1.5; 64], 8, 4), Err(Error::Degenerate(_))));
    }

    #[test]
    fn exact_copies_point_at_each_other() {
        let pattern = [0.0, 1.0, 3.0, -2.0, 0.5, 2.5, -1.0, 0.2];
        let mut x: Vec<f64> = (0..60).map(|i| ((i * 37 % 11) as f64 * 0.7).sin() * 0.01).collect();
        x[5..13].copy_from_slice(&pattern);
        x[40..48].copy_from_slice(&pattern);
        let mp = matrix_profile(&x, 8, 4).unwrap();
        assert!(mp.distances[5] < 1e-6);
        assert!(mp.distances[40] < 1e-6);
        assert_eq!(mp.indices[5], 40);
        assert_eq!(mp.indices[40], 5);
    }

    #[test]
    fn no_arcs_cross_right_part() {
        // Every arc lives in [0, 50); positions beyond 50 see no crossings.
        let len = 200;
        let indices: Vec<usize> = (0..len)
            .map(|i| if i < 50 { (i + 25) % 50 } else { usize::MAX })
            .collect();
        let mp = MatrixProfile {
            distances: vec![1.0; len],
            indices,
            m: 10,
            exclusion: 5,
        };
        let cac = corrected_arc_curve(&mp);
        assert_eq!(cac.len(), len);
        for k in 50..len - 10 {
            assert_eq!(cac[k], 0.0, "k = {k}");
        }
        assert!(cac.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(cac[..10].iter().chain(&cac[len - 10..]).all(|&v| v == 1.0));
    }

    #[test]
    fn regimes_at_constructed_minima() {
        let mut cac = vec![0.6; 600];
        for (k, v) in cac.iter_mut().enumerate() {
            *v = 0.3 + 0.5 * ((k as f64) * 0.05).sin().abs();
        }
        cac[190] = 0.0;
        cac[452] = 0.0;
        assert_eq!(extract_regimes(&cac, 2, 25).unwrap(), vec![190, 452]);
    }

    #[test]
    fn monotone_decreasing_picks_last() {
        let cac: Vec<f64> = (0..100).map(|k| 1.0 - k as f64 / 100.0).collect();
        assert_eq!(extract_regimes(&cac, 1, 10).unwrap(), vec![99]);
    }

    #[test]
    fn ties_break_to_smallest_index() {
        let mut cac = vec![0.9; 300];
        cac[100] = 0.1;
        cac[101] = 0.1;
        cac[250] = 0.2;
        assert_eq!(extract_regimes(&cac, 2, 25).unwrap(), vec![100, 250]);
    }

    #[test]
    fn too_short_for_regimes() {
        assert!(matches!(extract_regimes(&[0.5; 40], 2, 20), Err(Error::Config(_))));
    }

    #[test]
    fn partition_ranges() {
        let cycle: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let p = PhasePartition::from_indices(3, 7, &cycle, vec![]).unwrap();
        assert_eq!(p.phases(), [0..3, 3..7, 7..10]);
        assert_eq!(p.onset_cycle, 6.0);
        assert!(PhasePartition::from_indices(7, 3, &cycle, vec![]).is_err());
        assert!(PhasePartition::from_indices(0, 3, &cycle, vec![]).is_err());
        assert!(PhasePartition::from_indices(3, 9, &cycle, vec![]).is_err());
    }
}
