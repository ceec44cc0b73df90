use std::f64::consts::PI;

use kneescope::dataset::{Direction, RptRecord};
use kneescope::ica::{default_ic_smoother, incremental_capacity, largest_peak, peak_trajectory, DEFAULT_DV};

const V_LO: f64 = 3.3;
const V_HI: f64 = 4.2;

/// Sum of Gaussian dQ/dV components given as (centre V, width V, area Ah).
fn density(v: f64, comps: &[(f64, f64, f64)]) -> f64 {
    comps
        .iter()
        .map(|&(mu, s, a)| a / (s * (2.0 * PI).sqrt()) * (-0.5 * ((v - mu) / s).powi(2)).exp())
        .sum()
}

/// Q(V) sampled every 1 mV, integrated with a 10 µV trapezoid rule.
fn charge_curve(comps: &[(f64, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let h = 1e-5;
    let steps = ((V_HI - V_LO) / h).round() as usize;
    let (mut v_out, mut q_out) = (vec![V_LO], vec![0.0]);
    let mut q = 0.0;
    for i in 1..=steps {
        let (a, b) = (V_LO + (i - 1) as f64 * h, V_LO + i as f64 * h);
        q += 0.5 * h * (density(a, comps) + density(b, comps));
        if i % 100 == 0 {
            v_out.push(b);
            q_out.push(q);
        }
    }
    (v_out, q_out)
}

fn charge_rpt(index: u32, comps: &[(f64, f64, f64)]) -> RptRecord {
    let (v, q) = charge_curve(comps);
    RptRecord::new(index, 100.0 * index as f64, v, q, Direction::Charge).unwrap()
}

#[test]
fn gaussian_peak_is_recovered() {
    let (mu, sigma, area) = (3.7, 0.05, 5.0);
    let rpt = charge_rpt(0, &[(mu, sigma, area)]);
    let ic = incremental_capacity(&rpt, DEFAULT_DV, &default_ic_smoother()).unwrap();
    let p = largest_peak(&ic, V_LO, V_HI).unwrap();
    let expected = area / (sigma * (2.0 * PI).sqrt());
    assert!(p.interior);
    assert!((p.v_peak - mu).abs() <= 0.005, "{}", p.v_peak);
    assert!((p.amplitude - expected).abs() <= 0.03 * expected, "{} vs {expected}", p.amplitude);
}

#[test]
fn larger_of_two_peaks_wins() {
    // Equal widths; areas chosen for peak heights 2 and 3.
    let s = 0.03;
    let k = s * (2.0 * PI).sqrt();
    let rpt = charge_rpt(0, &[(3.6, s, 2.0 * k), (3.9, s, 3.0 * k)]);
    let ic = incremental_capacity(&rpt, DEFAULT_DV, &default_ic_smoother()).unwrap();
    let p = largest_peak(&ic, V_LO, V_HI).unwrap();
    assert!((p.v_peak - 3.9).abs() <= 0.005);
    let low = largest_peak(&ic, 3.5, 3.75).unwrap();
    assert!((low.v_peak - 3.6).abs() <= 0.005);
}

#[test]
fn capacity_is_conserved() {
    let rpt = charge_rpt(0, &[(3.7, 0.05, 5.0), (3.95, 0.04, 1.5)]);
    let ic = incremental_capacity(&rpt, DEFAULT_DV, &default_ic_smoother()).unwrap();
    let integral: f64 = ic.dq_dv.iter().sum::<f64>() * ic.dv();
    let q = &rpt.capacity_ah;
    let span = q[q.len() - 1] - q[0];
    assert!((integral - span).abs() <= 0.01 * span, "{integral} vs {span}");
}

#[test]
fn discharge_branch_matches_charge_branch() {
    let comps = [(3.7, 0.05, 5.0)];
    let (v, q) = charge_curve(&comps);
    let total = q[q.len() - 1];
    let charge = RptRecord::new(1, 50.0, v.clone(), q.clone(), Direction::Charge).unwrap();
    // Discharge sweeps high to low voltage while discharged capacity grows.
    let v_dis: Vec<f64> = v.iter().rev().copied().collect();
    let q_dis: Vec<f64> = q.iter().rev().map(|x| total - x).collect();
    let discharge = RptRecord::new(1, 50.0, v_dis, q_dis, Direction::Discharge).unwrap();
    let cfg = default_ic_smoother();
    let a = incremental_capacity(&charge, DEFAULT_DV, &cfg).unwrap();
    let b = incremental_capacity(&discharge, DEFAULT_DV, &cfg).unwrap();
    assert_eq!(a.voltage_v, b.voltage_v);
    for (x, y) in a.dq_dv.iter().zip(&b.dq_dv) {
        assert!((x - y).abs() < 1e-9);
    }
    assert_eq!(b.direction, Direction::Discharge);
}

#[test]
fn scaling_capacity_scales_amplitude_only() {
    let base = charge_rpt(0, &[(3.8, 0.04, 3.0)]);
    let mut scaled = base.clone();
    scaled.capacity_ah.iter_mut().for_each(|q| *q *= 2.5);
    let cfg = default_ic_smoother();
    let a = largest_peak(&incremental_capacity(&base, DEFAULT_DV, &cfg).unwrap(), V_LO, V_HI).unwrap();
    let b = largest_peak(&incremental_capacity(&scaled, DEFAULT_DV, &cfg).unwrap(), V_LO, V_HI).unwrap();
    assert_eq!(a.v_peak, b.v_peak);
    assert!((b.amplitude - 2.5 * a.amplitude).abs() <= 1e-12 * b.amplitude);
}

#[test]
fn trajectory_rises_then_falls() {
    let sigma = 0.05;
    let heights: Vec<f64> = (0..10).map(|i| 32.0 - 0.75 * (i as f64 - 5.0).powi(2)).collect();
    let rpts: Vec<RptRecord> = heights
        .iter()
        .enumerate()
        .rev()
        .map(|(i, h)| {
            let area = h * sigma * (2.0 * PI).sqrt();
            charge_rpt(i as u32, &[(4.05, sigma, area), (3.65, 0.06, 1.0)])
        })
        .collect();
    let track = peak_trajectory(&rpts, DEFAULT_DV, &default_ic_smoother(), None).unwrap();
    assert_eq!(track.records.len(), 10);
    assert!(track.records.windows(2).all(|w| w[0].rpt_index < w[1].rpt_index));
    assert_eq!(track.saturation().rpt_index, 5);
    assert!(track.rises_then_falls());
    for (r, h) in track.records.iter().zip(&heights) {
        assert!((r.v_peak - 4.05).abs() <= 0.005);
        assert!((r.amplitude - h).abs() <= 0.03 * h);
    }
}
