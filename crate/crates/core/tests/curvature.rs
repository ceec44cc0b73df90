use kneescope::curvature::{approximate_curvature, curvature_from_derivatives};
use kneescope::dataset::CapacitySeries;
use kneescope::preprocess::{savgol_filter, SmootherConfig};

fn series(n: usize, nominal: f64, f: impl Fn(f64) -> f64) -> CapacitySeries {
    let cycle: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let cap = cycle.iter().map(|&c| f(c)).collect();
    CapacitySeries::new("t", cycle, cap, nominal).unwrap()
}

#[test]
fn circle_has_inverse_radius_curvature() {
    // Lower semicircle of radius 10 sampled over its middle; curvature +0.1.
    let (r, dt) = (10.0, 0.01);
    let x: Vec<f64> = (-500..=500).map(|i| i as f64 * dt).collect();
    let y: Vec<f64> = x.iter().map(|t| -(r * r - t * t).sqrt()).collect();
    let cfg = SmootherConfig::new(21, 4, 2).unwrap();
    let y1 = savgol_filter(&y, &cfg, 1, dt).unwrap();
    let y2 = savgol_filter(&y, &cfg, 2, dt).unwrap();
    let k = curvature_from_derivatives(&y1, &y2).unwrap();
    for v in &k[10..k.len() - 10] {
        assert!((v - 0.1).abs() < 1e-6, "{v}");
    }
}

#[test]
fn quadratic_fade_curvature() {
    let s = series(500, 5.0, |n| 5.0 * (1.0 - 1e-7 * n * n));
    let cfg = SmootherConfig::default_for_len(500).unwrap();
    let c = approximate_curvature(&s, &cfg).unwrap();
    for (n, k) in c.cycle().iter().zip(c.kappa()) {
        let slope = -2e-7 * n;
        let exact = -2e-7 / (1.0 + slope * slope).powf(1.5);
        assert!((k - exact).abs() < 0.05 * exact.abs(), "cycle {n}: {k}");
    }
}

#[test]
fn nominal_capacity_scales_the_normalized_curve() {
    let f = |n: f64| 5.0 * (1.0 - 1e-4 * n - 3e-4 * ((n / 150.0).exp() - 1.0));
    let cfg = SmootherConfig::default_for_len(600).unwrap();
    let a = approximate_curvature(&series(600, 5.0, f), &cfg).unwrap();
    let b = approximate_curvature(&series(600, 10.0, f), &cfg).unwrap();
    // Slopes are tiny, so curvature is essentially y'' and halves.
    for (p, q) in a.kappa().iter().zip(b.kappa()) {
        assert!((q - 0.5 * p).abs() <= 1e-6 * p.abs());
    }
}

#[test]
fn grid_spacing_enters_derivatives() {
    let cycle: Vec<f64> = (0..300).map(|i| 2.0 * i as f64).collect();
    let cap = cycle.iter().map(|n| 5.0 * (1.0 - 1e-7 * n * n)).collect();
    let s = CapacitySeries::new("dt2", cycle, cap, 5.0).unwrap();
    let c = approximate_curvature(&s, &SmootherConfig::default_for_len(300).unwrap()).unwrap();
    assert_eq!(c.dt(), 2.0);
    assert!(c.kappa().iter().all(|k| (k + 2e-7).abs() < 0.05 * 2e-7));
}
