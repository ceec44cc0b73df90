use kneescope::curvature::CurvatureSeries;
use kneescope::segmentation::{
    corrected_arc_curve, identify_knee, matrix_profile, znorm_distance, MatrixProfile, SegmentationConfig,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

/// O(N²m) reference: z-normalize each window explicitly and scan all pairs.
fn brute_force(x: &[f64], m: usize, excl: usize) -> (Vec<f64>, Vec<usize>) {
    let count = x.len() - m + 1;
    let z: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            let w = &x[i..i + m];
            let mu = w.iter().sum::<f64>() / m as f64;
            let sd = (w.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64).sqrt();
            w.iter().map(|v| (v - mu) / sd).collect()
        })
        .collect();
    let mut dist = Vec::new();
    let mut idx = Vec::new();
    for i in 0..count {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..count {
            if i.abs_diff(j) <= excl {
                continue;
            }
            let d = z[i].iter().zip(&z[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d < best.0 {
                best = (d, j);
            }
        }
        dist.push(best.0);
        idx.push(best.1);
    }
    (dist, idx)
}

fn noise(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(7);
    for trial in 0..20 {
        let n = rng.random_range(64..=128);
        let m: usize = if trial % 2 == 0 { 8 } else { 16 };
        let x = noise(&mut rng, n);
        let excl = m.div_ceil(2);
        let mp = matrix_profile(&x, m, excl).unwrap();
        let (d, i) = brute_force(&x, m, excl);
        assert_eq!(mp.indices, i, "trial {trial}");
        for (a, b) in mp.distances.iter().zip(&d) {
            assert!((a - b).abs() <= 1e-6 * b.max(1e-12), "trial {trial}: {a} vs {b}");
        }
    }
}

#[test]
fn long_series_crosses_chunk_boundaries() {
    let mut rng = StdRng::seed_from_u64(11);
    let x: Vec<f64> = (0..400)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            (i as f64 * 0.13).sin() + 0.3 * e + 1e3
        })
        .collect();
    let mp = matrix_profile(&x, 20, 10).unwrap();
    let (d, i) = brute_force(&x, 20, 10);
    assert_eq!(mp.indices, i);
    for (a, b) in mp.distances.iter().zip(&d) {
        assert!((a - b).abs() <= 1e-6 * b.max(1e-12));
    }
}

#[test]
fn affine_map_leaves_profile_unchanged() {
    let mut rng = StdRng::seed_from_u64(3);
    let x = noise(&mut rng, 120);
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
    let a = matrix_profile(&x, 8, 4).unwrap();
    let b = matrix_profile(&y, 8, 4).unwrap();
    assert_eq!(a.indices, b.indices);
    for (p, q) in a.distances.iter().zip(&b.distances) {
        assert!((p - q).abs() < 1e-9);
    }
}

#[test]
fn reported_distance_matches_pair() {
    let mut rng = StdRng::seed_from_u64(5);
    let x = noise(&mut rng, 300);
    let m = 15;
    let mp = matrix_profile(&x, m, 8).unwrap();
    for (i, (&d, &j)) in mp.distances.iter().zip(&mp.indices).enumerate() {
        let direct = znorm_distance(&x[i..i + m], &x[j..j + m]);
        assert!((d - direct).abs() <= 1e-6 * direct.max(1e-12), "{i}");
    }
}

#[test]
fn independent_of_thread_count() {
    let mut rng = StdRng::seed_from_u64(9);
    let x = noise(&mut rng, 700);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| matrix_profile(&x, 30, 15).unwrap())
    };
    let a = run(1);
    let b = run(8);
    assert_eq!(a.indices, b.indices);
    assert!(a.distances.iter().zip(&b.distances).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn random_arcs_give_cac_near_one() {
    let mut rng = StdRng::seed_from_u64(21);
    let (len, m, excl) = (500, 10, 5);
    let mut means = Vec::new();
    for _ in 0..100 {
        let indices = (0..len)
            .map(|i: usize| loop {
                let j = rng.random_range(0..len);
                if i.abs_diff(j) > excl {
                    break j;
                }
            })
            .collect();
        let mp = MatrixProfile {
            distances: vec![0.0; len],
            indices,
            m,
            exclusion: excl,
        };
        let cac = corrected_arc_curve(&mp);
        let interior = &cac[m..len - m];
        means.push(interior.iter().sum::<f64>() / interior.len() as f64);
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    assert!((0.85..=1.0).contains(&mean), "mean interior CAC {mean}");
}

fn two_change_series(seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..360)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            let f = i as f64;
            match i {
                0..120 => (f * 0.31).sin() + 0.05 * e,
                120..240 => ((f * 0.07).sin() * 3.0).signum() + 0.05 * e,
                _ => (f * 0.9).sin() * (f * 0.05).cos() + 0.05 * e,
            }
        })
        .collect()
}

#[test]
fn recovers_three_distinct_regimes() {
    let x = two_change_series(1);
    let curv = CurvatureSeries::on_grid(0.0, 1.0, x).unwrap();
    let part = identify_knee(&curv, &SegmentationConfig::default()).unwrap();
    assert!(part.onset_index.abs_diff(120) <= 15, "onset {}", part.onset_index);
    assert!(part.knee_index.abs_diff(240) <= 15, "knee {}", part.knee_index);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decision_is_affine_invariant(seed in 0u64..1000, a in 0.01f64..100.0, b in -10.0f64..10.0) {
        let x = two_change_series(seed);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let cfg = SegmentationConfig::default();
        let p = identify_knee(&CurvatureSeries::on_grid(0.0, 1.0, x).unwrap(), &cfg).unwrap();
        let q = identify_knee(&CurvatureSeries::on_grid(0.0, 1.0, y).unwrap(), &cfg).unwrap();
        prop_assert_eq!(p.onset_index, q.onset_index);
        prop_assert_eq!(p.knee_index, q.knee_index);
        prop_assert!(p.onset_index < p.knee_index);
    }

    #[test]
    fn cac_stays_in_unit_interval(seed in 0u64..10_000, n in 80usize..300) {
        let mut rng = StdRng::seed_from_u64(seed);
        let x = noise(&mut rng, n);
        let mp = matrix_profile(&x, 10, 5).unwrap();
        let cac = corrected_arc_curve(&mp);
        prop_assert_eq!(cac.len(), mp.len());
        prop_assert!(cac.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn boundaries_avoid_edge_clamp(seed in 0u64..10_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let curv = CurvatureSeries::on_grid(0.0, 1.0, noise(&mut rng, 400)).unwrap();
        let cfg = SegmentationConfig::default();
        let m = cfg.resolve(400).unwrap().m;
        let part = identify_knee(&curv, &cfg).unwrap();
        prop_assert!(part.onset_index >= m);
        prop_assert!(part.knee_index < 400 - 2 * m + 1);
        prop_assert!(part.onset_index < part.knee_index);
    }
}
