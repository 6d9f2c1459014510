mod common;

use common::*;
use proptest::prelude::*;
use tofcorr::eval::{evaluate, rpe};
use tofcorr::filters::{gradients, laplacian, lbp};
use tofcorr::forest::{self, FeatureMatrix, ForestConfig, MaxFeatures, RegressionForest};
use tofcorr::raster::{Mask, Raster};
use tofcorr::rng::PortableRng;
use tofcorr::tofsim::{combine_phasors, FrameSet, PhasorReturn, ToFConfig};

fn raster_strategy(max: usize) -> impl Strategy<Value = Raster> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(-100.0f64..100.0, w * h)
            .prop_map(move |data| Raster::from_vec(w, h, data).unwrap())
    })
}

fn max_abs_diff(a: &Raster, b: &Raster) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn returns_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.01f64..10.0, 0.0f64..30.0), 1..8)
}

proptest! {
    #[test]
    fn phasor_matches_complex_sum(returns in returns_strategy()) {
        let cfg = ToFConfig::default();
        let range = cfg.unambiguous_range();
        let set: Vec<PhasorReturn> = returns.iter().map(|&(a, d)| PhasorReturn::new(a, d)).collect();
        let (depth, amp) = combine_phasors(&set, &cfg).unwrap();
        let (od, oa) = phasor_oracle(&returns, cfg.modulation_frequency);
        prop_assert!((0.0..range).contains(&depth));
        prop_assert!((amp - oa).abs() <= 1e-9 * oa.max(1.0));
        // The phase is ill-conditioned when the sum nearly cancels.
        if oa > 1e-3 {
            prop_assert!(circular_diff(depth, od, range) < 1e-9 / oa.min(1.0));
        }
    }

    #[test]
    fn phasor_wraps_by_range(returns in returns_strategy(), k in 1u32..4) {
        let cfg = ToFConfig::default();
        let range = cfg.unambiguous_range();
        let base: Vec<PhasorReturn> = returns.iter().map(|&(a, d)| PhasorReturn::new(a, d)).collect();
        let shifted: Vec<PhasorReturn> = returns
            .iter()
            .map(|&(a, d)| PhasorReturn::new(a, d + k as f64 * range))
            .collect();
        let (d0, a0) = combine_phasors(&base, &cfg).unwrap();
        let (d1, a1) = combine_phasors(&shifted, &cfg).unwrap();
        prop_assert!((a0 - a1).abs() <= 1e-9 * a0.max(1.0));
        if a0 > 1e-3 {
            prop_assert!(circular_diff(d0, d1, range) < 1e-8);
        }
    }

    #[test]
    fn phasor_scale_invariant(returns in returns_strategy(), s in 0.1f64..100.0) {
        let cfg = ToFConfig::default();
        let range = cfg.unambiguous_range();
        let base: Vec<PhasorReturn> = returns.iter().map(|&(a, d)| PhasorReturn::new(a, d)).collect();
        let scaled: Vec<PhasorReturn> = returns.iter().map(|&(a, d)| PhasorReturn::new(a * s, d)).collect();
        let (d0, a0) = combine_phasors(&base, &cfg).unwrap();
        let (d1, a1) = combine_phasors(&scaled, &cfg).unwrap();
        prop_assert!((a1 - s * a0).abs() <= 1e-9 * (s * a0).max(1.0));
        if a0 > 1e-3 {
            prop_assert!(circular_diff(d0, d1, range) < 1e-8);
        }
    }

    #[test]
    fn laplacian_matches_direct(img in raster_strategy(14), k in prop::sample::select(vec![3usize, 5, 7])) {
        let got = laplacian(&img, k).unwrap();
        let want = laplacian_oracle(&img, k);
        prop_assert!(max_abs_diff(&got, &want) < 1e-9);
    }

    #[test]
    fn gradients_match_direct(img in raster_strategy(14)) {
        let g = gradients(&img);
        let o = gradient_oracle(&img);
        prop_assert!(max_abs_diff(&g.grad_x, &o.gx) < 1e-9);
        prop_assert!(max_abs_diff(&g.grad_y, &o.gy) < 1e-9);
        prop_assert!(max_abs_diff(&g.grad_xy, &o.gxy) < 1e-8);
        prop_assert!(max_abs_diff(&g.magnitude, &o.magnitude) < 1e-9);
    }

    #[test]
    fn lbp_matches_direct(img in raster_strategy(14)) {
        prop_assert_eq!(lbp(&img), lbp_oracle(&img));
    }

    #[test]
    fn lbp_ignores_monotone_remap(img in raster_strategy(14), a in 0.5f64..4.0, b in -50.0f64..50.0) {
        let remapped = img.map(|v| a * v + b);
        // An affine map can merge distinct neighbours through rounding.
        let distinct = {
            let mut v = img.as_slice().to_vec();
            v.sort_by(f64::total_cmp);
            v.windows(2).all(|p| p[1] - p[0] > 1e-6 || p[1] == p[0])
        };
        prop_assume!(distinct);
        prop_assert_eq!(lbp(&img), lbp(&remapped));
    }

    #[test]
    fn laplacian_is_linear(a in raster_strategy(10), s in -5.0f64..5.0) {
        let (w, h) = a.dims();
        let b = Raster::from_fn(w, h, |x, y| (x * 7 + y * 3) as f64);
        let sum = Raster::from_fn(w, h, |x, y| s * a.get(x, y) + b.get(x, y));
        let la = laplacian(&a, 5).unwrap();
        let lb = laplacian(&b, 5).unwrap();
        let ls = laplacian(&sum, 5).unwrap();
        let combined = Raster::from_fn(w, h, |x, y| s * la.get(x, y) + lb.get(x, y));
        prop_assert!(max_abs_diff(&ls, &combined) < 1e-8);
    }

    #[test]
    fn rpe_is_scale_free(gt in 0.1f64..10.0, d in 0.0f64..10.0, s in 0.1f64..10.0) {
        let a = rpe(gt, d).unwrap();
        let b = rpe(gt * s, d * s).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(a >= 0.0);
    }
}

fn random_frames(rng: &mut PortableRng) -> (FrameSet, Raster) {
    let w = 1 + rng.below(6) as usize;
    let h = 1 + rng.below(6) as usize;
    let gt = Raster::from_fn(w, h, |_, _| rng.uniform(1.0, 5.0));
    let depth = gt.map(|v| v + 0.3);
    let depth = Raster::from_fn(w, h, |x, y| depth.get(x, y) + rng.uniform(-0.2, 0.2));
    let corrected = Raster::from_fn(w, h, |x, y| gt.get(x, y) + rng.uniform(-0.05, 0.05));
    let bits = (0..w * h).map(|_| rng.below(5) != 0).collect();
    let fs = FrameSet {
        amplitude: depth.clone(),
        intensity: depth.clone(),
        depth,
        ground_truth: gt,
        valid: Mask::new(w, h, bits).unwrap(),
    };
    (fs, corrected)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluate_ignores_scene_order(seed in any::<u64>(), n in 2usize..7, shuffle_seed in any::<u64>()) {
        let mut rng = PortableRng::new(seed);
        let mut pairs: Vec<(FrameSet, Raster)> = (0..n).map(|_| random_frames(&mut rng)).collect();
        prop_assume!(pairs.iter().any(|(f, _)| f.valid.count() > 0));
        let (f0, c0): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let a = evaluate(&f0, &c0).unwrap();
        PortableRng::new(shuffle_seed).shuffle(&mut pairs);
        let (f1, c1): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let b = evaluate(&f1, &c1).unwrap();
        prop_assert_eq!(a.n_pixels, b.n_pixels);
        prop_assert_eq!(&a.histogram_before, &b.histogram_before);
        prop_assert_eq!(&a.histogram_after, &b.histogram_after);
        for (x, y) in [
            (a.mean_rpe_before, b.mean_rpe_before),
            (a.mean_rpe_after, b.mean_rpe_after),
            (a.var_rpe_before, b.var_rpe_before),
            (a.var_rpe_after, b.var_rpe_after),
        ] {
            prop_assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn forest_predictions_stay_in_target_range(seed in any::<u64>(), bootstrap in any::<bool>()) {
        let mut rng = PortableRng::new(seed);
        let n = 20 + rng.below(100) as usize;
        let f = 1 + rng.below(4) as usize;
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..f).map(|_| rng.uniform(-1.0, 1.0) as f32).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] as f64 * 3.0 + rng.uniform(-0.5, 0.5)).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let cfg = ForestConfig {
            n_trees: 5,
            max_depth: 6,
            min_samples_split: 4,
            max_features: MaxFeatures::All,
            bootstrap,
            seed,
        };
        let model = forest::train(&x, &y, &cfg).unwrap();
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..50 {
            let probe: Vec<f32> = (0..f).map(|_| rng.uniform(-3.0, 3.0) as f32).collect();
            let p = model.predict_row(&probe);
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
        let imp = model.feature_importance();
        prop_assert!(imp.iter().all(|v| *v >= 0.0));
        prop_assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(model.max_depth() <= 6);
    }
}

#[test]
fn saved_forest_predicts_identically() {
    let mut rng = PortableRng::new(77);
    let rows: Vec<Vec<f32>> = (0..400)
        .map(|_| (0..5).map(|_| rng.uniform(-2.0, 2.0) as f32).collect())
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| (r[0] as f64).sin() + r[1] as f64 * r[2] as f64)
        .collect();
    let x = FeatureMatrix::from_rows(&rows).unwrap();
    let cfg = ForestConfig {
        n_trees: 8,
        max_depth: 10,
        min_samples_split: 5,
        seed: 9,
        ..ForestConfig::default()
    };
    let model = forest::train(&x, &y, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.tfor");
    model.save(&path).unwrap();
    let back = RegressionForest::load(&path).unwrap();
    assert_eq!(back.feature_importance(), model.feature_importance());
    for _ in 0..1000 {
        let probe: Vec<f32> = (0..5).map(|_| rng.uniform(-3.0, 3.0) as f32).collect();
        assert_eq!(
            model.predict_row(&probe).to_bits(),
            back.predict_row(&probe).to_bits()
        );
    }
}
