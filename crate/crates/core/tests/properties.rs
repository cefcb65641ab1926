mod common;

use proptest::prelude::*;
use repeval::data::{EmbeddingStore, TransformSpec};
use repeval::fixtures::gen_sine_clip;
use repeval::numerics::{cosine_similarity, l2_normalize, norm, probe_init, Matrix, ProbeSpec};
use repeval::transforms::audio::pitch_shift;
use repeval::transforms::dsp::HOP;
use repeval::transforms::image::{brightness_shift, hue_shift, mean_hsv, pixel_hsv_to_rgb, pixel_rgb_to_hsv};
use repeval::transforms::{ImageRgb, TransformKind};

fn image(h: usize, w: usize) -> impl Strategy<Value = ImageRgb> {
    prop::collection::vec(0.0f32..=1.0, h * w * 3).prop_map(move |px| ImageRgb::new(h, w, px).unwrap())
}

fn wrap(h: f64) -> f64 {
    (h + 0.5).rem_euclid(1.0) - 0.5
}

fn max_diff(a: &ImageRgb, b: &ImageRgb) -> f32 {
    a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rgb_hsv_round_trip(r in 0.0f32..=1.0, g in 0.0f32..=1.0, b in 0.0f32..=1.0) {
        let back = pixel_hsv_to_rgb(pixel_rgb_to_hsv([r, g, b]));
        for (x, y) in [r, g, b].iter().zip(back) {
            prop_assert!((x - y).abs() <= 1e-5);
        }
    }

    #[test]
    fn hue_shifts_compose(img in image(4, 5), a in -0.5f64..=0.5, b in -0.5f64..=0.5) {
        let twice = hue_shift(&hue_shift(&img, a).unwrap(), b).unwrap();
        let once = hue_shift(&img, wrap(a + b)).unwrap();
        prop_assert!(max_diff(&twice, &once) <= 1e-4);
    }

    #[test]
    fn brightness_shift_inverts_where_unclamped(img in image(4, 4), b in -1.0f64..=1.0) {
        let there = brightness_shift(&img, b).unwrap();
        let back = brightness_shift(&there, -b).unwrap();
        let hsv = |i: &ImageRgb, k: usize| {
            let p = &i.pixels()[k * 3..k * 3 + 3];
            pixel_rgb_to_hsv([p[0], p[1], p[2]])[2] as f64
        };
        for k in 0..16 {
            let v = hsv(&img, k);
            if v + b > 0.0 && v + b < 1.0 {
                for c in 0..3 {
                    prop_assert!((img.pixels()[k * 3 + c] - back.pixels()[k * 3 + c]).abs() <= 1e-5);
                }
            }
        }
    }

    #[test]
    fn mean_hue_follows_the_shift(h0 in 0.0f64..1.0, spread in 0.0f64..0.05, shift in -0.5f64..=0.5) {
        let img = ImageRgb::from_fn(6, 6, |y, x| {
            let h = (h0 + spread * ((y * 6 + x) as f64 / 35.0 - 0.5)).rem_euclid(1.0);
            pixel_hsv_to_rgb([h as f32, 0.8, 0.7])
        }).unwrap();
        let before = mean_hsv(&img).hue;
        let after = mean_hsv(&hue_shift(&img, shift).unwrap()).hue;
        let expected = (before + shift).rem_euclid(1.0);
        let d = (after - expected).abs();
        prop_assert!(d.min(1.0 - d) <= 1e-3, "{after} vs {expected}");
    }

    #[test]
    fn container_round_trips(n in 1usize..12, d in 1usize..9, seed in any::<u64>()) {
        let mut rng = repeval::seed::rng(seed);
        let values: Vec<f32> = (0..n * d).map(|_| rand::Rng::gen_range(&mut rng, -1e6f32..1e6)).collect();
        let ids = (0..n).map(|i| format!("id-{i}-{seed}")).collect();
        let store = EmbeddingStore::new(ids, Matrix::from_vec(n, d, values).unwrap(), "x", "y").unwrap();
        let back = EmbeddingStore::from_bytes(&store.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(back.ids, store.ids);
        prop_assert_eq!(back.matrix, store.matrix);
    }

    #[test]
    fn normalization_inverts(lo in -10.0f64..10.0, width in 0.0f64..10.0, t in 0.0f64..=1.0) {
        let spec = TransformSpec::new(TransformKind::FactorShift(0), 0).with_range(lo, lo + width);
        let raw = spec.denormalize(t);
        prop_assert!((lo..=lo + width).contains(&raw));
        if width > 0.0 {
            prop_assert!((spec.normalize(raw) - t).abs() <= 1e-6);
        }
        prop_assert!((spec.denormalize(spec.normalize(raw)) - raw).abs() <= 1e-6);
    }

    #[test]
    fn sampled_params_stay_in_range(seed in any::<u64>(), id in "[a-z0-9]{1,8}") {
        for kind in TransformKind::ALL_MEDIA {
            let spec = TransformSpec::new(kind, seed);
            let p = spec.sample_param(&id);
            prop_assert!(p >= spec.min() && p <= spec.max());
            prop_assert_eq!(p, spec.sample_param(&id));
        }
    }

    #[test]
    fn forward_is_positively_homogeneous_without_biases(seed in any::<u64>(), c in 0.01f32..100.0) {
        let probe = probe_init(&ProbeSpec::mlp(5, &[7, 3], 2, seed)).unwrap();
        let mut rng = repeval::seed::rng(seed);
        let x: Vec<f32> = (0..20).map(|_| rand::Rng::gen_range(&mut rng, -1.0f32..1.0)).collect();
        let x = Matrix::from_vec(4, 5, x).unwrap();
        let scaled = probe.forward(&x.scale(c)).unwrap();
        let expected = probe.forward(&x).unwrap().scale(c);
        // Relative to the largest output in the batch: outputs that cancel
        // to near zero carry no relative precision in f32.
        let scale = expected.data().iter().fold(1e-3f32, |m, v| m.max(v.abs()));
        for (a, b) in scaled.data().iter().zip(expected.data()) {
            prop_assert!((a - b).abs() <= 1e-5 * scale, "{a} vs {b}, c {c}");
        }
    }

    #[test]
    fn cosine_is_bounded(v in prop::collection::vec(-100.0f32..100.0, 1..16), w in prop::collection::vec(-100.0f32..100.0, 16)) {
        prop_assume!(norm(&v) > 1e-3);
        let w = &w[..v.len()];
        prop_assume!(norm(w) > 1e-3);
        let c = cosine_similarity(&v, w).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert!((norm(&l2_normalize(&v).unwrap()) - 1.0).abs() <= 1e-6);
        prop_assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn pitch_shift_keeps_duration_and_scales_frequency() {
    let sr = 16_000;
    let clip = gen_sine_clip(300.0, 1.0, sr).unwrap();
    for k in 0..25 {
        let s = -12.0 + k as f64;
        let out = pitch_shift(&clip, s).unwrap();
        assert!(out.len().abs_diff(clip.len()) <= HOP, "{s}: {} vs {}", out.len(), clip.len());
        let f = common::oracles::dominant_frequency(out.samples(), sr as f64, 100.0, 800.0);
        let expected = 300.0 * 2f64.powf(s / 12.0);
        assert!((f / expected - 1.0).abs() <= 0.01, "{s}: {f} vs {expected}");
    }
}
