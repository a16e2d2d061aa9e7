use proptest::prelude::*;

use sauna_core::losses::{self, LossConfig};
use sauna_core::metrics::{binarize, metrics_from_confusion, ConfusionCounts};
use sauna_core::transforms::{boundary_map, distance_transform, max_fg_distance, thickness_transform};
use sauna_core::{sauna_maps, sauna_transform, BinaryMask, FieldKind, SaunaParams, ScalarField};

fn mask_strategy(max_side: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(h, w)| {
        prop::collection::vec(prop::bool::weighted(0.35), h * w)
            .prop_map(move |bits| BinaryMask::from_bools(h, w, &bits).unwrap())
    })
}

fn mixed_mask(max_side: usize) -> impl Strategy<Value = BinaryMask> {
    mask_strategy(max_side).prop_filter("needs both classes", |m| m.fg_count() > 0 && m.fg_count() < m.len())
}

fn unit_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..=1.0f64, 1..=max_len)
}

fn field(v: &[f64]) -> ScalarField {
    ScalarField::from_vec(v.to_vec(), FieldKind::Generic).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn thickness_dominates_distance_on_foreground(mask in mixed_mask(24)) {
        let d = distance_transform(&mask).unwrap();
        let m = max_fg_distance(&mask, &d).unwrap();
        let t = thickness_transform(&mask, &d, m, &SaunaParams::default()).unwrap();
        for i in 0..mask.len() {
            if mask.as_slice()[i] == 1 {
                prop_assert!(t.as_slice()[i] >= d.as_slice()[i]);
            }
        }
    }

    #[test]
    fn unclamped_foreground_sum_in_half_open_unit(mask in mixed_mask(24)) {
        let params = SaunaParams { clamp_output: false, ..SaunaParams::default() };
        let raw = sauna_transform(&mask, &params).unwrap();
        for i in 0..mask.len() {
            if mask.as_slice()[i] == 1 {
                let v = raw.as_slice()[i];
                prop_assert!(v > 0.0 && v <= 1.0 + 1e-12, "pixel {i}: {v}");
            }
        }
    }

    #[test]
    fn output_in_unit_range_and_binarizes_to_mask(mask in mixed_mask(24)) {
        let y = sauna_transform(&mask, &SaunaParams::default()).unwrap();
        prop_assert!(y.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert_eq!(binarize(&y, 0.0), mask);
    }

    #[test]
    fn without_thickness_equals_boundary_map(mask in mixed_mask(24)) {
        let y = sauna_transform(&mask, &SaunaParams::without_thickness()).unwrap();
        let d = distance_transform(&mask).unwrap();
        let m = max_fg_distance(&mask, &d).unwrap();
        let yb = boundary_map(&mask, &d, m).unwrap();
        prop_assert_eq!(y.as_slice(), yb.as_slice());
    }

    #[test]
    fn far_background_is_minus_one(mask in mixed_mask(24)) {
        let maps = sauna_maps(&mask, &SaunaParams::default()).unwrap();
        for i in 0..mask.len() {
            if mask.as_slice()[i] == 0 && maps.distance.as_slice()[i] >= 2.0 * maps.m {
                prop_assert_eq!(maps.sauna.as_slice()[i], -1.0);
            }
        }
    }

    #[test]
    fn transform_is_deterministic(mask in mask_strategy(20)) {
        let a = sauna_transform(&mask, &SaunaParams::default());
        let b = sauna_transform(&mask, &SaunaParams::default());
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "outcomes differ"),
        }
    }

    #[test]
    fn gjml_is_symmetric_and_nonnegative(pair in (1usize..=40).prop_flat_map(|n| (
        prop::collection::vec(-1.0..=1.0f64, n),
        prop::collection::vec(-1.0..=1.0f64, n),
    ))) {
        let cfg = LossConfig::default();
        let (a, b) = (field(&pair.0), field(&pair.1));
        let ab = losses::gjml(&a, &b, &cfg).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
        prop_assert_eq!(ab, losses::gjml(&b, &a, &cfg).unwrap());
        prop_assert!(losses::gjml(&a, &a, &cfg).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn stable_loss_never_exceeds_reference(p in unit_vec(32), seed in any::<u64>()) {
        let t: Vec<f64> = p.iter().enumerate()
            .map(|(i, _)| ((seed.rotate_left(i as u32 % 64) % 2001) as f64 / 1000.0) - 1.0)
            .collect();
        let cfg = LossConfig::default();
        let s = losses::stable_focal_l1(&field(&p), &field(&t), &cfg).unwrap();
        let r = losses::focal_l1_reference(&field(&p), &field(&t), &cfg).unwrap();
        prop_assert!(s <= r + 1e-12);
    }

    #[test]
    fn metrics_in_unit_interval(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
        let c = ConfusionCounts { tp, fp, fn_, tn };
        let (s, _) = metrics_from_confusion(&c);
        prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        if tp + fp + fn_ > 0 {
            prop_assert!((s.dice - 2.0 * s.iou / (1.0 + s.iou)).abs() < 1e-12);
        }
    }
}
