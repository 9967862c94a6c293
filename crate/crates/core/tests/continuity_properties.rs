mod common;

use agv_path_kit::{
    check_tangential_special, check_theorem, derivative_to_control_points, plan_velocity,
    wheel_level_audit, MotionMode, Path, PlanOptions, Point2, SegmentEnd, Verdict,
};
use common::{junction, random_beta, random_curve, random_vehicle, rng, segment, smooth_curve_pair};
use proptest::prelude::*;
use rand::Rng;

fn shared_mode(r: &mut rand_chacha::ChaCha8Rng) -> MotionMode {
    let alpha = r.gen_range(-1.5..1.5);
    if r.gen_bool(0.7) {
        MotionMode::tangential(alpha)
    } else {
        MotionMode::crab(alpha)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wheels_share_the_vehicle_shape_parameters(seed in any::<u64>()) {
        let mut r = rng(seed);
        let b = random_beta(&mut r);
        let pair = smooth_curve_pair(&mut r, b);
        prop_assume!(pair.is_some());
        let (left, right) = pair.unwrap();
        let mode = shared_mode(&mut r);
        let count = r.gen_range(2..=6);
        let vehicle = random_vehicle(&mut r, count);
        let ctx = junction(segment(left, mode), segment(right, mode), vehicle);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();

        let report = check_theorem(&ctx);
        prop_assert_eq!(report.verdict, Verdict::Smooth, "{:?}", report);
        let beta = report.beta.unwrap();
        prop_assert!((beta.beta1 - b[0]).abs() < 1e-9 && (beta.beta2 - b[1]).abs() < 1e-9);
        for w in wheel_level_audit(&ctx).unwrap() {
            prop_assert!(w.passes, "{w:?}");
            if let Some([b1, b2]) = w.beta_w {
                prop_assert!((b1 - beta.beta1).abs() < 1e-9, "{} {b1} vs {}", w.wheel_id, beta.beta1);
                prop_assert!((b2 - beta.beta2).abs() < 1e-9, "{} {b2} vs {}", w.wheel_id, beta.beta2);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn splitting_a_segment_leaves_a_smooth_junction(seed in any::<u64>(), s in 0.1f64..0.9) {
        let mut r = rng(seed);
        let degree = r.gen_range(3..=7);
        let c = random_curve(&mut r, degree, Point2::ZERO);
        let mode = shared_mode(&mut r);
        let vehicle = random_vehicle(&mut r, 3);
        let (a, b) = c.split(s).unwrap();
        let ctx = junction(segment(a, mode), segment(b, mode), vehicle).unwrap();
        let report = check_theorem(&ctx);
        prop_assert_eq!(report.verdict, Verdict::Smooth);
        prop_assert!((report.beta.unwrap().beta1 - s / (1.0 - s)).abs() < 1e-9);
    }

    #[test]
    fn tangential_rule_agrees_with_the_theorem(seed in any::<u64>(), kind in 0usize..4) {
        let mut r = rng(seed);
        let b = random_beta(&mut r);
        let pair = smooth_curve_pair(&mut r, b);
        prop_assume!(pair.is_some());
        let (left, mut right) = pair.unwrap();
        let j = right.jet(0.0).unwrap();
        let normal = j.d1.perp() * (1.0 / j.d1.norm());
        // 0: smooth, 1: curvature jump, 2: curvature-rate jump, 3: kink.
        let size = r.gen_range(0.05..1.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        right = match kind {
            0 => right,
            1 => derivative_to_control_points(&right, SegmentEnd::Start, &[j.d1, j.d2 + normal * (size * j.d2.norm().max(1.0)), j.d3]).unwrap(),
            2 => derivative_to_control_points(&right, SegmentEnd::Start, &[j.d1, j.d2, j.d3 + normal * (size * j.d3.norm().max(1.0))]).unwrap(),
            _ => derivative_to_control_points(&right, SegmentEnd::Start, &[j.d1.rotated(size * 0.1)]).unwrap(),
        };
        prop_assume!(right.min_speed(256) > 1e-3);
        let alpha = r.gen_range(-1.5..1.5);
        let mode = MotionMode::tangential(alpha);
        let vehicle = random_vehicle(&mut r, 2);
        let ctx = junction(segment(left, mode), segment(right, mode), vehicle);
        prop_assume!(ctx.is_some());
        let ctx = ctx.unwrap();
        let report = check_theorem(&ctx);
        let special = check_tangential_special(&ctx).unwrap();
        prop_assert_eq!(special.passes, report.verdict == Verdict::Smooth);
        prop_assert!(special.agrees_with_theorem);
        prop_assert_eq!(report.verdict == Verdict::Smooth, kind == 0);
        if kind == 2 {
            prop_assert_eq!(report.verdict, Verdict::SmoothAtRestOnly);
        }
    }

    #[test]
    fn reparameterizing_one_side_keeps_the_verdict(seed in any::<u64>(), kind in 0usize..2, s in 0.2f64..0.9) {
        let mut r = rng(seed);
        let b = random_beta(&mut r);
        let pair = smooth_curve_pair(&mut r, b);
        prop_assume!(pair.is_some());
        let (left, mut right) = pair.unwrap();
        if kind == 1 {
            let j = right.jet(0.0).unwrap();
            right = derivative_to_control_points(&right, SegmentEnd::Start, &[j.d1, j.d2 + j.d1.perp() * 0.5, j.d3]).unwrap();
        }
        prop_assume!(right.min_speed(256) > 1e-3);
        let mode = shared_mode(&mut r);
        let vehicle = random_vehicle(&mut r, 3);
        let before = junction(segment(left.clone(), mode), segment(right.clone(), mode), vehicle.clone());
        prop_assume!(before.is_some());
        let before = check_theorem(&before.unwrap());
        // The first part of the split runs the same geometry near the
        // junction with every derivative scaled by powers of `s`.
        let (shorter, _) = right.split(s).unwrap();
        let after = check_theorem(&junction(segment(left, mode), segment(shorter, mode), vehicle).unwrap());
        prop_assert_eq!(before.verdict, after.verdict);
        if let (Some(x), Some(y)) = (before.beta, after.beta) {
            prop_assert!((y.beta1 - x.beta1 / s).abs() < 1e-9 * x.beta1.max(1.0));
        }
    }
}

#[test]
fn rest_only_junction_forces_a_stop() {
    let mut r = rng(3);
    let mut done = 0;
    while done < 10 {
        let b = random_beta(&mut r);
        let Some((left, right)) = smooth_curve_pair(&mut r, b) else { continue };
        let j = right.jet(0.0).unwrap();
        let right = derivative_to_control_points(&right, SegmentEnd::Start, &[j.d1, j.d2, j.d3 + j.d1.perp() * 2.0]).unwrap();
        let mode = MotionMode::tangential(0.2);
        let vehicle = random_vehicle(&mut r, 2);
        let Some(ctx) = junction(segment(left.clone(), mode), segment(right.clone(), mode), vehicle.clone()) else {
            continue;
        };
        assert_eq!(check_theorem(&ctx).verdict, Verdict::SmoothAtRestOnly);
        let path = Path::new(vec![segment(left, mode), segment(right, mode)]).unwrap();
        let options = PlanOptions { samples_per_segment: 200, ..PlanOptions::default() };
        let plan = plan_velocity(&path, &vehicle, &options).unwrap();
        assert_eq!(plan.rest_junctions, vec![0]);
        assert_eq!(plan.samples[199].v, 0.0);
        assert_eq!(plan.samples[200].v, 0.0);
        done += 1;
    }
}
