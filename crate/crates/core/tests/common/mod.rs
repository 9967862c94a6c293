#![allow(dead_code)]

use agv_path_kit::{
    BezierCurve, JunctionContext, MotionMode, PathSegment, Point2, SegmentEnd, VehicleModel, Wheel,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const WHEEL_SPEED: f64 = 1.7;
pub const SEGMENT_SPEED: f64 = 1.5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn omega_max() -> f64 {
    45f64.to_radians()
}

/// Control points with strictly increasing x, so `C'.x > 0` everywhere and
/// the curve is regular.
pub fn random_curve(rng: &mut ChaCha8Rng, degree: usize, start: Point2) -> BezierCurve {
    let mut pts = vec![start];
    let mut p = start;
    for _ in 0..degree {
        p += Point2::new(rng.gen_range(0.4..1.2), rng.gen_range(-0.8..0.8));
        pts.push(p);
    }
    BezierCurve::new(pts).unwrap()
}

pub fn random_vehicle(rng: &mut ChaCha8Rng, wheels: usize) -> VehicleModel {
    let wheels = (0..wheels)
        .map(|i| {
            Wheel::new(
                format!("w{}", i + 1),
                Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                WHEEL_SPEED,
                omega_max(),
            )
        })
        .collect();
    VehicleModel::new(wheels).unwrap()
}

pub fn paper_vehicle() -> VehicleModel {
    VehicleModel::new(vec![
        Wheel::new("w1", Point2::new(0.75, 0.4), WHEEL_SPEED, omega_max()),
        Wheel::new("w2", Point2::new(-0.75, -0.4), WHEEL_SPEED, omega_max()),
    ])
    .unwrap()
}

pub fn random_mode(rng: &mut ChaCha8Rng) -> MotionMode {
    let alpha = rng.gen_range(-1.5..1.5);
    let n = rng.gen_range(1.2..3.0);
    match rng.gen_range(0..4) {
        0 => MotionMode::tangential(alpha),
        1 => MotionMode::crab(alpha),
        2 => MotionMode::exponential_delayed(alpha, n).unwrap(),
        _ => MotionMode::exponential_anticipated(alpha, n).unwrap(),
    }
}

pub fn segment(curve: BezierCurve, mode: MotionMode) -> PathSegment {
    PathSegment::new(curve, mode, SEGMENT_SPEED).unwrap()
}

/// Derivatives of the right curve at its start that satisfy the G₃
/// conditions with the left derivatives and the given shape parameters.
pub fn right_derivatives(d1l: Point2, d2l: Point2, d3l: Point2, b: [f64; 3]) -> [Point2; 3] {
    let [b1, b2, b3] = b;
    let d1r = d1l * (1.0 / b1);
    let d2r = (d2l - d1r * b2) * (1.0 / (b1 * b1));
    let d3r = (d3l - d2r * (3.0 * b1 * b2) - d1r * b3) * (1.0 / (b1 * b1 * b1));
    [d1r, d2r, d3r]
}

/// Two curves meeting with the given shape parameters up to third order.
/// `None` when the construction produced an irregular right curve.
pub fn smooth_curve_pair(rng: &mut ChaCha8Rng, b: [f64; 3]) -> Option<(BezierCurve, BezierCurve)> {
    let dl = rng.gen_range(4..=6);
    let dr = rng.gen_range(4..=6);
    let start = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let left = random_curve(rng, dl, start);
    let jet = left.jet(1.0).unwrap();
    let base = random_curve(rng, dr, left.end());
    let targets = right_derivatives(jet.d1, jet.d2, jet.d3, b);
    let right = agv_path_kit::derivative_to_control_points(&base, SegmentEnd::Start, &targets).ok()?;
    if right.min_speed(256) < 1e-3 {
        return None;
    }
    Some((left, right))
}

pub fn random_beta(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
}

pub fn junction(left: PathSegment, right: PathSegment, vehicle: VehicleModel) -> Option<JunctionContext> {
    JunctionContext::new(left, right, vehicle).ok()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

/// Counter-clockwise arc of a circle centred at the origin, from angle 0
/// through `sweep`, as a degree-`degree` Bézier built from the Taylor series
/// of `(cos, sin)` converted out of the power basis.
pub fn circle_arc(radius: f64, sweep: f64, degree: usize) -> BezierCurve {
    // Power coefficients a_j of R·e^{i·sweep·u}.
    let mut a = Vec::with_capacity(degree + 1);
    let mut fact = 1.0;
    for j in 0..=degree {
        if j > 0 {
            fact *= j as f64;
        }
        let m = radius * sweep.powi(j as i32) / fact;
        // i^j rotates (1, 0) by j quarter turns.
        a.push(match j % 4 {
            0 => Point2::new(m, 0.0),
            1 => Point2::new(0.0, m),
            2 => Point2::new(-m, 0.0),
            _ => Point2::new(0.0, -m),
        });
    }
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let pts = (0..=degree)
        .map(|i| {
            (0..=i).fold(Point2::ZERO, |acc, j| acc + a[j] * (binom(i, j) / binom(degree, j)))
        })
        .collect();
    BezierCurve::new(pts).unwrap()
}
