//! Wheel-level kinematics along a segment.
//!
//! A wheel mounted at `r` in the vehicle frame follows
//! `C_w(u) = C(u) + R(θ(u)) r`. From its jet follow the wheel heading, the
//! steering angle `δ_w = ζ_w − θ`, the traction ratio
//! `R_v = ‖C_w'‖ / ‖C'‖` and the steering ratio
//! `R_ω = (κ_w ‖C_w'‖ − θ') / ‖C'‖`, so that for a vehicle speed `v` the
//! wheel speed is `v R_v` and the steering rate is `v R_ω`. The vehicle
//! speed limit at `u` is the smallest of the segment limit and every
//! wheel's `v_max / R_v` and `ω_max / |R_ω|`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{arc_length, nearest_branch, wrap_angle, CurveJet, Point2, SINGULAR_SPEED};
use crate::error::{Error, Result};
use crate::motion::{orientation_third, orientation_third_principal, OrientationJet};
use crate::vehicle::{PathSegment, VehicleModel, Wheel};

/// A wheel curve counts as momentarily singular when `‖C_w'‖` drops below
/// this fraction of `‖C'‖`.
pub const WHEEL_SINGULAR_RATIO: f64 = 1e-9;

/// Parameter offset used for one-sided limits around singular samples.
const SINGULAR_PROBE: f64 = 1e-6;

fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

fn scale0(v: Point2, s: f64) -> Point2 {
    Point2::new(mul0(v.x, s), mul0(v.y, s))
}

/// Everything needed to evaluate wheels at one parameter value.
struct Frame {
    curve: CurveJet,
    theta: [f64; 4],
}

impl Frame {
    fn new(segment: &PathSegment, u: f64) -> Result<Self> {
        Self::build(segment, u, true)
    }

    /// Frame whose `θ` is a principal value; enough for speed limits.
    fn principal(segment: &PathSegment, u: f64) -> Result<Self> {
        Self::build(segment, u, false)
    }

    fn build(segment: &PathSegment, u: f64, unwrap: bool) -> Result<Self> {
        let curve = segment.curve.jet(u)?;
        if curve.d1.norm() < SINGULAR_SPEED {
            return Err(Error::SingularParameterization { u });
        }
        let theta = if unwrap {
            orientation_third(&segment.mode, &segment.curve, u)?
        } else {
            orientation_third_principal(&segment.mode, &segment.curve, u)?
        };
        Ok(Self { curve, theta })
    }

    fn orientation(&self) -> OrientationJet {
        OrientationJet {
            theta: self.theta[0],
            dtheta: self.theta[1],
            ddtheta: self.theta[2],
        }
    }

    fn wheel_jet(&self, r: Point2) -> CurveJet {
        let [theta, t1, t2, t3] = self.theta;
        let a = r.rotated(theta);
        let b = a.perp();
        let c = &self.curve;
        CurveJet {
            position: c.position + a,
            d1: c.d1 + scale0(b, t1),
            d2: c.d2 - scale0(a, t1 * t1) + scale0(b, t2),
            d3: c.d3 - scale0(b, t1 * t1 * t1) - scale0(a, mul0(3.0 * t1, t2)) + scale0(b, t3),
        }
    }

    fn wheel_state(&self, wheel: &Wheel) -> WheelState {
        let [theta, t1, t2, _] = self.theta;
        let speed = self.curve.d1.norm();
        let jet = self.wheel_jet(wheel.position);
        let wspeed = jet.d1.norm();
        let singular = wspeed < WHEEL_SINGULAR_RATIO * speed;
        let delta_w = wrap_angle(jet.d1.angle() - theta);

        // det(C_w', C_w'') split so that an infinite θ'' only multiplies the
        // term it belongs to.
        let a = wheel.position.rotated(theta);
        let b = a.perp();
        let finite_part = self.curve.d2 - scale0(a, t1 * t1);
        let det = jet.d1.det(finite_part) + mul0(jet.d1.det(b), t2);

        let (kappa_w, ratio_omega) = if singular {
            (None, f64::NAN)
        } else {
            let w2 = wspeed * wspeed;
            let k = det / (w2 * wspeed);
            let r = (det / w2 - t1) / speed;
            (Some(k).filter(|k| k.is_finite()), r)
        };
        WheelState {
            wheel_id: wheel.id.clone(),
            position: jet.position,
            zeta_w: theta + delta_w,
            delta_w,
            ratio_v: wspeed / speed,
            ratio_omega,
            kappa_w,
            singular,
        }
    }
}

/// Jet of the path followed by `wheel`, exact up to third order.
pub fn wheel_curve_jet(segment: &PathSegment, wheel: &Wheel, u: f64) -> Result<CurveJet> {
    Ok(Frame::new(segment, u)?.wheel_jet(wheel.position))
}

/// Kinematic state of one wheel at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WheelState {
    pub wheel_id: String,
    /// Contact point in the world frame.
    pub position: Point2,
    /// Wheel heading, `θ + δ_w`.
    pub zeta_w: f64,
    /// Steering angle relative to the vehicle body, principal value.
    pub delta_w: f64,
    pub ratio_v: f64,
    /// Steering rate per unit vehicle speed, rad/m (signed). NaN when the
    /// wheel curve is singular.
    pub ratio_omega: f64,
    /// Curvature of the wheel path; `None` when undefined.
    pub kappa_w: Option<f64>,
    /// `‖C_w'‖` vanishes here (the vehicle pivots about this wheel).
    pub singular: bool,
}

pub fn wheel_state(segment: &PathSegment, wheel: &Wheel, u: f64) -> Result<WheelState> {
    Ok(Frame::new(segment, u)?.wheel_state(wheel))
}

/// Which limit determines the vehicle speed limit at a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "wheel", rename_all = "snake_case")]
pub enum BindingConstraint {
    Segment,
    Traction(String),
    Steering(String),
}

impl std::fmt::Display for BindingConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BindingConstraint::Segment => write!(f, "segment"),
            BindingConstraint::Traction(id) => write!(f, "traction:{id}"),
            BindingConstraint::Steering(id) => write!(f, "steering:{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimitSample {
    pub u: f64,
    /// Arc length from the start of the segment, meters.
    pub s: f64,
    pub v_max: f64,
    pub binding: BindingConstraint,
    /// Some wheel curve is singular here; `v_max` is the smaller of the two
    /// one-sided neighbouring limits.
    pub singular: bool,
}

/// The three quotients of the speed-limit law for one set of wheel states.
/// Candidates are visited in tie-break order (segment, traction, steering,
/// wheels by id), so the first strict minimum is the binding one.
fn limit_from_states(
    segment_limit: f64,
    vehicle: &VehicleModel,
    states: &[WheelState],
) -> (f64, BindingConstraint) {
    let mut order: Vec<usize> = (0..vehicle.wheels().len()).collect();
    order.sort_by(|&a, &b| vehicle.wheels()[a].id.cmp(&vehicle.wheels()[b].id));

    let mut best = segment_limit;
    let mut binding = BindingConstraint::Segment;
    for &i in &order {
        let w = &vehicle.wheels()[i];
        let q = if states[i].ratio_v > 0.0 {
            w.v_max / states[i].ratio_v
        } else {
            f64::INFINITY
        };
        if q < best {
            best = q;
            binding = BindingConstraint::Traction(w.id.clone());
        }
    }
    for &i in &order {
        let w = &vehicle.wheels()[i];
        let r = states[i].ratio_omega.abs();
        let q = if r.is_nan() {
            0.0
        } else if r > 0.0 {
            w.omega_max / r
        } else {
            f64::INFINITY
        };
        if q < best {
            best = q;
            binding = BindingConstraint::Steering(w.id.clone());
        }
    }
    (best, binding)
}

fn states_at(segment: &PathSegment, vehicle: &VehicleModel, u: f64) -> Result<Vec<WheelState>> {
    let frame = Frame::principal(segment, u)?;
    Ok(vehicle.wheels().iter().map(|w| frame.wheel_state(w)).collect())
}

/// Speed limit and binding constraint at `u`, without the arc length.
pub(crate) fn limit_at(
    segment: &PathSegment,
    vehicle: &VehicleModel,
    u: f64,
) -> Result<(f64, BindingConstraint, bool)> {
    let states = states_at(segment, vehicle, u)?;
    if !states.iter().any(|s| s.singular) {
        let (v, b) = limit_from_states(segment.v_max, vehicle, &states);
        return Ok((v, b, false));
    }
    let mut best: Option<(f64, BindingConstraint)> = None;
    for probe in [u - SINGULAR_PROBE, u + SINGULAR_PROBE] {
        if !(0.0..=1.0).contains(&probe) {
            continue;
        }
        let states = states_at(segment, vehicle, probe)?;
        let (v, b) = limit_from_states(segment.v_max, vehicle, &states);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, b));
        }
    }
    let (v, b) = best.unwrap_or_else(|| limit_from_states(segment.v_max, vehicle, &states));
    Ok((v, b, true))
}

/// Vehicle speed limit at `u` (with the arc length from the segment start).
pub fn speed_limit(segment: &PathSegment, vehicle: &VehicleModel, u: f64) -> Result<SpeedLimitSample> {
    let (v_max, binding, singular) = limit_at(segment, vehicle, u)?;
    Ok(SpeedLimitSample {
        u,
        s: arc_length(&segment.curve, 0.0, u)?,
        v_max,
        binding,
        singular,
    })
}

/// Traction speed limit of one wheel: vehicle limit times its `R_v`.
pub fn wheel_speed_limit(
    segment: &PathSegment,
    vehicle: &VehicleModel,
    wheel: &Wheel,
    u: f64,
) -> Result<f64> {
    let (v_max, _, _) = limit_at(segment, vehicle, u)?;
    let state = wheel_state(segment, wheel, u)?;
    Ok(v_max * state.ratio_v)
}

/// Options for dense sampling of a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Largest steering angle magnitude the wheel can reach. Past it the
    /// wheel is turned by 180° and drives backwards. The default (π) never
    /// flips.
    pub steering_range: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { steering_range: PI }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WheelTrack {
    pub wheel_id: String,
    /// States with `delta_w` unwrapped along the segment.
    pub states: Vec<WheelState>,
    /// Samples where the wheel was flipped to respect the steering range.
    pub reversed: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentProfile {
    pub limits: Vec<SpeedLimitSample>,
    pub orientation: Vec<OrientationJet>,
    /// Vehicle angular velocity per unit speed, `θ' / ‖C'‖` (rad/m).
    pub omega_ratio: Vec<f64>,
    pub wheels: Vec<WheelTrack>,
}

/// Samples the segment at `samples` uniform parameters including both ends.
///
/// Samples are evaluated independently (and in parallel); the only
/// sequential step is unwrapping the steering angles.
pub fn profile_segment(
    segment: &PathSegment,
    vehicle: &VehicleModel,
    samples: usize,
    options: ProfileOptions,
) -> Result<SegmentProfile> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "a profile needs at least 2 samples, got {samples}"
        )));
    }
    let last = (samples - 1) as f64;
    let rows: Vec<(SpeedLimitSample, OrientationJet, f64, Vec<WheelState>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let u = if i + 1 == samples { 1.0 } else { i as f64 / last };
            let frame = Frame::new(segment, u)?;
            let states: Vec<WheelState> =
                vehicle.wheels().iter().map(|w| frame.wheel_state(w)).collect();
            let limit = speed_limit(segment, vehicle, u)?;
            let orient = frame.orientation();
            let omega_ratio = orient.dtheta / frame.curve.d1.norm();
            Ok((limit, orient, omega_ratio, states))
        })
        .collect::<Result<_>>()?;

    let mut wheels: Vec<WheelTrack> = vehicle
        .wheels()
        .iter()
        .map(|w| WheelTrack {
            wheel_id: w.id.clone(),
            states: Vec::with_capacity(samples),
            reversed: Vec::with_capacity(samples),
        })
        .collect();
    let mut limits = Vec::with_capacity(samples);
    let mut orientation = Vec::with_capacity(samples);
    let mut omega_ratio = Vec::with_capacity(samples);
    for (limit, orient, om, states) in rows {
        for (track, mut state) in wheels.iter_mut().zip(states) {
            if let Some(prev) = track.states.last() {
                state.delta_w = nearest_branch(state.delta_w, prev.delta_w);
            }
            let flip = state.delta_w.abs() > options.steering_range;
            if flip {
                state.delta_w -= PI.copysign(state.delta_w);
            }
            state.zeta_w = orient.theta + state.delta_w;
            track.states.push(state);
            track.reversed.push(flip);
        }
        limits.push(limit);
        orientation.push(orient);
        omega_ratio.push(om);
    }
    Ok(SegmentProfile {
        limits,
        orientation,
        omega_ratio,
        wheels,
    })
}

/// Orders samples by arc length; used when merging segment profiles.
pub fn by_arc_length(a: &SpeedLimitSample, b: &SpeedLimitSample) -> Ordering {
    a.s.total_cmp(&b.s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::BezierCurve;
    use crate::motion::MotionMode;

    fn paper_vehicle() -> VehicleModel {
        VehicleModel::new(vec![
            Wheel::new("w1", Point2::new(0.75, 0.4), 1.7, 45f64.to_radians()),
            Wheel::new("w2", Point2::new(-0.75, -0.4), 1.7, 45f64.to_radians()),
        ])
        .unwrap()
    }

    fn straight(mode: MotionMode) -> PathSegment {
        PathSegment::new(
            BezierCurve::from_xy(&[(0.0, 0.0), (1.0, 0.5), (3.0, 1.5)]).unwrap(),
            mode,
            1.5,
        )
        .unwrap()
    }

    fn turning(mode: MotionMode) -> PathSegment {
        PathSegment::new(
            BezierCurve::from_xy(&[(0.0, 0.0), (1.5, 0.0), (2.5, 0.6), (3.0, 2.0)]).unwrap(),
            mode,
            1.5,
        )
        .unwrap()
    }

    #[test]
    fn zero_offset_wheel_follows_the_vehicle() {
        let seg = turning(MotionMode::tangential(0.3));
        let w = Wheel::new("c", Point2::ZERO, 1.0, 1.0);
        for u in [0.0, 0.3, 1.0] {
            assert_eq!(wheel_curve_jet(&seg, &w, u).unwrap(), seg.curve.jet(u).unwrap());
            let s = wheel_state(&seg, &w, u).unwrap();
            assert!((s.ratio_v - 1.0).abs() < 1e-15);
            assert!((s.delta_w + 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn crab_wheel_jet_is_a_translate() {
        let alpha = -0.56;
        let seg = turning(MotionMode::crab(alpha));
        let r = Point2::new(0.7, -0.2);
        let w = Wheel::new("w", r, 1.0, 1.0);
        let wj = wheel_curve_jet(&seg, &w, 0.4).unwrap();
        let cj = seg.curve.jet(0.4).unwrap();
        assert!((wj.position - (cj.position + r.rotated(alpha))).norm() < 1e-15);
        assert_eq!((wj.d1, wj.d2, wj.d3), (cj.d1, cj.d2, cj.d3));
    }

    #[test]
    fn straight_tangential_states() {
        let seg = straight(MotionMode::tangential(0.0));
        for w in paper_vehicle().wheels() {
            let s = wheel_state(&seg, w, 0.35).unwrap();
            assert!(s.delta_w.abs() < 1e-15);
            assert!((s.ratio_v - 1.0).abs() < 1e-15);
            assert!(s.ratio_omega.abs() < 1e-15);
        }
        let alpha = 0.4;
        let seg = straight(MotionMode::tangential(alpha));
        for w in paper_vehicle().wheels() {
            let s = wheel_state(&seg, w, 0.8).unwrap();
            assert!((s.delta_w + alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn straight_line_speed_limit_is_the_segment_limit() {
        let seg = straight(MotionMode::tangential(0.0));
        let s = speed_limit(&seg, &paper_vehicle(), 0.5).unwrap();
        assert_eq!(s.v_max, 1.5);
        assert_eq!(s.binding, BindingConstraint::Segment);
    }

    #[test]
    fn crab_ratios() {
        let seg = turning(MotionMode::crab(0.2));
        for w in paper_vehicle().wheels() {
            let s = wheel_state(&seg, w, 0.6).unwrap();
            assert!((s.ratio_v - 1.0).abs() < 1e-14);
            assert!((s.ratio_omega - s.kappa_w.unwrap()).abs() < 1e-14);
            let lim = speed_limit(&seg, &paper_vehicle(), 0.6).unwrap();
            let wl = wheel_speed_limit(&seg, &paper_vehicle(), w, 0.6).unwrap();
            assert!((wl - lim.v_max).abs() < 1e-14);
        }
    }

    #[test]
    fn pivot_wheel_is_flagged() {
        // Tangential mode with the wheel at the instantaneous centre of
        // rotation: a circle of radius 2 turning left, wheel 2 m to the left.
        let k = (7.0_f64.sqrt() - 1.0) / 3.0;
        let c = BezierCurve::from_xy(&[(2.0, 0.0), (2.0, 2.0 * k), (2.0 * k, 2.0), (0.0, 2.0)])
            .unwrap();
        let seg = PathSegment::new(c, MotionMode::tangential(0.0), 1.5).unwrap();
        let w = Wheel::new("p", Point2::new(0.0, 2.0), 1.0, 1.0);
        let s = wheel_state(&seg, &w, 0.0).unwrap();
        assert!(s.singular);
        assert!(s.kappa_w.is_none());
        let veh = VehicleModel::new(vec![w]).unwrap();
        let lim = speed_limit(&seg, &veh, 0.0).unwrap();
        assert!(lim.singular);
        assert!(lim.v_max.is_finite());
    }

    #[test]
    fn profile_endpoints_and_arc_length() {
        let seg = straight(MotionMode::tangential(0.0));
        let p = profile_segment(&seg, &paper_vehicle(), 2, ProfileOptions::default()).unwrap();
        assert_eq!(p.limits.len(), 2);
        assert_eq!(p.limits[0].s, 0.0);
        let len = (3.0_f64 * 3.0 + 1.5 * 1.5).sqrt();
        assert!((p.limits[1].s - len).abs() < 1e-12);
        assert!(profile_segment(&seg, &paper_vehicle(), 1, ProfileOptions::default()).is_err());
    }

    #[test]
    fn crab_profile_has_no_rotation() {
        let seg = turning(MotionMode::crab(0.1));
        let p = profile_segment(&seg, &paper_vehicle(), 50, ProfileOptions::default()).unwrap();
        assert!(p.omega_ratio.iter().all(|&w| w == 0.0));
        assert!(p.limits.windows(2).all(|w| w[1].s > w[0].s));
    }
}
