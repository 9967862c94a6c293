//! Vehicle model (wheel set with actuator limits), path segments and paths.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::curve::{BezierCurve, Point2};
use crate::error::{Error, Result};
use crate::motion::MotionMode;

/// Samples used when checking that a segment curve is regular.
pub const REGULARITY_SAMPLES: usize = 1024;
/// Minimum accepted `‖C'‖` during the regularity check.
pub const REGULARITY_THRESHOLD: f64 = 1e-9;
/// Default position tolerance for consecutive segments of a path.
pub const DEFAULT_G0_TOLERANCE: f64 = 1e-9;

/// A steered and driven wheel whose steering axis passes through its
/// contact point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wheel {
    pub id: String,
    /// Contact point in the vehicle frame, meters.
    pub position: Point2,
    /// Maximum traction speed, m/s.
    pub v_max: f64,
    /// Maximum steering rate, rad/s.
    pub omega_max: f64,
}

impl Wheel {
    pub fn new(id: impl Into<String>, position: Point2, v_max: f64, omega_max: f64) -> Self {
        Self {
            id: id.into(),
            position,
            v_max,
            omega_max,
        }
    }
}

/// One broken invariant of a wheel set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub wheel_id: Option<String>,
    pub field: String,
    pub message: String,
}

/// Lists every violated invariant; an empty list means the wheels form a
/// valid vehicle.
pub fn validate_vehicle(wheels: &[Wheel]) -> Vec<Violation> {
    let mut out = Vec::new();
    if wheels.is_empty() {
        out.push(Violation {
            wheel_id: None,
            field: "wheels".into(),
            message: "a vehicle needs at least one wheel".into(),
        });
    }
    let mut seen = HashSet::new();
    for w in wheels {
        let mut push = |field: &str, message: String| {
            out.push(Violation {
                wheel_id: Some(w.id.clone()),
                field: field.into(),
                message,
            })
        };
        if !seen.insert(w.id.as_str()) {
            push("id", format!("duplicate wheel id '{}'", w.id));
        }
        if !(w.v_max > 0.0 && w.v_max.is_finite()) {
            push("v_max", format!("must be positive and finite, got {}", w.v_max));
        }
        if !(w.omega_max > 0.0 && w.omega_max.is_finite()) {
            push(
                "omega_max",
                format!("must be positive and finite, got {}", w.omega_max),
            );
        }
        if !w.position.is_finite() {
            push("position", "must be finite".into());
        }
    }
    out
}

/// A validated set of wheels. The tracking point is the origin of the
/// vehicle frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleModel {
    wheels: Vec<Wheel>,
}

impl VehicleModel {
    pub fn new(wheels: Vec<Wheel>) -> Result<Self> {
        let violations = validate_vehicle(&wheels);
        if violations.is_empty() {
            Ok(Self { wheels })
        } else {
            Err(Error::InvalidVehicle(violations))
        }
    }

    pub fn wheels(&self) -> &[Wheel] {
        &self.wheels
    }

    pub fn wheel(&self, id: &str) -> Option<&Wheel> {
        self.wheels.iter().find(|w| w.id == id)
    }

    /// Copy with every actuator limit multiplied by `factor`.
    pub fn scaled_limits(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.wheels
                .iter()
                .map(|w| Wheel {
                    v_max: w.v_max * factor,
                    omega_max: w.omega_max * factor,
                    ..w.clone()
                })
                .collect(),
        )
    }
}

/// Offset angle that turns tangential mode into differential-drive motion
/// for a two-wheel vehicle: with `θ = ζ + α` the direction of travel is
/// perpendicular to the line joining the wheels, so the steering angles stay
/// fixed.
///
/// The result is the principal value in `(-90°, 90°]`; both `α` and
/// `α + 180°` describe the same line of travel.
pub fn differential_alpha(model: &VehicleModel) -> Result<f64> {
    let [w1, w2] = model.wheels() else {
        return Err(Error::DegenerateGeometry(format!(
            "differential mode needs exactly two wheels, got {}",
            model.wheels().len()
        )));
    };
    let dx = w1.position.x - w2.position.x;
    let dy = w1.position.y - w2.position.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry(
            "wheels share the same mounting position".into(),
        ));
    }
    // Body-frame travel direction is (cos α, −sin α); orthogonality with
    // (dx, dy) gives tan α = dx / dy.
    let alpha = dx.atan2(dy);
    Ok(to_half_turn(alpha))
}

fn to_half_turn(a: f64) -> f64 {
    let mut a = a;
    while a > FRAC_PI_2 {
        a -= std::f64::consts::PI;
    }
    while a <= -FRAC_PI_2 {
        a += std::f64::consts::PI;
    }
    a
}

/// One path segment: a curve, the motion mode driven on it and the segment
/// speed limit (m/s).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub curve: BezierCurve,
    pub mode: MotionMode,
    pub v_max: f64,
}

impl PathSegment {
    /// Validates the speed limit and the regularity of the curve
    /// (`‖C'‖ > 1e-9` on 1024 uniform samples plus both endpoints).
    pub fn new(curve: BezierCurve, mode: MotionMode, v_max: f64) -> Result<Self> {
        if !(v_max > 0.0 && v_max.is_finite()) {
            return Err(Error::InvalidSegment(format!(
                "segment speed limit must be positive, got {v_max}"
            )));
        }
        let min_speed = curve.min_speed(REGULARITY_SAMPLES);
        if min_speed <= REGULARITY_THRESHOLD {
            return Err(Error::InvalidSegment(format!(
                "curve is not regularly parameterized (min ‖C'‖ = {min_speed:e})"
            )));
        }
        Ok(Self { curve, mode, v_max })
    }

    pub fn with_curve(&self, curve: BezierCurve) -> Result<Self> {
        Self::new(curve, self.mode, self.v_max)
    }
}

/// Ordered, position-connected sequence of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    segments: Vec<PathSegment>,
}

impl Path {
    pub fn new(segments: Vec<PathSegment>) -> Result<Self> {
        Self::with_tolerance(segments, DEFAULT_G0_TOLERANCE)
    }

    /// Accepts exactly the paths whose junction gaps are below `tolerance`.
    pub fn with_tolerance(segments: Vec<PathSegment>, tolerance: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidPath("a path needs at least one segment".into()));
        }
        for (i, pair) in segments.windows(2).enumerate() {
            let gap = pair[0].curve.end().distance(pair[1].curve.start());
            if gap.is_nan() || gap >= tolerance {
                return Err(Error::InvalidPath(format!(
                    "segments {i} and {} are {gap:e} m apart (tolerance {tolerance:e} m)",
                    i + 1
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn into_segments(self) -> Vec<PathSegment> {
        self.segments
    }
}
