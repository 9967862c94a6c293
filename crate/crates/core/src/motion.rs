//! Motion modes: vehicle-orientation laws `θ(u)` along a segment curve, with
//! exact parameter derivatives.
//!
//! Every mode is `θ(u) = ζ(φ(u)) + α` for a reparameterization `φ` of the
//! tangent angle `ζ`, except crab mode where the orientation is the constant
//! `α`:
//!
//! | mode                     | `φ(u)`            |
//! |--------------------------|-------------------|
//! | tangential               | `u`               |
//! | exponential, delayed     | `uⁿ`              |
//! | exponential, anticipated | `1 − (1 − u)ⁿ`    |
//!
//! The differential mode of a two-wheel vehicle is tangential mode with
//! the offset from [`crate::vehicle::differential_alpha`].

use serde::{Deserialize, Serialize};

use crate::curve::{check_unit, BezierCurve, SINGULAR_SPEED};
use crate::error::{Error, Result};

/// Orientation law of a segment. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MotionMode {
    Tangential { alpha: f64 },
    Crab { alpha: f64 },
    ExponentialDelayed { alpha: f64, n: f64 },
    ExponentialAnticipated { alpha: f64, n: f64 },
}

impl MotionMode {
    pub fn tangential(alpha: f64) -> Self {
        MotionMode::Tangential { alpha }
    }

    pub fn crab(alpha: f64) -> Self {
        MotionMode::Crab { alpha }
    }

    pub fn exponential_delayed(alpha: f64, n: f64) -> Result<Self> {
        let m = MotionMode::ExponentialDelayed { alpha, n };
        m.validate()?;
        Ok(m)
    }

    pub fn exponential_anticipated(alpha: f64, n: f64) -> Result<Self> {
        let m = MotionMode::ExponentialAnticipated { alpha, n };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha().is_finite() {
            return Err(Error::InvalidMode("alpha must be finite".into()));
        }
        match self.exponent() {
            Some(n) if !(n > 1.0 && n.is_finite()) => Err(Error::InvalidMode(format!(
                "n must exceed 1, got {n}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            MotionMode::Tangential { alpha }
            | MotionMode::Crab { alpha }
            | MotionMode::ExponentialDelayed { alpha, .. }
            | MotionMode::ExponentialAnticipated { alpha, .. } => alpha,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            MotionMode::ExponentialDelayed { n, .. } | MotionMode::ExponentialAnticipated { n, .. } => {
                Some(n)
            }
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            MotionMode::Tangential { .. } => "tangential",
            MotionMode::Crab { .. } => "crab",
            MotionMode::ExponentialDelayed { .. } => "exponential_delayed",
            MotionMode::ExponentialAnticipated { .. } => "exponential_anticipated",
        }
    }

    /// Reparameterization `φ` and its first three derivatives at `u`.
    /// `None` for crab mode, whose orientation ignores the curve.
    fn reparameterization(&self, u: f64) -> Option<[f64; 4]> {
        match *self {
            MotionMode::Crab { .. } => None,
            MotionMode::Tangential { .. } => Some([u, 1.0, 0.0, 0.0]),
            MotionMode::ExponentialDelayed { n, .. } => Some([
                u.powf(n),
                scaled_pow(n, u, n - 1.0),
                scaled_pow(n * (n - 1.0), u, n - 2.0),
                scaled_pow(n * (n - 1.0) * (n - 2.0), u, n - 3.0),
            ]),
            MotionMode::ExponentialAnticipated { n, .. } => {
                let w = 1.0 - u;
                Some([
                    1.0 - w.powf(n),
                    scaled_pow(n, w, n - 1.0),
                    -scaled_pow(n * (n - 1.0), w, n - 2.0),
                    scaled_pow(n * (n - 1.0) * (n - 2.0), w, n - 3.0),
                ])
            }
        }
    }
}

/// `coef · base^exp` where a zero coefficient wins over an infinite power.
fn scaled_pow(coef: f64, base: f64, exp: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * base.powf(exp)
    }
}

/// Product in which an exact zero factor annihilates an infinite one.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Orientation and its first two parameter derivatives.
///
/// `theta` is unwrapped along the segment. `ddtheta` is infinite at the
/// end of an exponential segment where the reparameterization's second
/// derivative diverges (`1 < n < 2`) while the curve still turns there.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OrientationJet {
    pub theta: f64,
    pub dtheta: f64,
    pub ddtheta: f64,
}

/// Tangent angle `ζ` of a curve and its first three parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingJet {
    pub zeta: f64,
    pub dzeta: f64,
    pub ddzeta: f64,
    pub dddzeta: f64,
}

/// `ζ = atan2(C'_y, C'_x)` (unwrapped) and its derivatives, with
/// `ζ' = det(C', C'') / ‖C'‖²` differentiated twice by the quotient rule.
pub fn heading_jet(curve: &BezierCurve, u: f64) -> Result<HeadingJet> {
    heading_jet_with(curve, u, true)
}

fn heading_jet_with(curve: &BezierCurve, u: f64, unwrap: bool) -> Result<HeadingJet> {
    check_unit(u)?;
    let d1 = curve.derivative(u, 1)?;
    let d2 = curve.derivative(u, 2)?;
    let d3 = curve.derivative(u, 3)?;
    let d4 = curve.derivative(u, 4)?;
    let q = d1.norm_squared();
    if q.sqrt() < SINGULAR_SPEED {
        return Err(Error::SingularParameterization { u });
    }
    let num = d1.det(d2);
    let num1 = d1.det(d3);
    let num2 = d2.det(d3) + d1.det(d4);
    let q1 = 2.0 * d1.dot(d2);
    let q2 = 2.0 * (d2.norm_squared() + d1.dot(d3));
    let dzeta = num / q;
    let ddzeta = (num1 * q - num * q1) / (q * q);
    let dddzeta = (num2 * q - num * q2) / (q * q) - 2.0 * q1 * (num1 * q - num * q1) / (q * q * q);
    Ok(HeadingJet {
        zeta: if unwrap {
            curve.unwrapped_tangent_angle(u)?
        } else {
            d1.angle()
        },
        dzeta,
        ddzeta,
        dddzeta,
    })
}

/// `θ(u)` and its first three derivatives.
pub fn orientation_third(mode: &MotionMode, curve: &BezierCurve, u: f64) -> Result<[f64; 4]> {
    orientation_third_with(mode, curve, u, true)
}

/// As [`orientation_third`] but with `θ` only defined modulo 2π, which is
/// all that rotations of the wheel offsets need.
pub(crate) fn orientation_third_principal(
    mode: &MotionMode,
    curve: &BezierCurve,
    u: f64,
) -> Result<[f64; 4]> {
    orientation_third_with(mode, curve, u, false)
}

fn orientation_third_with(
    mode: &MotionMode,
    curve: &BezierCurve,
    u: f64,
    unwrap: bool,
) -> Result<[f64; 4]> {
    check_unit(u)?;
    mode.validate()?;
    let Some([phi, p1, p2, p3]) = mode.reparameterization(u) else {
        return Ok([mode.alpha(), 0.0, 0.0, 0.0]);
    };
    let h = heading_jet_with(curve, phi.clamp(0.0, 1.0), unwrap)?;
    let theta = h.zeta + mode.alpha();
    let dtheta = h.dzeta * p1;
    let ddtheta = h.ddzeta * p1 * p1 + mul0(h.dzeta, p2);
    let dddtheta =
        h.dddzeta * p1 * p1 * p1 + mul0(3.0 * h.ddzeta * p1, p2) + mul0(h.dzeta, p3);
    Ok([theta, dtheta, ddtheta, dddtheta])
}

/// Orientation jet of `mode` on `curve` at `u`.
pub fn orientation(mode: &MotionMode, curve: &BezierCurve, u: f64) -> Result<OrientationJet> {
    let [theta, dtheta, ddtheta, _] = orientation_third(mode, curve, u)?;
    Ok(OrientationJet {
        theta,
        dtheta,
        ddtheta,
    })
}

/// Which end of a segment a one-sided quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentEnd {
    Start,
    End,
}

impl SegmentEnd {
    pub fn parameter(self) -> f64 {
        match self {
            SegmentEnd::Start => 0.0,
            SegmentEnd::End => 1.0,
        }
    }
}

/// One-sided orientation jet at a segment end. The exponential
/// reparameterizations are evaluated in closed form at `u = 0` and `u = 1`,
/// so e.g. the delayed variant reports `θ' = 0` at its start.
pub fn mode_jet_at_junction(
    mode: &MotionMode,
    curve: &BezierCurve,
    end: SegmentEnd,
) -> Result<OrientationJet> {
    orientation(mode, curve, end.parameter())
}
