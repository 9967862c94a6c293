//! Junction analysis.
//!
//! A junction between two segments is driven without jumps in wheel speed
//! or steering rate iff the curves and the motion modes are both G₂ with one
//! shared set of shape parameters:
//!
//! ```text
//! C(u⁻)  = C(u⁺)                         θ(u⁻)  = θ(u⁺)
//! C'(u⁻) = β₁C'(u⁺)                      θ'(u⁻) = β₁θ'(u⁺)
//! C''(u⁻) = β₁²C''(u⁺) + β₂C'(u⁺)        θ''(u⁻) = β₁²θ''(u⁺) + β₂θ'(u⁺)
//! ```
//!
//! β is extracted once from the curve jets and every condition is tested
//! with it. When the vehicle stops at the junction, G₀ and G₁ suffice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{
    curvature, curvature_arc_derivative, wrap_angle, CurveJet, Point2, ShapeParameters,
};
use crate::error::{Error, Result};
use crate::kinematics::wheel_curve_jet;
use crate::motion::{orientation_third, MotionMode};
use crate::vehicle::{Path, PathSegment, VehicleModel};

/// Below this `|θ'(u⁺)|` the mode route to β is not attempted.
const MODE_ROUTE_THRESHOLD: f64 = 1e-9;

/// Acceptance thresholds for a junction report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Junction position mismatch, meters.
    pub position: f64,
    /// Orientation mismatch, radians.
    pub angle: f64,
    /// Derivative conditions, relative to `max(1, ‖rhs‖)`.
    pub derivative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            position: 1e-6,
            angle: 1e-8,
            derivative: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("position", self.position),
            ("angle", self.angle),
            ("derivative", self.derivative),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} tolerance must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Two consecutive segments with their one-sided jets at the junction.
#[derive(Debug, Clone)]
pub struct JunctionContext {
    pub left: PathSegment,
    pub right: PathSegment,
    pub vehicle: VehicleModel,
    pub tolerances: Tolerances,
    left_jet: CurveJet,
    right_jet: CurveJet,
    left_mode: [f64; 4],
    right_mode: [f64; 4],
}

impl JunctionContext {
    pub fn new(left: PathSegment, right: PathSegment, vehicle: VehicleModel) -> Result<Self> {
        Self::with_tolerances(left, right, vehicle, Tolerances::default())
    }

    /// Refuses junctions whose position gap reaches `tolerances.position`.
    pub fn with_tolerances(
        left: PathSegment,
        right: PathSegment,
        vehicle: VehicleModel,
        tolerances: Tolerances,
    ) -> Result<Self> {
        tolerances.validate()?;
        let left_jet = left.curve.jet(1.0)?;
        let right_jet = right.curve.jet(0.0)?;
        let gap = left_jet.position.distance(right_jet.position);
        if gap.is_nan() || gap >= tolerances.position {
            return Err(Error::JunctionGap {
                gap,
                tolerance: tolerances.position,
            });
        }
        let left_mode = orientation_third(&left.mode, &left.curve, 1.0)?;
        let right_mode = orientation_third(&right.mode, &right.curve, 0.0)?;
        Ok(Self {
            left,
            right,
            vehicle,
            tolerances,
            left_jet,
            right_jet,
            left_mode,
            right_mode,
        })
    }

    /// Curve jet of the left segment at `u = 1`.
    pub fn left_jet(&self) -> &CurveJet {
        &self.left_jet
    }

    /// Curve jet of the right segment at `u = 0`.
    pub fn right_jet(&self) -> &CurveJet {
        &self.right_jet
    }

    /// `[θ, θ', θ'', θ''']` of the left segment at `u = 1`.
    pub fn left_orientation(&self) -> [f64; 4] {
        self.left_mode
    }

    /// `[θ, θ', θ'', θ''']` of the right segment at `u = 0`.
    pub fn right_orientation(&self) -> [f64; 4] {
        self.right_mode
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Smooth,
    /// Only G₀ and G₁ hold: the junction may be driven through a stop.
    SmoothAtRestOnly,
    Discontinuous,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Smooth => "smooth",
            Verdict::SmoothAtRestOnly => "smooth_at_rest_only",
            Verdict::Discontinuous => "discontinuous",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of shape-parameter extraction with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
struct Extraction {
    beta: Option<ShapeParameters>,
    /// β₁, β₂ from the mode jets when `θ'(u⁺)` is usable.
    mode_beta: Option<[f64; 2]>,
    reversal: bool,
}

fn tangential_component(v: Point2, dir: Point2) -> f64 {
    v.dot(dir) / dir.norm_squared()
}

fn extract(ctx: &JunctionContext) -> Extraction {
    let l = &ctx.left_jet;
    let r = &ctx.right_jet;
    let (nl, nr) = (l.d1.norm(), r.d1.norm());
    let reversal = l.d1.dot(r.d1) < 0.0;
    let beta = if reversal || !(nl > 0.0 && nr > 0.0) {
        None
    } else {
        let b1 = nl / nr;
        let b2 = tangential_component(l.d2 - r.d2 * (b1 * b1), r.d1);
        let b3 = tangential_component(l.d3 - r.d3 * (b1 * b1 * b1) - r.d2 * (3.0 * b1 * b2), r.d1);
        Some(ShapeParameters {
            beta1: b1,
            beta2: b2,
            beta3: Some(b3),
        })
    };
    let [_, tl1, tl2, _] = ctx.left_mode;
    let [_, tr1, tr2, _] = ctx.right_mode;
    let mode_beta = if tr1.abs() > MODE_ROUTE_THRESHOLD && tl2.is_finite() && tr2.is_finite() {
        let b1 = tl1 / tr1;
        Some([b1, (tl2 - b1 * b1 * tr2) / tr1])
    } else {
        None
    };
    Extraction {
        beta,
        mode_beta,
        reversal,
    }
}

/// Shape parameters of the junction, from the curve jets:
/// `β₁ = ‖C'(u⁻)‖ / ‖C'(u⁺)‖` and `β₂`, `β₃` as least-squares solutions of
/// the G₂ and G₃ conditions along `C'(u⁺)`.
pub fn extract_shape_parameters(ctx: &JunctionContext) -> Result<ShapeParameters> {
    let ex = extract(ctx);
    if ex.reversal {
        return Err(Error::DegenerateGeometry(
            "heading reversal at the junction (β₁ < 0)".into(),
        ));
    }
    ex.beta
        .ok_or_else(|| Error::DegenerateGeometry("shape parameters are indeterminate".into()))
}

/// Per-junction continuity report. Derivative residuals are relative,
/// `‖lhs − rhs‖ / max(1, ‖rhs‖)`; `None` means the condition could not be
/// formed (no β).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// Meters.
    pub g0_position: f64,
    /// Radians, wrapped into `(−π, π]`.
    pub g0_orientation: f64,
    pub beta: Option<ShapeParameters>,
    /// β₁, β₂ recovered from the motion modes, when `θ'(u⁺) ≠ 0`.
    pub mode_beta: Option<[f64; 2]>,
    pub curve_g1: Option<f64>,
    pub curve_g2: Option<f64>,
    /// Reported for information; not part of the verdict.
    pub curve_g3: Option<f64>,
    pub mode_g1: Option<f64>,
    pub mode_g2: Option<f64>,
    pub verdict: Verdict,
    /// Names of the conditions that failed.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub tolerances: Tolerances,
}

impl ContinuityReport {
    pub fn is_smooth(&self) -> bool {
        self.verdict == Verdict::Smooth
    }
}

fn rel(defect: f64, rhs: f64) -> f64 {
    defect / rhs.abs().max(1.0)
}

fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

fn passes(r: Option<f64>, tol: f64) -> bool {
    matches!(r, Some(r) if r < tol)
}

pub fn check_theorem(ctx: &JunctionContext) -> ContinuityReport {
    let tol = ctx.tolerances;
    let ex = extract(ctx);
    let l = &ctx.left_jet;
    let r = &ctx.right_jet;
    let [tl0, tl1, tl2, _] = ctx.left_mode;
    let [tr0, tr1, tr2, _] = ctx.right_mode;

    let g0_position = l.position.distance(r.position);
    let g0_orientation = wrap_angle(tl0 - tr0);
    let mut notes = Vec::new();

    let (curve_g1, curve_g2, curve_g3, mode_g1, mode_g2) = match ex.beta {
        Some(b) => {
            let res = crate::curve::check_geometric_continuity(l, r, &b, 3)
                .map(|g| g.relative())
                .unwrap_or_default();
            let rhs1 = b.beta1 * tr1;
            let rhs2 = mul0(b.beta1 * b.beta1, tr2) + mul0(b.beta2, tr1);
            (
                res.get(1).copied(),
                res.get(2).copied(),
                res.get(3).copied(),
                Some(rel((tl1 - rhs1).abs(), rhs1)),
                Some(rel((tl2 - rhs2).abs(), rhs2)).map(|v| if v.is_nan() { f64::INFINITY } else { v }),
            )
        }
        None => (None, None, None, None, None),
    };

    if ex.reversal {
        notes.push("heading reversal at the junction: only drivable through a stop with a reversal of direction".into());
    } else if ex.beta.is_none() {
        notes.push("shape parameters are indeterminate".into());
    }
    if let (Some(b), Some([m1, m2])) = (ex.beta, ex.mode_beta) {
        let d1 = rel((m1 - b.beta1).abs(), b.beta1);
        let d2 = rel((m2 - b.beta2).abs(), b.beta2);
        if d1 >= tol.derivative || d2 >= tol.derivative {
            notes.push(format!(
                "motion-mode shape parameters (β₁ = {m1:.9}, β₂ = {m2:.9}) disagree with the curve's (β₁ = {:.9}, β₂ = {:.9})",
                b.beta1, b.beta2
            ));
        }
    }

    let checks = [
        ("g0_position", g0_position < tol.position),
        ("g0_orientation", g0_orientation.abs() < tol.angle),
        ("curve_g1", passes(curve_g1, tol.derivative)),
        ("mode_g1", passes(mode_g1, tol.derivative)),
        ("curve_g2", passes(curve_g2, tol.derivative)),
        ("mode_g2", passes(mode_g2, tol.derivative)),
    ];
    let failures: Vec<String> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| n.to_string())
        .collect();
    let verdict = if failures.is_empty() {
        Verdict::Smooth
    } else if checks[..4].iter().all(|(_, ok)| *ok) {
        notes.push("G₁ only: the vehicle must stop at this junction".into());
        Verdict::SmoothAtRestOnly
    } else {
        Verdict::Discontinuous
    };

    ContinuityReport {
        g0_position,
        g0_orientation,
        beta: ex.beta,
        mode_beta: ex.mode_beta,
        curve_g1,
        curve_g2,
        curve_g3,
        mode_g1,
        mode_g2,
        verdict,
        failures,
        notes,
        tolerances: tol,
    }
}

/// G₁/G₂ audit of one wheel path at the junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WheelAudit {
    pub wheel_id: String,
    /// β₁, β₂ fitted to this wheel's path alone (`None` at a pivot point).
    pub beta_w: Option<[f64; 2]>,
    /// Residuals of the wheel path's G₁ and G₂ conditions under the
    /// vehicle's shared β.
    pub g1: f64,
    pub g2: f64,
    pub passes: bool,
}

/// Checks every wheel path against the vehicle's shape parameters, and
/// fits independent per-wheel parameters for comparison.
pub fn wheel_level_audit(ctx: &JunctionContext) -> Result<Vec<WheelAudit>> {
    let beta = extract_shape_parameters(ctx)?;
    let (b1, b2) = (beta.beta1, beta.beta2);
    ctx.vehicle
        .wheels()
        .iter()
        .map(|w| {
            let l = wheel_curve_jet(&ctx.left, w, 1.0)?;
            let r = wheel_curve_jet(&ctx.right, w, 0.0)?;
            let rhs1 = r.d1 * b1;
            let rhs2 = r.d2 * (b1 * b1) + r.d1 * b2;
            let g1 = rel((l.d1 - rhs1).norm(), rhs1.norm());
            let g2 = rel((l.d2 - rhs2).norm(), rhs2.norm());
            let g1 = if g1.is_nan() { f64::INFINITY } else { g1 };
            let g2 = if g2.is_nan() { f64::INFINITY } else { g2 };
            let beta_w = (r.d1.norm_squared() > 0.0 && r.d1.is_finite() && r.d2.is_finite()).then(|| {
                let bw1 = tangential_component(l.d1, r.d1);
                let bw2 = tangential_component(l.d2 - r.d2 * (bw1 * bw1), r.d1);
                [bw1, bw2]
            });
            let tol = ctx.tolerances.derivative;
            Ok(WheelAudit {
                wheel_id: w.id.clone(),
                beta_w,
                g1,
                g2,
                passes: g1 < tol && g2 < tol,
            })
        })
        .collect()
}

/// Junction of two tangential segments: mode G₁ is curvature continuity and
/// mode G₂ is continuity of `dκ/ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentialReport {
    /// `|α⁻ − α⁺|` wrapped, radians.
    pub alpha_residual: f64,
    pub kappa_left: f64,
    pub kappa_right: f64,
    /// `|κ⁻ − κ⁺| / max(1, |κ⁺|)`.
    pub kappa_residual: f64,
    pub dkappa_ds_left: f64,
    pub dkappa_ds_right: f64,
    pub dkappa_ds_residual: f64,
    pub passes: bool,
    /// Whether `passes` agrees with the generic check being smooth.
    pub agrees_with_theorem: bool,
}

pub fn check_tangential_special(ctx: &JunctionContext) -> Result<TangentialReport> {
    let (al, ar) = match (ctx.left.mode, ctx.right.mode) {
        (MotionMode::Tangential { alpha: a }, MotionMode::Tangential { alpha: b }) => (a, b),
        _ => {
            return Err(Error::InvalidMode(
                "the curvature rule needs tangential mode on both segments".into(),
            ))
        }
    };
    let tol = ctx.tolerances;
    let kl = curvature(&ctx.left_jet)?;
    let kr = curvature(&ctx.right_jet)?;
    let dl = curvature_arc_derivative(&ctx.left_jet)?;
    let dr = curvature_arc_derivative(&ctx.right_jet)?;
    let alpha_residual = wrap_angle(al - ar).abs();
    let kappa_residual = rel((kl - kr).abs(), kr);
    let dkappa_ds_residual = rel((dl - dr).abs(), dr);
    let g1 = check_theorem(ctx);
    let g1_ok = g1.g0_position < tol.position
        && passes(g1.curve_g1, tol.derivative)
        && !g1.notes.iter().any(|n| n.starts_with("heading reversal"));
    let passes = g1_ok
        && alpha_residual < tol.angle
        && kappa_residual < tol.derivative
        && dkappa_ds_residual < tol.derivative;
    Ok(TangentialReport {
        alpha_residual,
        kappa_left: kl,
        kappa_right: kr,
        kappa_residual,
        dkappa_ds_left: dl,
        dkappa_ds_right: dr,
        dkappa_ds_residual,
        passes,
        agrees_with_theorem: passes == g1.is_smooth(),
    })
}

/// Tangential segment followed by an anticipated exponential one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialReport {
    pub n: f64,
    /// Curvature on each side; both must vanish.
    pub kappa_left: f64,
    pub kappa_right: f64,
    /// Largest `|det(t, v)| / max(1, ‖v‖)` over `v ∈ {C₂', C₁'', C₂''}`,
    /// with `t` the unit tangent of `C₁'(1)`.
    pub scalar_multiple: f64,
    /// `‖C₁'(1)‖ / ‖C₂'(0)‖`.
    pub beta1: f64,
    /// `‖C₁'''(1) − β₁³n²C₂'''(0)‖ / max(1, ‖β₁³n²C₂'''(0)‖)`.
    pub third_derivative: f64,
    /// Normal component of the same defect, relative to the same scale.
    pub third_derivative_normal: f64,
    pub passes: bool,
}

pub fn check_exponential_special(ctx: &JunctionContext) -> Result<ExponentialReport> {
    let n = match (ctx.left.mode, ctx.right.mode) {
        (MotionMode::Tangential { .. }, MotionMode::ExponentialAnticipated { n, .. }) => n,
        _ => {
            return Err(Error::InvalidMode(
                "the exponential rule needs a tangential segment followed by an anticipated exponential one".into(),
            ))
        }
    };
    let tol = ctx.tolerances.derivative;
    let l = &ctx.left_jet;
    let r = &ctx.right_jet;
    let kl = curvature(l)?;
    let kr = curvature(r)?;
    let t = l.d1 * (1.0 / l.d1.norm());
    let scalar_multiple = [r.d1, l.d2, r.d2]
        .iter()
        .map(|v| t.det(*v).abs() / v.norm().max(1.0))
        .fold(0.0, f64::max);
    let beta1 = l.d1.norm() / r.d1.norm();
    let rhs = r.d3 * (beta1.powi(3) * n * n);
    let defect = l.d3 - rhs;
    let scale = rhs.norm().max(1.0);
    let third_derivative = defect.norm() / scale;
    let third_derivative_normal = t.det(defect).abs() / scale;
    let reversal = l.d1.dot(r.d1) <= 0.0;
    let passes = !reversal
        && kl.abs() < tol
        && kr.abs() < tol
        && scalar_multiple < tol
        && third_derivative < tol;
    Ok(ExponentialReport {
        n,
        kappa_left: kl,
        kappa_right: kr,
        scalar_multiple,
        beta1,
        third_derivative,
        third_derivative_normal,
        passes,
    })
}

/// One report per interior junction, in path order.
pub fn check_path(
    path: &Path,
    vehicle: &VehicleModel,
    tolerances: Tolerances,
) -> Result<Vec<ContinuityReport>> {
    path.segments()
        .par_windows(2)
        .map(|pair| {
            let ctx = JunctionContext::with_tolerances(
                pair[0].clone(),
                pair[1].clone(),
                vehicle.clone(),
                tolerances,
            )?;
            Ok(check_theorem(&ctx))
        })
        .collect()
}
