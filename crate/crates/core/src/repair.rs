//! Junction repair: move the control points next to a junction so that the
//! curves and motion modes become G₂ with shared shape parameters.
//!
//! The free parameters of the construction (the shape parameters, or the
//! derivative multipliers of the exponential construction) are chosen by a
//! bounded multi-start direct search, minimizing either the estimated travel
//! time or the control-point displacement.

use serde::{Deserialize, Serialize};

use crate::continuity::{check_theorem, ContinuityReport, JunctionContext, Verdict};
use crate::curve::{wrap_angle, BezierCurve, Point2, ShapeParameters};
use crate::error::{Error, Result};
use crate::kinematics::limit_at;
use crate::motion::{MotionMode, SegmentEnd};
use crate::optimize::{minimize_multistart, Bounds, NelderMeadOptions};
use crate::quadrature;
use crate::vehicle::{PathSegment, VehicleModel};

/// Panels of the composite 24-point rule used for travel-time estimates.
pub const TRAVEL_TIME_PANELS: usize = 8;

/// Replaces the control points next to one end so that the derivatives of
/// order `1..=target.len()` at that end equal `target`. The end point itself
/// and every other control point are left untouched.
pub fn derivative_to_control_points(
    curve: &BezierCurve,
    end: SegmentEnd,
    target: &[Point2],
) -> Result<BezierCurve> {
    let k = target.len();
    let n = curve.degree();
    if k > 3 {
        return Err(Error::InvalidArgument(format!(
            "derivatives above third order cannot be prescribed (got {k})"
        )));
    }
    if n < k {
        return Err(Error::InvalidCurve(format!(
            "a degree-{n} curve cannot take {k} prescribed derivatives"
        )));
    }
    let nf = n as f64;
    let f1 = nf;
    let f2 = nf * (nf - 1.0);
    let f3 = nf * (nf - 1.0) * (nf - 2.0);
    let mut pts = curve.points().to_vec();
    match end {
        SegmentEnd::Start => {
            let p0 = pts[0];
            if k >= 1 {
                pts[1] = p0 + target[0] * (1.0 / f1);
            }
            if k >= 2 {
                pts[2] = target[1] * (1.0 / f2) + pts[1] * 2.0 - p0;
            }
            if k >= 3 {
                pts[3] = target[2] * (1.0 / f3) + pts[2] * 3.0 - pts[1] * 3.0 + p0;
            }
        }
        SegmentEnd::End => {
            let pn = pts[n];
            if k >= 1 {
                pts[n - 1] = pn - target[0] * (1.0 / f1);
            }
            if k >= 2 {
                pts[n - 2] = target[1] * (1.0 / f2) - pn + pts[n - 1] * 2.0;
            }
            if k >= 3 {
                pts[n - 3] = pn - pts[n - 1] * 3.0 + pts[n - 2] * 3.0 - target[2] * (1.0 / f3);
            }
        }
    }
    BezierCurve::new(pts)
}

/// `∫ ds / v_max(s)` over the segment: the time to drive it at its speed
/// limit everywhere, ignoring acceleration.
pub fn estimate_travel_time(segment: &PathSegment, vehicle: &VehicleModel) -> Result<f64> {
    let mut failure = None;
    let total = quadrature::rule().integrate_composite(0.0, 1.0, TRAVEL_TIME_PANELS, |u| {
        if failure.is_some() {
            return 0.0;
        }
        let speed = match segment.curve.derivative(u, 1) {
            Ok(d) => d.norm(),
            Err(e) => {
                failure = Some(e);
                return 0.0;
            }
        };
        match limit_at(segment, vehicle, u) {
            Ok((v, _, _)) if v > 0.0 => speed / v,
            Ok(_) => {
                failure = Some(Error::InfiniteTravelTime);
                0.0
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None if total.is_finite() => Ok(total),
        None => Err(Error::InfiniteTravelTime),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of the estimated travel times of both segments.
    #[default]
    MinTravelTime,
    /// Euclidean norm of all control-point moves.
    MinDisplacement,
}

/// Which segment's control points a repair may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RepairSide {
    Left,
    #[default]
    Right,
    Both,
}

#[derive(Debug, Clone)]
pub struct RepairProblem {
    pub ctx: JunctionContext,
    pub objective: Objective,
    /// Ignored by the exponential construction, which always edits both.
    pub side: RepairSide,
    pub options: NelderMeadOptions,
}

impl RepairProblem {
    pub fn new(ctx: JunctionContext) -> Self {
        Self {
            ctx,
            objective: Objective::default(),
            side: RepairSide::default(),
            options: NelderMeadOptions::default(),
        }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_side(mut self, side: RepairSide) -> Self {
        self.side = side;
        self
    }
}

/// A control point that changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovedPoint {
    /// `Left` or `Right` segment of the junction.
    pub segment: RepairSide,
    pub index: usize,
    pub before: Point2,
    pub after: Point2,
}

#[derive(Debug, Clone)]
pub struct RepairResult {
    pub left: PathSegment,
    pub right: PathSegment,
    /// Shape parameters of the repaired junction.
    pub parameters: ShapeParameters,
    /// `[x_C1', x_C1'', x_C2', x_C2'']` of the exponential construction.
    pub multipliers: Option<[f64; 4]>,
    pub objective: Objective,
    /// Seconds for travel time, meters for displacement.
    pub objective_value: f64,
    /// Estimated travel time of both repaired segments, seconds.
    pub travel_time: f64,
    pub max_displacement: f64,
    pub moved: Vec<MovedPoint>,
    pub report_after: ContinuityReport,
}

/// Dispatches on the mode pair of the junction.
pub fn repair_junction(problem: &RepairProblem) -> Result<RepairResult> {
    match (problem.ctx.left.mode, problem.ctx.right.mode) {
        (MotionMode::Tangential { .. }, MotionMode::Tangential { .. })
        | (MotionMode::Crab { .. }, MotionMode::Crab { .. }) => repair_tangential(problem),
        (MotionMode::Tangential { .. }, MotionMode::ExponentialAnticipated { .. }) => {
            repair_exponential(problem)
        }
        (l, r) => Err(Error::Unsupported(format!(
            "no repair construction for a {} segment followed by a {} one",
            l.tag(),
            r.tag()
        ))),
    }
}

fn sq_displacement(before: &BezierCurve, after: &BezierCurve) -> f64 {
    before
        .points()
        .iter()
        .zip(after.points())
        .map(|(a, b)| (*a - *b).norm_squared())
        .sum()
}

fn moved_points(side: RepairSide, before: &BezierCurve, after: &BezierCurve) -> Vec<MovedPoint> {
    before
        .points()
        .iter()
        .zip(after.points())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(index, (a, b))| MovedPoint {
            segment: side,
            index,
            before: *a,
            after: *b,
        })
        .collect()
}

fn require_degree(seg: &PathSegment, order: usize, which: &str) -> Result<()> {
    if seg.curve.degree() <= order {
        return Err(Error::Unsupported(format!(
            "the {which} curve has degree {} but prescribing {order} derivatives needs degree {} or more",
            seg.curve.degree(),
            order + 1
        )));
    }
    Ok(())
}

/// Shared objective evaluation for a candidate pair of curves.
struct Evaluator<'a> {
    problem: &'a RepairProblem,
    /// Travel times of the unrepaired segments, reused while a side is
    /// left untouched.
    base_left: Option<f64>,
    base_right: Option<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a RepairProblem) -> Self {
        let ctx = &problem.ctx;
        let (base_left, base_right) = match problem.objective {
            Objective::MinTravelTime => (
                estimate_travel_time(&ctx.left, &ctx.vehicle).ok(),
                estimate_travel_time(&ctx.right, &ctx.vehicle).ok(),
            ),
            Objective::MinDisplacement => (None, None),
        };
        Self {
            problem,
            base_left,
            base_right,
        }
    }

    fn time(&self, seg: &PathSegment, original: &PathSegment, base: Option<f64>) -> Option<f64> {
        if seg.curve == original.curve {
            base
        } else {
            estimate_travel_time(seg, &self.problem.ctx.vehicle).ok()
        }
    }

    fn candidate(&self, left: &BezierCurve, right: &BezierCurve) -> Option<(PathSegment, PathSegment)> {
        let ctx = &self.problem.ctx;
        let l = if left == &ctx.left.curve {
            ctx.left.clone()
        } else {
            ctx.left.with_curve(left.clone()).ok()?
        };
        let r = if right == &ctx.right.curve {
            ctx.right.clone()
        } else {
            ctx.right.with_curve(right.clone()).ok()?
        };
        Some((l, r))
    }

    fn value(&self, left: &BezierCurve, right: &BezierCurve) -> f64 {
        let ctx = &self.problem.ctx;
        match self.problem.objective {
            Objective::MinDisplacement => {
                sq_displacement(&ctx.left.curve, left) + sq_displacement(&ctx.right.curve, right)
            }
            Objective::MinTravelTime => {
                let Some((l, r)) = self.candidate(left, right) else {
                    return f64::INFINITY;
                };
                let tl = self.time(&l, &ctx.left, self.base_left);
                let tr = self.time(&r, &ctx.right, self.base_right);
                match (tl, tr) {
                    (Some(a), Some(b)) => a + b,
                    _ => f64::INFINITY,
                }
            }
        }
    }

    fn finish(
        &self,
        left: BezierCurve,
        right: BezierCurve,
        multipliers: Option<[f64; 4]>,
    ) -> Result<RepairResult> {
        let ctx = &self.problem.ctx;
        let (l, r) = self.candidate(&left, &right).ok_or_else(|| {
            Error::Infeasible("the best candidate has an irregular curve".into())
        })?;
        let new_ctx =
            JunctionContext::with_tolerances(l.clone(), r.clone(), ctx.vehicle.clone(), ctx.tolerances)?;
        let report_after = check_theorem(&new_ctx);
        if report_after.verdict != Verdict::Smooth {
            return Err(Error::Infeasible(format!(
                "repaired junction still fails: {}",
                report_after.failures.join(", ")
            )));
        }
        let parameters = report_after.beta.ok_or_else(|| {
            Error::Infeasible("repaired junction has no shape parameters".into())
        })?;
        let travel_time = estimate_travel_time(&l, &ctx.vehicle)? + estimate_travel_time(&r, &ctx.vehicle)?;
        let sq = sq_displacement(&ctx.left.curve, &left) + sq_displacement(&ctx.right.curve, &right);
        let mut moved = moved_points(RepairSide::Left, &ctx.left.curve, &left);
        moved.extend(moved_points(RepairSide::Right, &ctx.right.curve, &right));
        let max_displacement = moved
            .iter()
            .map(|m| m.before.distance(m.after))
            .fold(0.0, f64::max);
        let objective_value = match self.problem.objective {
            Objective::MinTravelTime => travel_time,
            Objective::MinDisplacement => sq.sqrt(),
        };
        Ok(RepairResult {
            left: l,
            right: r,
            parameters,
            multipliers,
            objective: self.problem.objective,
            objective_value,
            travel_time,
            max_displacement,
            moved,
            report_after,
        })
    }
}

/// Unit tangent and left normal of a direction.
fn frame(d: Point2) -> (Point2, Point2) {
    let t = d * (1.0 / d.norm());
    (t, t.perp())
}

/// Tangential–tangential (G₃ curves) or crab–crab (G₂ curves) repair.
///
/// With one side editable the other side's jet is kept and the edited jet is
/// derived from it through candidate shape parameters `(β₁, β₂, β₃)`. With
/// both sides editable each side keeps its own speed and tangential
/// components while the curvature and its arc derivative at the junction
/// are set to shared candidate values.
pub fn repair_tangential(problem: &RepairProblem) -> Result<RepairResult> {
    let ctx = &problem.ctx;
    let order = match (ctx.left.mode, ctx.right.mode) {
        (MotionMode::Tangential { alpha: a }, MotionMode::Tangential { alpha: b }) => {
            check_alpha(a, b, ctx.tolerances.angle)?;
            3
        }
        (MotionMode::Crab { alpha: a }, MotionMode::Crab { alpha: b }) => {
            check_alpha(a, b, ctx.tolerances.angle)?;
            2
        }
        _ => {
            return Err(Error::InvalidMode(
                "shape-parameter repair needs two tangential or two crab segments".into(),
            ))
        }
    };
    let l = *ctx.left_jet();
    let r = *ctx.right_jet();
    if l.d1.dot(r.d1) <= 0.0 {
        return Err(Error::Infeasible(
            "heading reversal at the junction cannot be repaired".into(),
        ));
    }
    let eval = Evaluator::new(problem);
    let opts = problem.options;

    match problem.side {
        RepairSide::Right | RepairSide::Left => {
            let right_side = problem.side == RepairSide::Right;
            let edited = if right_side { &ctx.right } else { &ctx.left };
            require_degree(edited, order, if right_side { "right" } else { "left" })?;

            let b1 = l.d1.norm() / r.d1.norm();
            let rd = |v: Point2| v.dot(r.d1) / r.d1.norm_squared();
            let b2 = rd(l.d2 - r.d2 * (b1 * b1));
            let b3 = rd(l.d3 - r.d3 * b1.powi(3) - r.d2 * (3.0 * b1 * b2));
            let s2 = b2.abs().max(1.0);
            let s3 = b3.abs().max(1.0);

            let build = |x: &[f64]| -> Result<(BezierCurve, BezierCurve)> {
                let beta1 = x[0].exp();
                let beta2 = x[1] * s2;
                let beta3 = x.get(2).copied().unwrap_or(0.0) * s3;
                if right_side {
                    let d1 = l.d1 * (1.0 / beta1);
                    let d2 = (l.d2 - d1 * beta2) * (1.0 / (beta1 * beta1));
                    let d3 = (l.d3 - d2 * (3.0 * beta1 * beta2) - d1 * beta3)
                        * (1.0 / beta1.powi(3));
                    let target = [d1, d2, d3];
                    let c = derivative_to_control_points(&ctx.right.curve, SegmentEnd::Start, &target[..order])?;
                    Ok((ctx.left.curve.clone(), c))
                } else {
                    let d1 = r.d1 * beta1;
                    let d2 = r.d2 * (beta1 * beta1) + r.d1 * beta2;
                    let d3 = r.d3 * beta1.powi(3) + r.d2 * (3.0 * beta1 * beta2) + r.d1 * beta3;
                    let target = [d1, d2, d3];
                    let c = derivative_to_control_points(&ctx.left.curve, SegmentEnd::End, &target[..order])?;
                    Ok((c, ctx.right.curve.clone()))
                }
            };
            let f = |x: &[f64]| match build(x) {
                Ok((a, b)) => eval.value(&a, &b),
                Err(_) => f64::INFINITY,
            };

            let dims = order;
            let x0: Vec<f64> = [b1.ln(), b2 / s2, b3 / s3][..dims].to_vec();
            let lower: Vec<f64> = [0.1f64.ln(), -10.0, -10.0][..dims].to_vec();
            let upper: Vec<f64> = [10f64.ln(), 10.0, 10.0][..dims].to_vec();
            let bounds = Bounds::new(lower, upper);
            let mut starts = vec![x0.clone()];
            for (i, delta) in [(0usize, 0.25), (0, -0.25), (1, 0.5), (1, -0.5)] {
                let mut s = x0.clone();
                s[i] += delta;
                starts.push(s);
            }
            let best = minimize_multistart(&f, &starts, &bounds, &opts)
                .filter(|m| m.value.is_finite())
                .ok_or_else(|| Error::Infeasible("no candidate with regular curves".into()))?;
            let (a, b) = build(&best.x)?;
            eval.finish(a, b, None)
        }
        RepairSide::Both => {
            require_degree(&ctx.left, order, "left")?;
            require_degree(&ctx.right, order, "right")?;
            let (t, nrm) = frame(l.d1);
            let nl = l.d1.norm();
            let nr = r.d1.norm();
            let kl = l.d1.det(l.d2) / nl.powi(3);
            let kr = r.d1.det(r.d2) / nr.powi(3);
            let dkl = crate::curve::curvature_arc_derivative(&l)?;
            let dkr = crate::curve::curvature_arc_derivative(&r)?;
            let sk = kl.abs().max(kr.abs()).max(1e-3);
            let sd = dkl.abs().max(dkr.abs()).max(1e-3);

            // Jet with speed `s`, tangential components `a2`, `a3`, curvature
            // `k` and arc derivative of curvature `dk` along the tangent `t`.
            let jet = |s: f64, a2: f64, a3: f64, k: f64, dk: f64| -> [Point2; 3] {
                let d1 = t * s;
                let d2 = t * a2 + nrm * (k * s * s);
                let det12 = d1.det(d2);
                let dot12 = d1.dot(d2);
                // dκ/ds · s⁶ = det(d1,d3)·s² − 3 det(d1,d2)(d1·d2)
                let det13 = (dk * s.powi(6) + 3.0 * det12 * dot12) / (s * s);
                [d1, d2, t * a3 + nrm * (det13 / s)]
            };
            let build = |x: &[f64]| -> Result<(BezierCurve, BezierCurve)> {
                let k = x[0] * sk;
                let dk = x.get(1).copied().unwrap_or(0.0) * sd;
                let jl = jet(nl, l.d2.dot(t), l.d3.dot(t), k, dk);
                let jr = jet(nr, r.d2.dot(t), r.d3.dot(t), k, dk);
                let a = derivative_to_control_points(&ctx.left.curve, SegmentEnd::End, &jl[..order])?;
                let b = derivative_to_control_points(&ctx.right.curve, SegmentEnd::Start, &jr[..order])?;
                Ok((a, b))
            };
            let f = |x: &[f64]| match build(x) {
                Ok((a, b)) => eval.value(&a, &b),
                Err(_) => f64::INFINITY,
            };
            let dims = order - 1;
            let centre = [0.5 * (kl + kr) / sk, 0.5 * (dkl + dkr) / sd];
            let lower: Vec<f64> = centre.iter().map(|c| c - 10.0).take(dims).collect();
            let upper: Vec<f64> = centre.iter().map(|c| c + 10.0).take(dims).collect();
            let bounds = Bounds::new(lower, upper);
            let starts: Vec<Vec<f64>> = [
                centre,
                [kl / sk, dkl / sd],
                [kr / sk, dkr / sd],
            ]
            .iter()
            .map(|s| s[..dims].to_vec())
            .collect();
            let best = minimize_multistart(&f, &starts, &bounds, &opts)
                .filter(|m| m.value.is_finite())
                .ok_or_else(|| Error::Infeasible("no candidate with regular curves".into()))?;
            let (a, b) = build(&best.x)?;
            eval.finish(a, b, None)
        }
    }
}

fn check_alpha(a: f64, b: f64, tol: f64) -> Result<()> {
    if wrap_angle(a - b).abs() >= tol {
        return Err(Error::Infeasible(format!(
            "angle offsets differ ({a} rad vs {b} rad); orientation cannot be continuous"
        )));
    }
    Ok(())
}

/// Tangential segment into an anticipated exponential one.
///
/// The first and second derivatives on both sides become multiples
/// `X = [x₁, x₂, x₃, x₄]` of the original `C₁'(1)`, which zeroes both
/// curvatures and keeps the heading at the junction, and `β₁ = x₁/x₃`. The
/// third derivatives satisfy `C₁'''(1) = β₁³n²C₂'''(0)`, with a free blend
/// `λ` between keeping the right-hand one (`λ = 0`) and keeping the
/// left-hand one (`λ = 1`).
pub fn repair_exponential(problem: &RepairProblem) -> Result<RepairResult> {
    let ctx = &problem.ctx;
    let n = match (ctx.left.mode, ctx.right.mode) {
        (MotionMode::Tangential { alpha: a }, MotionMode::ExponentialAnticipated { alpha: b, n }) => {
            check_alpha(a, b, ctx.tolerances.angle)?;
            n
        }
        _ => {
            return Err(Error::InvalidMode(
                "the exponential construction needs a tangential segment followed by an anticipated exponential one".into(),
            ))
        }
    };
    require_degree(&ctx.left, 3, "left")?;
    require_degree(&ctx.right, 3, "right")?;
    let l = *ctx.left_jet();
    let r = *ctx.right_jet();
    if l.d1.dot(r.d1) <= 0.0 {
        return Err(Error::Infeasible(
            "heading reversal at the junction cannot be repaired".into(),
        ));
    }
    let u0 = l.d1;
    let q = u0.norm_squared();
    let comp = |v: Point2| v.dot(u0) / q;
    let x0 = [1.0, comp(l.d2), comp(r.d1), comp(r.d2)];
    let s2 = x0[1].abs().max(1.0);
    let s4 = x0[3].abs().max(1.0);
    let n2 = n * n;

    let build = |x: &[f64]| -> Result<(BezierCurve, BezierCurve, [f64; 4])> {
        let m = [x[0], x[1] * s2, x[2], x[3] * s4];
        let beta1 = m[0] / m[2];
        let c = beta1.powi(3) * n2;
        let lambda = x[4];
        let d3r = r.d3 * (1.0 - lambda) + l.d3 * (lambda / c);
        let d3l = d3r * c;
        let a = derivative_to_control_points(
            &ctx.left.curve,
            SegmentEnd::End,
            &[u0 * m[0], u0 * m[1], d3l],
        )?;
        let b = derivative_to_control_points(
            &ctx.right.curve,
            SegmentEnd::Start,
            &[u0 * m[2], u0 * m[3], d3r],
        )?;
        Ok((a, b, m))
    };
    let eval = Evaluator::new(problem);
    let f = |x: &[f64]| match build(x) {
        Ok((a, b, _)) => eval.value(&a, &b),
        Err(_) => f64::INFINITY,
    };
    let start = vec![x0[0], x0[1] / s2, x0[2], x0[3] / s4, 0.5];
    let bounds = Bounds::new(
        vec![0.1, -10.0, 0.1 * x0[2].min(1.0), -10.0, -0.5],
        vec![10.0, 10.0, 10.0 * x0[2].max(1.0), 10.0, 1.5],
    );
    let mut starts = vec![start.clone()];
    for lambda in [0.0, 1.0] {
        let mut s = start.clone();
        s[4] = lambda;
        starts.push(s);
    }
    let best = minimize_multistart(&f, &starts, &bounds, &problem.options)
        .filter(|m| m.value.is_finite())
        .ok_or_else(|| Error::Infeasible("no candidate with regular curves".into()))?;
    let (a, b, m) = build(&best.x)?;
    eval.finish(a, b, Some(m))
}
