//! Planar parametric curves: Bézier evaluation with exact derivatives, arc
//! length, signed curvature and its arc-length derivative, and the raw
//! geometric-continuity (G_n) conditions between two one-sided jets.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Below this first-derivative norm a parameterization counts as singular.
pub const SINGULAR_SPEED: f64 = 1e-12;

/// Tolerance on successive arc-length estimates during adaptive bisection.
pub const ARC_LENGTH_TOLERANCE: f64 = 1e-9;

/// Grid size used to unwrap the tangent angle along a curve.
pub const HEADING_GRID: usize = 4096;

/// A point or vector in the plane, in meters (or meters per unit parameter
/// for derivatives).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// `det([self other])`, the z component of the cross product.
    pub fn det(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Rotation by +90°.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2 { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2 { x, y }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, rhs: Point2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        p * self
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Position and the first three parameter derivatives of a curve at one
/// parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveJet {
    pub position: Point2,
    pub d1: Point2,
    pub d2: Point2,
    pub d3: Point2,
}

impl CurveJet {
    /// Derivative of the given order (0 = position).
    pub fn derivative(&self, order: usize) -> Point2 {
        match order {
            0 => self.position,
            1 => self.d1,
            2 => self.d2,
            3 => self.d3,
            _ => Point2::ZERO,
        }
    }

    pub fn speed(&self) -> f64 {
        self.d1.norm()
    }
}

/// Anything that can report its position and first three derivatives on
/// `u ∈ [0, 1]`.
pub trait ParametricCurve {
    fn evaluate(&self, u: f64, order: usize) -> Result<CurveJet>;
}

/// An immutable planar Bézier curve.
///
/// The hodograph control nets of every derivative order are built once at
/// construction; the unwrapped tangent-angle grid is built lazily on first
/// use and shared between clones.
#[derive(Clone)]
pub struct BezierCurve {
    points: Vec<Point2>,
    // nets[k] holds the control net of the k-th derivative, nets[0] = points.
    nets: Vec<Vec<Point2>>,
    heading: Arc<OnceLock<Vec<f64>>>,
}

impl fmt::Debug for BezierCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BezierCurve")
            .field("points", &self.points)
            .finish()
    }
}

impl PartialEq for BezierCurve {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl BezierCurve {
    /// Builds a curve of degree `points.len() - 1`.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "a Bézier curve needs at least 2 control points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidCurve(format!(
                "control point {i} is not finite"
            )));
        }
        let mut nets = vec![points.clone()];
        for _ in 0..points.len() - 1 {
            let prev = nets.last().expect("non-empty");
            let m = (prev.len() - 1) as f64;
            let next = prev.windows(2).map(|w| (w[1] - w[0]) * m).collect();
            nets.push(next);
        }
        Ok(Self {
            points,
            nets,
            heading: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_xy(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().copied().map(Point2::from).collect())
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn degree(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn end(&self) -> Point2 {
        *self.points.last().expect("non-empty")
    }

    /// The `order`-th derivative at `u`; zero beyond the degree.
    pub fn derivative(&self, u: f64, order: usize) -> Result<Point2> {
        check_unit(u)?;
        Ok(self.derivative_unchecked(u, order))
    }

    fn derivative_unchecked(&self, u: f64, order: usize) -> Point2 {
        match self.nets.get(order) {
            Some(net) => de_casteljau(net, u),
            None => Point2::ZERO,
        }
    }

    /// Position and derivatives up to `order` (at most 3); higher entries of
    /// the returned jet are zero.
    pub fn evaluate(&self, u: f64, order: usize) -> Result<CurveJet> {
        check_unit(u)?;
        if order > 3 {
            return Err(Error::InvalidArgument(format!(
                "jet order {order} exceeds 3"
            )));
        }
        let mut jet = CurveJet {
            position: self.derivative_unchecked(u, 0),
            ..CurveJet::default()
        };
        if order >= 1 {
            jet.d1 = self.derivative_unchecked(u, 1);
        }
        if order >= 2 {
            jet.d2 = self.derivative_unchecked(u, 2);
        }
        if order >= 3 {
            jet.d3 = self.derivative_unchecked(u, 3);
        }
        Ok(jet)
    }

    /// Full third-order jet.
    pub fn jet(&self, u: f64) -> Result<CurveJet> {
        self.evaluate(u, 3)
    }

    /// Splits at `s ∈ (0, 1)`; both halves are reparameterized to `[0, 1]`.
    pub fn split(&self, s: f64) -> Result<(BezierCurve, BezierCurve)> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split parameter {s} must lie strictly inside (0, 1)"
            )));
        }
        let n = self.points.len();
        let mut work = self.points.clone();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        left.push(work[0]);
        right.push(work[n - 1]);
        for level in 1..n {
            for i in 0..n - level {
                work[i] = work[i] * (1.0 - s) + work[i + 1] * s;
            }
            left.push(work[0]);
            right.push(work[n - 1 - level]);
        }
        right.reverse();
        Ok((BezierCurve::new(left)?, BezierCurve::new(right)?))
    }

    /// Same curve, same parameterization, one degree higher.
    pub fn elevated(&self) -> BezierCurve {
        let n = self.degree();
        let nf = (n + 1) as f64;
        let p = &self.points;
        let mut out = Vec::with_capacity(n + 2);
        out.push(p[0]);
        for i in 1..=n {
            let a = i as f64 / nf;
            out.push(p[i - 1] * a + p[i] * (1.0 - a));
        }
        out.push(p[n]);
        BezierCurve::new(out).expect("elevation keeps points finite")
    }

    /// Same trace traversed from the end to the start.
    pub fn reversed(&self) -> BezierCurve {
        let mut p = self.points.clone();
        p.reverse();
        BezierCurve::new(p).expect("reversal keeps points finite")
    }

    /// Applies `f` to every control point; affine maps commute with Bézier
    /// evaluation, so this realizes rigid motions exactly.
    pub fn map_points<F: Fn(Point2) -> Point2>(&self, f: F) -> Result<BezierCurve> {
        BezierCurve::new(self.points.iter().copied().map(f).collect())
    }

    /// Copy with the control point at `index` replaced.
    pub fn with_point(&self, index: usize, p: Point2) -> Result<BezierCurve> {
        let mut pts = self.points.clone();
        let slot = pts.get_mut(index).ok_or_else(|| {
            Error::InvalidArgument(format!("control point index {index} out of range"))
        })?;
        *slot = p;
        BezierCurve::new(pts)
    }

    /// Smallest first-derivative norm over `samples + 1` uniform parameters.
    pub fn min_speed(&self, samples: usize) -> f64 {
        let samples = samples.max(1);
        (0..=samples)
            .map(|i| self.derivative_unchecked(i as f64 / samples as f64, 1).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Tangent angle `atan2(C'_y, C'_x)` made continuous along `u`.
    ///
    /// The principal value at `u` is moved onto the branch closest to the
    /// value tabulated at the nearest grid point below `u`; the table itself
    /// is unwrapped sample-to-sample starting from the principal value at
    /// `u = 0`.
    pub fn unwrapped_tangent_angle(&self, u: f64) -> Result<f64> {
        check_unit(u)?;
        let d1 = self.derivative_unchecked(u, 1);
        if d1.norm() < SINGULAR_SPEED {
            return Err(Error::SingularParameterization { u });
        }
        let table = self.heading.get_or_init(|| self.heading_table());
        let idx = ((u * HEADING_GRID as f64).floor() as usize).min(HEADING_GRID);
        Ok(nearest_branch(d1.angle(), table[idx]))
    }

    fn heading_table(&self) -> Vec<f64> {
        let mut table = Vec::with_capacity(HEADING_GRID + 1);
        let mut prev: Option<f64> = None;
        for i in 0..=HEADING_GRID {
            let u = i as f64 / HEADING_GRID as f64;
            let raw = self.derivative_unchecked(u, 1).angle();
            let value = match prev {
                None => raw,
                Some(p) => nearest_branch(raw, p),
            };
            table.push(value);
            prev = Some(value);
        }
        table
    }
}

impl ParametricCurve for BezierCurve {
    fn evaluate(&self, u: f64, order: usize) -> Result<CurveJet> {
        BezierCurve::evaluate(self, u, order)
    }
}

fn de_casteljau(net: &[Point2], u: f64) -> Point2 {
    match net.len() {
        0 => Point2::ZERO,
        1 => net[0],
        _ => {
            let mut work = net.to_vec();
            let v = 1.0 - u;
            for level in 1..work.len() {
                for i in 0..work.len() - level {
                    work[i] = work[i] * v + work[i + 1] * u;
                }
            }
            work[0]
        }
    }
}

pub(crate) fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfDomain { u })
    }
}

/// `angle + 2πk` closest to `reference`.
pub fn nearest_branch(angle: f64, reference: f64) -> f64 {
    angle + 2.0 * PI * ((reference - angle) / (2.0 * PI)).round()
}

/// Wraps an angle difference into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a - 2.0 * PI * (a / (2.0 * PI)).round();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Arc length of `curve` between `u1` and `u2`.
///
/// Integrates `‖C'(u)‖` with the 24-point Gauss–Legendre rule, bisecting
/// until successive estimates agree to [`ARC_LENGTH_TOLERANCE`].
pub fn arc_length<C: ParametricCurve + ?Sized>(curve: &C, u1: f64, u2: f64) -> Result<f64> {
    check_unit(u1)?;
    check_unit(u2)?;
    if u1 > u2 {
        return Err(Error::InvalidArgument(format!(
            "arc length bounds out of order: {u1} > {u2}"
        )));
    }
    if u1 == u2 {
        return Ok(0.0);
    }
    let mut failure = None;
    let length = quadrature::integrate_adaptive(u1, u2, ARC_LENGTH_TOLERANCE, |u| {
        match curve.evaluate(u.clamp(0.0, 1.0), 1) {
            Ok(jet) => jet.d1.norm(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(length),
    }
}

/// Signed curvature `det(C', C'') / ‖C'‖³`, positive for counter-clockwise
/// turning.
pub fn curvature(jet: &CurveJet) -> Result<f64> {
    let speed = jet.d1.norm();
    if speed < SINGULAR_SPEED {
        return Err(Error::SingularParameterization { u: f64::NAN });
    }
    Ok(jet.d1.det(jet.d2) / (speed * speed * speed))
}

/// `dκ/ds = (dκ/du) / ‖C'‖` with
/// `dκ/du = (det(C', C''') ‖C'‖² − 3 det(C', C'') (C'·C'')) / ‖C'‖⁵`.
pub fn curvature_arc_derivative(jet: &CurveJet) -> Result<f64> {
    let speed = jet.d1.norm();
    if speed < SINGULAR_SPEED {
        return Err(Error::SingularParameterization { u: f64::NAN });
    }
    let sq = speed * speed;
    let dk_du =
        (jet.d1.det(jet.d3) * sq - 3.0 * jet.d1.det(jet.d2) * jet.d1.dot(jet.d2)) / (sq * sq * speed);
    Ok(dk_du / speed)
}

/// Shape parameters relating one-sided derivatives at a junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParameters {
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta3: Option<f64>,
}

impl ShapeParameters {
    pub fn new(beta1: f64, beta2: f64, beta3: Option<f64>) -> Result<Self> {
        let p = Self { beta1, beta2, beta3 };
        p.validate()?;
        Ok(p)
    }

    /// Parametric continuity: `β₁ = 1`, all others zero.
    pub fn identity() -> Self {
        Self {
            beta1: 1.0,
            beta2: 0.0,
            beta3: Some(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0 && self.beta1.is_finite()) {
            return Err(Error::InvalidShapeParameters(format!(
                "beta1 must be positive and finite, got {}",
                self.beta1
            )));
        }
        if !self.beta2.is_finite() || self.beta3.is_some_and(|b| !b.is_finite()) {
            return Err(Error::InvalidShapeParameters(
                "beta2 and beta3 must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Defect of one G_n condition: the norm of `lhs − rhs` and the norm of the
/// right-hand side it is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionResidual {
    pub defect: f64,
    pub rhs_norm: f64,
}

impl ConditionResidual {
    pub fn new(lhs: Point2, rhs: Point2) -> Self {
        Self {
            defect: (lhs - rhs).norm(),
            rhs_norm: rhs.norm(),
        }
    }

    /// `defect / max(1, ‖rhs‖)`.
    pub fn relative(&self) -> f64 {
        self.defect / self.rhs_norm.max(1.0)
    }
}

/// Residuals of the conditions of order 0 through `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnResiduals {
    pub conditions: Vec<ConditionResidual>,
}

impl GnResiduals {
    pub fn relative(&self) -> Vec<f64> {
        self.conditions.iter().map(ConditionResidual::relative).collect()
    }

    /// True when every order's relative residual is below its tolerance
    /// (the last tolerance repeats for orders beyond the slice).
    pub fn within(&self, tolerances: &[f64]) -> bool {
        self.conditions.iter().enumerate().all(|(k, c)| {
            let tol = tolerances
                .get(k)
                .or(tolerances.last())
                .copied()
                .unwrap_or(0.0);
            c.relative() < tol
        })
    }
}

/// Evaluates the G_n conditions between the left jet (at `u⁻`) and the
/// right jet (at `u⁺`):
///
/// ```text
/// C(u⁻)   = C(u⁺)
/// C'(u⁻)  = β₁ C'(u⁺)
/// C''(u⁻) = β₁² C''(u⁺) + β₂ C'(u⁺)
/// C'''(u⁻) = β₁³ C'''(u⁺) + 3 β₁β₂ C''(u⁺) + β₃ C'(u⁺)
/// ```
///
/// The third-order coefficient `3β₁β₂` is the one produced by the chain rule
/// for a reparameterization with `φ' = β₁`, `φ'' = β₂`.
pub fn check_geometric_continuity(
    left: &CurveJet,
    right: &CurveJet,
    params: &ShapeParameters,
    order: usize,
) -> Result<GnResiduals> {
    if order > 3 {
        return Err(Error::InvalidArgument(format!(
            "continuity order {order} exceeds 3"
        )));
    }
    params.validate()?;
    let beta3 = match (order, params.beta3) {
        (3, None) => return Err(Error::MissingBeta3),
        (_, b) => b.unwrap_or(0.0),
    };
    let (b1, b2) = (params.beta1, params.beta2);
    let mut conditions = vec![ConditionResidual::new(left.position, right.position)];
    if order >= 1 {
        conditions.push(ConditionResidual::new(left.d1, right.d1 * b1));
    }
    if order >= 2 {
        conditions.push(ConditionResidual::new(
            left.d2,
            right.d2 * (b1 * b1) + right.d1 * b2,
        ));
    }
    if order >= 3 {
        conditions.push(ConditionResidual::new(
            left.d3,
            right.d3 * (b1 * b1 * b1) + right.d2 * (3.0 * b1 * b2) + right.d1 * beta3,
        ));
    }
    Ok(GnResiduals { conditions })
}
