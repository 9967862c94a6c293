//! Kinematic modelling and path-continuity tooling for AGVs with several
//! independently steered and driven wheels.
//!
//! A path is a sequence of segments, each made of a planar Bézier curve, a
//! motion mode (the law that gives the vehicle orientation along the curve)
//! and a segment speed limit. On top of that model the crate provides:
//!
//! * wheel-level kinematics (wheel paths, steering angles, velocity and
//!   steering ratios, the vehicle speed-limit profile) in [`kinematics`];
//! * junction analysis that decides whether two consecutive segments can be
//!   driven without jumps in wheel speed or steering rate, in [`continuity`];
//! * control-point repair of discontinuous junctions, in [`repair`];
//! * a forward/backward velocity planner over the speed-limit profile, in
//!   [`profile`].
//!
//! Angles are radians and lengths meters throughout the library.

pub mod continuity;
pub mod curve;
mod error;
pub mod kinematics;
pub mod motion;
pub mod optimize;
pub mod profile;
pub mod quadrature;
pub mod repair;
pub mod vehicle;

pub use continuity::{
    check_exponential_special, check_path, check_tangential_special, check_theorem,
    extract_shape_parameters, wheel_level_audit, ContinuityReport, JunctionContext, Tolerances,
    Verdict,
};
pub use curve::{
    arc_length, check_geometric_continuity, curvature, curvature_arc_derivative, BezierCurve,
    CurveJet, ParametricCurve, Point2, ShapeParameters,
};
pub use error::{Error, Result};
pub use kinematics::{
    profile_segment, speed_limit, wheel_curve_jet, wheel_speed_limit, wheel_state,
    BindingConstraint, SpeedLimitSample, WheelState,
};
pub use motion::{mode_jet_at_junction, orientation, MotionMode, OrientationJet, SegmentEnd};
pub use profile::{plan_velocity, time_along, PlanOptions, VelocityProfile};
pub use repair::{
    derivative_to_control_points, estimate_travel_time, repair_exponential, repair_junction,
    repair_tangential, Objective, RepairProblem, RepairResult, RepairSide,
};
pub use vehicle::{differential_alpha, validate_vehicle, Path, PathSegment, VehicleModel, Wheel};
