use thiserror::Error;

use crate::vehicle::Violation;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("curve parameter {u} is outside [0, 1]")]
    ParameterOutOfDomain { u: f64 },

    #[error("curve parameterization is singular at u = {u} (zero first derivative)")]
    SingularParameterization { u: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid shape parameters: {0}")]
    InvalidShapeParameters(String),

    #[error("third-order continuity requested but beta3 is missing")]
    MissingBeta3,

    #[error("invalid motion mode: {0}")]
    InvalidMode(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid vehicle model ({} violation(s))", .0.len())]
    InvalidVehicle(Vec<Violation>),

    #[error("invalid path segment: {0}")]
    InvalidSegment(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("junction endpoints do not meet: gap {gap} m exceeds {tolerance} m")]
    JunctionGap { gap: f64, tolerance: f64 },

    #[error("repair is not feasible: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("speed limit vanishes on a set of positive measure; travel time is unbounded")]
    InfiniteTravelTime,

    #[error("path is discontinuous at junction {index}; refusing to plan")]
    DiscontinuousPath { index: usize },

    #[error("arc-length position {s} m is outside the profile [0, {length}] m")]
    OutOfRange { s: f64, length: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
