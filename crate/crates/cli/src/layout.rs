//! Layout documents: the JSON files the command-line tool reads and writes.
//!
//! Angles are degrees in the file and radians in memory. A document lists
//! the vehicle, the path segments in driving order and optionally explicit
//! junction pairs; without them every consecutive pair of segments is a
//! junction.

use std::collections::HashSet;

use agv_path_kit::{
    differential_alpha, BezierCurve, MotionMode, Path, PathSegment, Point2, VehicleModel, Wheel,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub schema_version: u32,
    pub vehicle: VehicleDoc,
    pub segments: Vec<SegmentDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub junctions: Vec<JunctionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repairs: Vec<RepairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleDoc {
    pub wheels: Vec<WheelDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelDoc {
    pub id: String,
    /// Vehicle frame, meters.
    pub position: [f64; 2],
    /// m/s.
    pub v_max: f64,
    /// Steering rate limit, degrees per second.
    pub omega_max_degps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    pub id: String,
    /// World frame, meters.
    pub control_points: Vec<[f64; 2]>,
    pub mode: ModeDoc,
    /// Segment speed limit, m/s.
    pub v_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeDoc {
    Tangential {
        #[serde(default)]
        alpha_deg: f64,
    },
    Crab {
        #[serde(default)]
        alpha_deg: f64,
    },
    /// Tangential mode with the offset that keeps the steering angles of a
    /// two-wheel vehicle fixed.
    Differential,
    ExponentialDelayed {
        #[serde(default)]
        alpha_deg: f64,
        n: f64,
    },
    ExponentialAnticipated {
        #[serde(default)]
        alpha_deg: f64,
        n: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionDoc {
    pub left: String,
    pub right: String,
}

/// Annotation left in a document by `repair`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairRecord {
    pub junction: String,
    pub objective: String,
    /// Seconds for the travel-time objective, meters for displacement.
    pub objective_value: f64,
    pub travel_time_s: f64,
    pub beta: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<[f64; 4]>,
    pub moved: Vec<MovedRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovedRecord {
    pub segment: String,
    pub index: usize,
    pub before: [f64; 2],
    pub after: [f64; 2],
}

/// A problem located in the document, e.g. `segments[1].mode.n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for LayoutError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for LayoutError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> LayoutError {
    LayoutError {
        path: path.into(),
        message: message.into(),
    }
}

/// A document together with the validated model it describes.
#[derive(Debug, Clone)]
pub struct Layout {
    pub document: LayoutDocument,
    pub vehicle: VehicleModel,
    /// Same order as `document.segments`.
    pub segments: Vec<PathSegment>,
    /// Index pairs into `segments`.
    pub junctions: Vec<(usize, usize)>,
}

impl Layout {
    pub fn junction_id(&self, j: usize) -> String {
        let (l, r) = self.junctions[j];
        format!("{}->{}", self.document.segments[l].id, self.document.segments[r].id)
    }

    /// The segments in document order as one path.
    pub fn path(&self) -> agv_path_kit::Result<Path> {
        Path::new(self.segments.clone())
    }
}

/// Parses and validates a layout document.
pub fn parse_layout(bytes: &[u8]) -> Result<Layout, LayoutError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err("", format!("not UTF-8: {e}")))?;
    let de = &mut serde_json::Deserializer::from_str(text);
    let document: LayoutDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = if inner.is_syntax() || inner.is_eof() {
            format!("invalid JSON: {inner}")
        } else {
            inner.to_string()
        };
        err(path, message)
    })?;
    validate_document(document)
}

pub fn validate_document(document: LayoutDocument) -> Result<Layout, LayoutError> {
    if document.schema_version != SCHEMA_VERSION {
        return Err(err(
            "schema_version",
            format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                document.schema_version
            ),
        ));
    }

    let wheels: Vec<Wheel> = document
        .vehicle
        .wheels
        .iter()
        .map(|w| {
            Wheel::new(
                w.id.clone(),
                Point2::new(w.position[0], w.position[1]),
                w.v_max,
                w.omega_max_degps.to_radians(),
            )
        })
        .collect();
    let violations = agv_path_kit::validate_vehicle(&wheels);
    if let Some(v) = violations.first() {
        let index = v.wheel_id.as_ref().and_then(|id| {
            // A duplicate is reported at its second occurrence.
            document.vehicle.wheels.iter().rposition(|w| &w.id == id)
        });
        return Err(match index {
            Some(i) if v.field == "omega_max" => err(
                format!("vehicle.wheels[{i}].omega_max_degps"),
                format!(
                    "must be positive and finite, got {}",
                    document.vehicle.wheels[i].omega_max_degps
                ),
            ),
            Some(i) => err(format!("vehicle.wheels[{i}].{}", v.field), v.message.clone()),
            None => err("vehicle.wheels", v.message.clone()),
        });
    }
    let vehicle = VehicleModel::new(wheels).map_err(|e| err("vehicle", e.to_string()))?;

    if document.segments.is_empty() {
        return Err(err("segments", "a layout needs at least one segment"));
    }
    let mut ids = HashSet::new();
    let mut segments = Vec::with_capacity(document.segments.len());
    for (i, s) in document.segments.iter().enumerate() {
        let at = |field: &str| format!("segments[{i}].{field}");
        if s.id.is_empty() {
            return Err(err(at("id"), "segment id must not be empty"));
        }
        if !ids.insert(s.id.as_str()) {
            return Err(err(at("id"), format!("duplicate segment id {:?}", s.id)));
        }
        if s.control_points.len() < 2 {
            return Err(err(
                at("control_points"),
                "a curve needs at least 2 control points (degree 1)",
            ));
        }
        let points: Vec<Point2> = s.control_points.iter().map(|p| Point2::new(p[0], p[1])).collect();
        let curve = BezierCurve::new(points).map_err(|e| err(at("control_points"), e.to_string()))?;
        let mode = mode_from_doc(&s.mode, &vehicle).map_err(|m| err(format!("segments[{i}].mode{}", m.0), m.1))?;
        let seg = PathSegment::new(curve, mode, s.v_max).map_err(|e| {
            let field = if e.to_string().contains("speed limit") { "v_max" } else { "control_points" };
            err(at(field), e.to_string())
        })?;
        segments.push(seg);
    }

    let index_of = |id: &str| document.segments.iter().position(|s| s.id == id);
    let junctions = if document.junctions.is_empty() {
        (1..segments.len()).map(|i| (i - 1, i)).collect()
    } else {
        let mut out = Vec::with_capacity(document.junctions.len());
        for (j, jd) in document.junctions.iter().enumerate() {
            let l = index_of(&jd.left)
                .ok_or_else(|| err(format!("junctions[{j}].left"), format!("unknown segment {:?}", jd.left)))?;
            let r = index_of(&jd.right)
                .ok_or_else(|| err(format!("junctions[{j}].right"), format!("unknown segment {:?}", jd.right)))?;
            if l == r {
                return Err(err(format!("junctions[{j}]"), "a segment cannot join itself"));
            }
            out.push((l, r));
        }
        out
    };

    Ok(Layout {
        document,
        vehicle,
        segments,
        junctions,
    })
}

/// Error carries a path suffix relative to the mode object and a message.
fn mode_from_doc(mode: &ModeDoc, vehicle: &VehicleModel) -> Result<MotionMode, (String, String)> {
    let check = |m: Result<MotionMode, agv_path_kit::Error>| {
        m.map_err(|e| {
            let msg = match e {
                agv_path_kit::Error::InvalidMode(m) => m,
                other => other.to_string(),
            };
            (".n".to_string(), msg)
        })
    };
    let finite = |a: f64| {
        if a.is_finite() {
            Ok(a.to_radians())
        } else {
            Err((".alpha_deg".to_string(), "alpha must be finite".to_string()))
        }
    };
    match *mode {
        ModeDoc::Tangential { alpha_deg } => Ok(MotionMode::tangential(finite(alpha_deg)?)),
        ModeDoc::Crab { alpha_deg } => Ok(MotionMode::crab(finite(alpha_deg)?)),
        ModeDoc::Differential => differential_alpha(vehicle)
            .map(MotionMode::tangential)
            .map_err(|e| (".type".to_string(), e.to_string())),
        ModeDoc::ExponentialDelayed { alpha_deg, n } => {
            check(MotionMode::exponential_delayed(finite(alpha_deg)?, n))
        }
        ModeDoc::ExponentialAnticipated { alpha_deg, n } => {
            check(MotionMode::exponential_anticipated(finite(alpha_deg)?, n))
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn serialize_layout(document: &LayoutDocument) -> String {
    let mut s = serde_json::to_string_pretty(document).expect("layout documents always serialize");
    s.push('\n');
    s
}
