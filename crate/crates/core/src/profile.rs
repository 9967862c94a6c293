//! Velocity planning over the sampled speed-limit profile of a path.
//!
//! A forward pass bounds acceleration and a backward pass bounds
//! deceleration, `|v_{i+1}² − v_i²| ≤ 2 a_max Δs`. Segment junctions keep
//! both one-sided samples (same arc length); the passes force them to share
//! the smaller speed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuity::{check_path, Tolerances, Verdict};
use crate::curve::arc_length;
use crate::error::{Error, Result};
use crate::kinematics::{limit_at, BindingConstraint};
use crate::vehicle::{Path, VehicleModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Body-frame acceleration bound, m/s².
    pub a_max: f64,
    /// Uniform parameter samples per segment, both ends included.
    pub samples_per_segment: usize,
    pub v_start: f64,
    pub v_end: f64,
    /// Plan even across discontinuous junctions (their one-sided limits are
    /// simply both respected).
    pub diagnostic: bool,
    pub tolerances: Tolerances,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            a_max: 0.5,
            samples_per_segment: 1000,
            v_start: 0.0,
            v_end: 0.0,
            diagnostic: false,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub segment: usize,
    pub u: f64,
    /// Arc length from the start of the path, meters.
    pub s: f64,
    /// Planned speed, m/s.
    pub v: f64,
    /// Speed limit, m/s.
    pub v_max: f64,
    /// Seconds from the start.
    pub t: f64,
    pub binding: BindingConstraint,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    /// Ordered by arc length. The last sample of a segment and the first of
    /// the next share `s` and `t`.
    pub samples: Vec<ProfileSample>,
    pub a_max: f64,
    pub boundary: (f64, f64),
    /// Indices of junctions (between segment `i` and `i + 1`) where the
    /// vehicle must stop.
    pub rest_junctions: Vec<usize>,
}

impl VelocityProfile {
    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.s)
    }

    pub fn total_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn peak_speed(&self) -> f64 {
        self.samples.iter().map(|s| s.v).fold(0.0, f64::max)
    }
}

fn validate(options: &PlanOptions) -> Result<()> {
    if !(options.a_max > 0.0 && options.a_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "a_max must be positive, got {}",
            options.a_max
        )));
    }
    if options.samples_per_segment < 2 {
        return Err(Error::InvalidArgument(
            "at least 2 samples per segment are needed".into(),
        ));
    }
    for v in [options.v_start, options.v_end] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "boundary speeds must be non-negative, got {v}"
            )));
        }
    }
    Ok(())
}

/// Plans a speed profile along `path`.
///
/// Refuses paths with a discontinuous junction unless
/// `options.diagnostic` is set. Junctions that are smooth only at rest get
/// `v = 0`.
pub fn plan_velocity(
    path: &Path,
    vehicle: &VehicleModel,
    options: &PlanOptions,
) -> Result<VelocityProfile> {
    validate(options)?;
    let reports = check_path(path, vehicle, options.tolerances)?;
    let mut rest_junctions = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        match r.verdict {
            Verdict::Smooth => {}
            Verdict::SmoothAtRestOnly => rest_junctions.push(i),
            Verdict::Discontinuous if options.diagnostic => {}
            Verdict::Discontinuous => return Err(Error::DiscontinuousPath { index: i }),
        }
    }

    let n = options.samples_per_segment;
    let last = (n - 1) as f64;
    let mut samples: Vec<ProfileSample> = Vec::with_capacity(n * path.segments().len());
    let mut offset = 0.0;
    for (k, seg) in path.segments().iter().enumerate() {
        let us: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { 1.0 } else { i as f64 / last })
            .collect();
        let limits = us
            .par_iter()
            .map(|&u| limit_at(seg, vehicle, u))
            .collect::<Result<Vec<_>>>()?;
        let pieces = us
            .par_windows(2)
            .map(|w| arc_length(&seg.curve, w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let mut s = offset;
        for (i, (u, (v_max, binding, singular))) in us.iter().zip(limits).enumerate() {
            if i > 0 {
                s += pieces[i - 1];
            }
            samples.push(ProfileSample {
                segment: k,
                u: *u,
                s,
                v: 0.0,
                v_max,
                t: 0.0,
                binding,
                singular,
            });
        }
        offset = s;
    }

    let mut cap: Vec<f64> = samples.iter().map(|s| s.v_max).collect();
    for &j in &rest_junctions {
        cap[(j + 1) * n - 1] = 0.0;
        cap[(j + 1) * n] = 0.0;
    }
    let m = samples.len();
    cap[0] = cap[0].min(options.v_start);
    cap[m - 1] = cap[m - 1].min(options.v_end);

    let two_a = 2.0 * options.a_max;
    let mut v = cap.clone();
    for i in 1..m {
        let ds = samples[i].s - samples[i - 1].s;
        v[i] = v[i].min((v[i - 1] * v[i - 1] + two_a * ds).sqrt());
    }
    for i in (0..m - 1).rev() {
        let ds = samples[i + 1].s - samples[i].s;
        v[i] = v[i].min((v[i + 1] * v[i + 1] + two_a * ds).sqrt());
    }

    let mut t = 0.0;
    for i in 0..m {
        if i > 0 {
            let ds = samples[i].s - samples[i - 1].s;
            let vs = v[i] + v[i - 1];
            if ds > 0.0 {
                if vs <= 0.0 {
                    return Err(Error::InfiniteTravelTime);
                }
                t += 2.0 * ds / vs;
            }
        }
        samples[i].v = v[i];
        samples[i].t = t;
    }

    Ok(VelocityProfile {
        samples,
        a_max: options.a_max,
        boundary: (options.v_start, options.v_end),
        rest_junctions,
    })
}

/// Time at arc length `s`, assuming constant acceleration between samples.
pub fn time_along(profile: &VelocityProfile, s: f64) -> Result<f64> {
    let length = profile.length();
    if !(s >= 0.0 && s <= length) {
        return Err(Error::OutOfRange { s, length });
    }
    let samples = &profile.samples;
    let i = samples.partition_point(|p| p.s <= s);
    if i == 0 {
        return Ok(samples.first().map_or(0.0, |p| p.t));
    }
    let a = &samples[i - 1];
    if i == samples.len() || s == a.s {
        return Ok(a.t);
    }
    let b = &samples[i];
    let ds = b.s - a.s;
    let frac = (s - a.s) / ds;
    let v_s = (a.v * a.v + (b.v * b.v - a.v * a.v) * frac).max(0.0).sqrt();
    let vs = a.v + v_s;
    if vs <= 0.0 {
        return Err(Error::InfiniteTravelTime);
    }
    Ok(a.t + 2.0 * (s - a.s) / vs)
}
