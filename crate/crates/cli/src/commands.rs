//! The three subcommands.

use std::fmt::Write as _;
use std::io::Write;

use agv_path_kit::continuity::{
    ExponentialReport, TangentialReport, WheelAudit,
};
use agv_path_kit::kinematics::ProfileOptions;
use agv_path_kit::{
    check_exponential_special, check_tangential_special, check_theorem, plan_velocity,
    profile_segment, repair_junction, wheel_level_audit, ContinuityReport, Error,
    JunctionContext, MotionMode, Objective, PlanOptions, RepairProblem, RepairSide, Tolerances,
    Verdict,
};
use serde::Serialize;

use crate::layout::{parse_layout, serialize_layout, Layout, MovedRecord, RepairRecord};
use crate::{CheckArgs, CliError, Format, ObjectiveArg, ProfileArgs, RepairArgs, SideArg, TOLERANCE_ENV};

fn load(path: &std::path::Path) -> Result<Layout, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_layout(&bytes).map_err(|source| CliError::Layout {
        file: path.display().to_string(),
        source,
    })
}

fn write_output(path: Option<&std::path::Path>, out: &mut dyn Write, text: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => Ok(out.write_all(text)?),
    }
}

/// Everything reported for one junction.
#[derive(Debug, Clone, Serialize)]
pub struct JunctionEntry {
    pub id: String,
    pub left: String,
    pub right: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ContinuityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tangential: Option<TangentialReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponential: Option<ExponentialReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub wheels: Vec<WheelAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutput {
    pub verdict: Verdict,
    pub tolerances: Tolerances,
    pub junctions: Vec<JunctionEntry>,
}

fn tolerances(args: &CheckArgs) -> Result<Tolerances, CliError> {
    let mut t = Tolerances::default();
    if let Ok(v) = std::env::var(TOLERANCE_ENV) {
        t.derivative = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{TOLERANCE_ENV} is not a number: {v:?}")))?;
    }
    if let Some(v) = args.tol_position {
        t.position = v;
    }
    if let Some(v) = args.tol_angle {
        t.angle = v;
    }
    if let Some(v) = args.tol_derivative {
        t.derivative = v;
    }
    t.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(t)
}

fn severity(v: Verdict) -> u8 {
    match v {
        Verdict::Smooth => 0,
        Verdict::SmoothAtRestOnly => 1,
        Verdict::Discontinuous => 2,
    }
}

/// Analyses every junction of a layout.
pub fn analyse(layout: &Layout, tol: Tolerances) -> CheckOutput {
    let junctions: Vec<JunctionEntry> = (0..layout.junctions.len())
        .map(|j| {
            let (l, r) = layout.junctions[j];
            let mut entry = JunctionEntry {
                id: layout.junction_id(j),
                left: layout.document.segments[l].id.clone(),
                right: layout.document.segments[r].id.clone(),
                verdict: Verdict::Discontinuous,
                report: None,
                tangential: None,
                exponential: None,
                wheels: Vec::new(),
                error: None,
            };
            let ctx = match JunctionContext::with_tolerances(
                layout.segments[l].clone(),
                layout.segments[r].clone(),
                layout.vehicle.clone(),
                tol,
            ) {
                Ok(c) => c,
                Err(e) => {
                    entry.error = Some(e.to_string());
                    return entry;
                }
            };
            let report = check_theorem(&ctx);
            entry.verdict = report.verdict;
            entry.report = Some(report);
            entry.tangential = check_tangential_special(&ctx).ok();
            entry.exponential = check_exponential_special(&ctx).ok();
            entry.wheels = wheel_level_audit(&ctx).unwrap_or_default();
            entry
        })
        .collect();
    let verdict = junctions
        .iter()
        .map(|j| j.verdict)
        .max_by_key(|v| severity(*v))
        .unwrap_or(Verdict::Smooth);
    CheckOutput {
        verdict,
        tolerances: tol,
        junctions,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |x| format!("{x:.3e}"))
}

pub fn render_text(output: &CheckOutput) -> String {
    let mut s = String::new();
    for j in &output.junctions {
        let _ = writeln!(s, "junction {}: {}", j.id, j.verdict);
        if let Some(e) = &j.error {
            let _ = writeln!(s, "  error: {e}");
        }
        if let Some(r) = &j.report {
            let _ = writeln!(s, "  position gap      {:.3e} m", r.g0_position);
            let _ = writeln!(s, "  orientation gap   {:.3e} rad", r.g0_orientation.abs());
            if let Some(b) = r.beta {
                let _ = writeln!(
                    s,
                    "  beta              {:.9} {:.9} {:.9}",
                    b.beta1,
                    b.beta2,
                    b.beta3.unwrap_or(0.0)
                );
            }
            let _ = writeln!(
                s,
                "  curve G1 G2 G3    {} {} {}",
                opt(r.curve_g1),
                opt(r.curve_g2),
                opt(r.curve_g3)
            );
            let _ = writeln!(s, "  mode G1 G2        {} {}", opt(r.mode_g1), opt(r.mode_g2));
            if !r.failures.is_empty() {
                let _ = writeln!(s, "  failed: {}", r.failures.join(", "));
            }
            for n in &r.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }
        if let Some(t) = &j.tangential {
            let _ = writeln!(
                s,
                "  curvature         {:.9} | {:.9} (residual {:.3e})",
                t.kappa_left, t.kappa_right, t.kappa_residual
            );
            let _ = writeln!(
                s,
                "  dkappa/ds         {:.9} | {:.9} (residual {:.3e})",
                t.dkappa_ds_left, t.dkappa_ds_right, t.dkappa_ds_residual
            );
        }
        if let Some(e) = &j.exponential {
            let _ = writeln!(
                s,
                "  exponential rule  kappa {:.3e} | {:.3e}, multiples {:.3e}, third derivative {:.3e}: {}",
                e.kappa_left,
                e.kappa_right,
                e.scalar_multiple,
                e.third_derivative,
                if e.passes { "pass" } else { "fail" }
            );
        }
        for w in &j.wheels {
            let _ = writeln!(
                s,
                "  wheel {:<11} G1 {:.3e} G2 {:.3e} {}",
                w.wheel_id,
                w.g1,
                w.g2,
                if w.passes { "pass" } else { "fail" }
            );
        }
    }
    let _ = writeln!(s, "overall: {}", output.verdict);
    s
}

pub fn check(args: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let layout = load(&args.layout)?;
    let tol = tolerances(args)?;
    let output = analyse(&layout, tol);
    match args.format {
        Format::Text => out.write_all(render_text(&output).as_bytes())?,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&output).expect("reports serialize");
            s.push('\n');
            out.write_all(s.as_bytes())?;
        }
    }
    let ok = output.junctions.iter().all(|j| match j.verdict {
        Verdict::Smooth => true,
        Verdict::SmoothAtRestOnly => args.allow_rest,
        Verdict::Discontinuous => false,
    });
    Ok(if ok { 0 } else { 1 })
}

fn point(p: agv_path_kit::Point2) -> [f64; 2] {
    [p.x, p.y]
}

pub fn repair(args: &RepairArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mut layout = load(&args.layout)?;
    let tol = Tolerances::default();
    let targets: Vec<usize> = match &args.junction {
        Some(id) => {
            let j = (0..layout.junctions.len())
                .find(|&j| &layout.junction_id(j) == id)
                .ok_or_else(|| {
                    let known: Vec<String> =
                        (0..layout.junctions.len()).map(|j| layout.junction_id(j)).collect();
                    CliError::Usage(format!(
                        "unknown junction {id:?}; the layout has: {}",
                        if known.is_empty() { "none".to_string() } else { known.join(", ") }
                    ))
                })?;
            vec![j]
        }
        None => (0..layout.junctions.len()).collect(),
    };
    let objective = match args.objective {
        ObjectiveArg::Time => Objective::MinTravelTime,
        ObjectiveArg::Displacement => Objective::MinDisplacement,
    };
    let side = match args.side {
        SideArg::Left => RepairSide::Left,
        SideArg::Right => RepairSide::Right,
        SideArg::Both => RepairSide::Both,
    };

    for j in targets {
        let (l, r) = layout.junctions[j];
        let id = layout.junction_id(j);
        let ctx = JunctionContext::with_tolerances(
            layout.segments[l].clone(),
            layout.segments[r].clone(),
            layout.vehicle.clone(),
            tol,
        )
        .map_err(|e| CliError::Failed(format!("junction {id}: {e}")))?;
        if check_theorem(&ctx).is_smooth() {
            writeln!(err, "junction {id}: already smooth, left unchanged")?;
            continue;
        }
        let problem = RepairProblem::new(ctx).with_objective(objective).with_side(side);
        let res = repair_junction(&problem).map_err(|e| match e {
            Error::Infeasible(m) | Error::Unsupported(m) | Error::InvalidMode(m) => {
                CliError::Failed(format!("junction {id}: repair failed: {m}"))
            }
            other => CliError::Failed(format!("junction {id}: repair failed: {other}")),
        })?;

        let moved = res
            .moved
            .iter()
            .map(|m| MovedRecord {
                segment: layout.document.segments[if m.segment == RepairSide::Left { l } else { r }]
                    .id
                    .clone(),
                index: m.index,
                before: point(m.before),
                after: point(m.after),
            })
            .collect();
        for (k, seg) in [(l, &res.left), (r, &res.right)] {
            layout.document.segments[k].control_points =
                seg.curve.points().iter().map(|p| point(*p)).collect();
            layout.segments[k] = seg.clone();
        }
        layout.document.repairs.push(RepairRecord {
            junction: id.clone(),
            objective: match objective {
                Objective::MinTravelTime => "time".into(),
                Objective::MinDisplacement => "displacement".into(),
            },
            objective_value: res.objective_value,
            travel_time_s: res.travel_time,
            beta: [
                res.parameters.beta1,
                res.parameters.beta2,
                res.parameters.beta3.unwrap_or(0.0),
            ],
            multipliers: res.multipliers,
            moved,
        });
        writeln!(
            err,
            "junction {id}: repaired, estimated travel time {:.4} s, largest move {:.4} m",
            res.travel_time, res.max_displacement
        )?;
    }

    let text = serialize_layout(&layout.document);
    write_output(args.out.as_deref(), out, text.as_bytes())?;
    Ok(0)
}

fn num(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.9}");
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            "0.000000000".to_string()
        } else {
            s
        }
    } else {
        String::new()
    }
}

fn unwrap_near(angle: f64, prev: Option<f64>) -> f64 {
    match prev {
        Some(p) => agv_path_kit::curve::nearest_branch(angle, p),
        None => angle,
    }
}

/// Renders the planned profile with wheel tracks as CSV.
pub fn profile_csv(layout: &Layout, options: &PlanOptions) -> Result<String, CliError> {
    let path = layout
        .path()
        .map_err(|e| CliError::Failed(format!("layout is not a connected path: {e}")))?;
    let plan = plan_velocity(&path, &layout.vehicle, options).map_err(|e| match e {
        Error::DiscontinuousPath { index } => CliError::Failed(format!(
            "junction {} is discontinuous; planning refused (use --diagnostic to override)",
            layout.junction_id(index)
        )),
        other => CliError::Failed(other.to_string()),
    })?;
    let tracks = path
        .segments()
        .iter()
        .map(|s| profile_segment(s, &layout.vehicle, options.samples_per_segment, ProfileOptions::default()))
        .collect::<agv_path_kit::Result<Vec<_>>>()
        .map_err(|e| CliError::Failed(e.to_string()))?;

    let wheels = layout.vehicle.wheels();
    let mut s = String::from("segment,u,s_m,t_s,v_mps,v_max_mps,binding,theta_deg");
    for w in wheels {
        for col in ["delta_deg", "omega_ratio", "R_v", "kappa_w", "v_w_mps", "omega_w_degps"] {
            let _ = write!(s, ",{}_{col}", w.id);
        }
    }
    s.push('\n');

    let n = options.samples_per_segment;
    let mut prev_theta = None;
    let mut prev_delta: Vec<Option<f64>> = vec![None; wheels.len()];
    for (i, sample) in plan.samples.iter().enumerate() {
        let k = i / n;
        let row = i % n;
        let track = &tracks[k];
        let theta = unwrap_near(track.orientation[row].theta, prev_theta);
        prev_theta = Some(theta);
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{}",
            layout.document.segments[k].id,
            num(sample.u),
            num(sample.s),
            num(sample.t),
            num(sample.v),
            num(sample.v_max),
            sample.binding,
            num(theta.to_degrees())
        );
        for (wi, wt) in track.wheels.iter().enumerate() {
            let st = &wt.states[row];
            let delta = unwrap_near(st.delta_w, prev_delta[wi]);
            prev_delta[wi] = Some(delta);
            let _ = write!(
                s,
                ",{},{},{},{},{},{}",
                num(delta.to_degrees()),
                num(st.ratio_omega),
                num(st.ratio_v),
                st.kappa_w.map(num).unwrap_or_default(),
                num(sample.v * st.ratio_v),
                num((sample.v * st.ratio_omega).to_degrees())
            );
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn profile(args: &ProfileArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if args.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    if !(args.a_max > 0.0 && args.a_max.is_finite()) {
        return Err(CliError::Usage("--a-max must be positive".into()));
    }
    let layout = load(&args.layout)?;
    let options = PlanOptions {
        a_max: args.a_max,
        samples_per_segment: args.samples,
        diagnostic: args.diagnostic,
        ..PlanOptions::default()
    };
    let csv = profile_csv(&layout, &options)?;
    write_output(args.out.as_deref(), out, csv.as_bytes())?;
    Ok(0)
}

/// True when the mode pair of a junction is the tangential-into-anticipated
/// exponential pattern.
pub fn is_exponential_pair(left: &MotionMode, right: &MotionMode) -> bool {
    matches!(
        (left, right),
        (MotionMode::Tangential { .. }, MotionMode::ExponentialAnticipated { .. })
    )
}
