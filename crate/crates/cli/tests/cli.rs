use std::path::{Path, PathBuf};
use std::process::Command;

use agv_path_kit_cli::{parse_layout, run_with, serialize_layout};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut all = vec!["agv-path-kit".to_string()];
    all.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(all, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn va_is_rejected_naming_curvature_and_mode_failures() {
    let va = fixture("layout_va.json");
    let (code, out, _) = run(&["check", path_str(&va)]);
    assert_eq!(code, 1);
    assert!(out.contains("junction c1->c2: discontinuous"), "{out}");
    let failed = out.lines().find(|l| l.trim_start().starts_with("failed:")).unwrap();
    assert!(failed.contains("curve_g2") && failed.contains("mode_g1"), "{failed}");
    assert!(!failed.contains("curve_g1") && !failed.contains("g0_"), "{failed}");
}

#[test]
fn vb_passes() {
    let (code, out, _) = run(&["check", path_str(&fixture("layout_vb.json"))]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("overall: smooth\n"));
}

#[test]
fn text_and_json_agree_on_verdicts_and_exit_codes() {
    for name in ["layout_va.json", "layout_vb.json", "layout_vb_published.json", "layout_vc.json", "straight.json"] {
        let p = fixture(name);
        let (text_code, text, _) = run(&["check", path_str(&p)]);
        let (json_code, json, _) = run(&["check", path_str(&p), "--format", "json"]);
        assert_eq!(text_code, json_code, "{name}");
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        let verdict = doc["verdict"].as_str().unwrap();
        assert!(text.ends_with(&format!("overall: {verdict}\n")), "{name}");
        for j in doc["junctions"].as_array().unwrap() {
            let line = format!("junction {}: {}", j["id"].as_str().unwrap(), j["verdict"].as_str().unwrap());
            assert!(text.contains(&line), "{name}: {line}");
        }
    }
}

#[test]
fn tolerance_flags_and_environment_override() {
    let p = fixture("layout_vb_published.json");
    let loose = ["check", path_str(&p), "--tol-angle", "1e-3", "--tol-derivative", "1e-2"];
    assert_eq!(run(&loose).0, 0);
    assert_eq!(run(&["check", path_str(&p), "--tol-angle", "1e-3"]).0, 1);

    // The environment variable is read by a separate process so that tests
    // running in parallel never see it.
    let bin = env!("CARGO_BIN_EXE_agv-path-kit");
    let status = |env: Option<&str>| {
        let mut cmd = Command::new(bin);
        cmd.args(["check", path_str(&p), "--tol-angle", "1e-3"]);
        cmd.env_remove("AGV_PATH_KIT_TOL");
        if let Some(v) = env {
            cmd.env("AGV_PATH_KIT_TOL", v);
        }
        cmd.output().unwrap().status.code().unwrap()
    };
    assert_eq!(status(None), 1);
    assert_eq!(status(Some("1e-2")), 0);
    assert_eq!(status(Some("lots")), 2);
    assert_eq!(run(&["check", path_str(&p), "--tol-angle", "-1"]).0, 2);
}

#[test]
fn rest_only_junction_needs_the_flag() {
    let mut doc = parse_layout(&std::fs::read(fixture("layout_vb.json")).unwrap()).unwrap().document;
    // Moving the fourth point of the right curve changes only the third
    // derivative at the junction: curvature still matches, its rate does not.
    doc.segments[1].control_points[3][0] += 0.05;
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rest.json");
    std::fs::write(&p, serialize_layout(&doc)).unwrap();
    let (code, out, _) = run(&["check", path_str(&p)]);
    assert_eq!(code, 1);
    assert!(out.contains("smooth_at_rest_only"), "{out}");
    assert_eq!(run(&["check", path_str(&p), "--allow-rest"]).0, 0);
}

#[test]
fn unreadable_inputs_exit_2_with_a_location() {
    assert_eq!(run(&["check", "/nonexistent/layout.json"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"schema_version": 1, "vehicle": {"wheels": []}, "segments": []}"#).unwrap();
    let (code, _, err) = run(&["check", path_str(&p)]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.json"), "{err}");
    std::fs::write(&p, "{ not json").unwrap();
    let (code, _, err) = run(&["check", path_str(&p)]);
    assert_eq!(code, 2);
    assert!(err.contains("invalid JSON"), "{err}");
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn repaired_va_passes_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("repaired.json");
    let (code, _, err) = run(&["repair", path_str(&fixture("layout_va.json")), "--out", path_str(&out)]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("c1->c2: repaired"), "{err}");
    assert_eq!(run(&["check", path_str(&out)]).0, 0);
    let doc = parse_layout(&std::fs::read(&out).unwrap()).unwrap().document;
    assert_eq!(doc.repairs.len(), 1);
    assert_eq!(doc.repairs[0].junction, "c1->c2");
    // The left curve is untouched by a right-side repair.
    let original = parse_layout(&std::fs::read(fixture("layout_va.json")).unwrap()).unwrap().document;
    assert_eq!(doc.segments[0], original.segments[0]);
}

#[test]
fn repair_by_displacement_on_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("both.json");
    let va = fixture("layout_va.json");
    let args = ["repair", path_str(&va), "--junction", "c1->c2", "--objective", "displacement", "--side", "both", "--out", path_str(&out)];
    let (code, _, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    assert_eq!(run(&["check", path_str(&out)]).0, 0);
}

#[test]
fn repairing_a_smooth_layout_changes_nothing() {
    let vb = fixture("layout_vb.json");
    let (code, out, _) = run(&["repair", path_str(&vb)]);
    assert_eq!(code, 0);
    let before = parse_layout(&std::fs::read(&vb).unwrap()).unwrap().document;
    let after = parse_layout(out.as_bytes()).unwrap().document;
    for (a, b) in before.segments.iter().zip(&after.segments) {
        for (p, q) in a.control_points.iter().zip(&b.control_points) {
            assert!((p[0] - q[0]).abs() <= 1e-9 && (p[1] - q[1]).abs() <= 1e-9);
        }
    }
    assert!(after.repairs.is_empty());
}

#[test]
fn unknown_junction_exits_2() {
    let (code, _, err) = run(&["repair", path_str(&fixture("layout_va.json")), "--junction", "c2->c9"]);
    assert_eq!(code, 2);
    assert!(err.contains("c1->c2"), "{err}");
}

fn csv_columns(csv: &str, suffix: &str) -> Vec<Vec<f64>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx: Vec<usize> = (0..header.len()).filter(|&i| header[i].ends_with(suffix)).collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    idx.iter()
        .map(|&i| rows.iter().map(|r| r[i].parse().unwrap()).collect())
        .collect()
}

fn max_jump(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

#[test]
fn vb_profile_has_continuous_steering() {
    let (code, csv, err) = run(&["profile", path_str(&fixture("layout_vb.json")), "--samples", "1000"]);
    assert_eq!(code, 0, "{err}");
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 2001);
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("segment,u,s_m,t_s,v_mps,v_max_mps,binding,theta_deg,w1_delta_deg,"), "{header}");
    for delta in csv_columns(&csv, "_delta_deg") {
        assert!(max_jump(&delta) < 0.5, "{}", max_jump(&delta));
    }
    let (_, again, _) = run(&["profile", path_str(&fixture("layout_vb.json")), "--samples", "1000"]);
    assert_eq!(csv, again);
}

#[test]
fn va_profile_is_refused_unless_diagnostic() {
    let va = fixture("layout_va.json");
    let (code, _, err) = run(&["profile", path_str(&va)]);
    assert_eq!(code, 1);
    assert!(err.contains("c1->c2"), "{err}");

    let (code, csv, _) = run(&["profile", path_str(&va), "--diagnostic"]);
    assert_eq!(code, 0);
    let n = 1000;
    for delta in csv_columns(&csv, "_delta_deg") {
        let junction = (delta[n] - delta[n - 1]).abs();
        let noise = delta[..n - 1]
            .windows(2)
            .chain(delta[n + 1..].windows(2))
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        assert!(junction > 10.0 * noise, "{junction} vs {noise}");
    }
}

#[test]
fn straight_profile_has_constant_heading() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let (code, _, _) = run(&["profile", path_str(&fixture("straight.json")), "--samples", "50", "--out", path_str(&out)]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    for suffix in ["theta_deg", "_delta_deg", "_R_v", "_omega_ratio"] {
        for col in csv_columns(&csv, suffix) {
            assert!(col.iter().all(|&x| x == col[0]), "{suffix}");
        }
    }
    assert_eq!(run(&["profile", path_str(&fixture("straight.json")), "--samples", "1"]).0, 2);
}

#[test]
fn table_fixtures_hold_the_published_coordinates() {
    let c1 = [
        [0.188, -3.187], [1.031, -3.281], [1.913, -3.212], [2.766, -2.991], [3.525, -2.625], [4.125, -2.125], [4.5, -1.5],
    ];
    let tail = [[6.51, 1.25], [7.5, 1.5], [9.0, 1.5]];
    let load = |name: &str| parse_layout(&std::fs::read(fixture(name)).unwrap()).unwrap().document;
    let va = load("layout_va.json");
    assert_eq!(va.segments[0].control_points, c1);
    assert_eq!(va.segments[1].control_points[..4], [[4.5, -1.5], [5.025, -0.625], [5.43, 0.15], [5.873, 0.787]]);
    assert_eq!(va.segments[1].control_points[4..], tail);
    let vb = load("layout_vb_published.json");
    assert_eq!(vb.segments[1].control_points[..4], [[4.5, -1.5], [4.823, -0.962], [5.026, -0.253], [5.032, 0.765]]);
    let vc = load("layout_vc.json");
    assert_eq!(vc.segments[0].control_points[3], [3.495, -3.174]);
    assert_eq!(vc.segments[0].control_points[4], [4.039, -2.268]);
    assert_eq!(vc.segments[1].control_points[..4], [[4.5, -1.5], [4.847, -0.921], [5.217, -0.305], [5.572, -0.312]]);
    assert_eq!(vc.vehicle.wheels.len(), 6);

    // The restored V-B rounds to the published table everywhere.
    let restored = load("layout_vb.json");
    for (a, b) in vb.segments.iter().zip(&restored.segments) {
        for (p, q) in a.control_points.iter().zip(&b.control_points) {
            assert!((p[0] - q[0]).abs() < 0.5e-3 && (p[1] - q[1]).abs() < 0.5e-3);
        }
    }
}

#[test]
fn fixtures_round_trip() {
    for name in ["layout_va.json", "layout_vb.json", "layout_vc.json", "straight.json"] {
        let layout = parse_layout(&std::fs::read(fixture(name)).unwrap()).unwrap();
        let text = serialize_layout(&layout.document);
        assert_eq!(parse_layout(text.as_bytes()).unwrap().document, layout.document);
    }
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_agv-path-kit");
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["check", path_str(&fixture("layout_vb.json"))]), 0);
    assert_eq!(code(&["check", path_str(&fixture("layout_va.json"))]), 1);
    assert_eq!(code(&["check"]), 2);
    assert_eq!(code(&["--help"]), 0);
}
