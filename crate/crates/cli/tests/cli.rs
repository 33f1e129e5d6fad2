use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use kramers_core::{solve_series, wall_velocity, KGrid, QuadratureSpec};
use serde_json::Value;

fn kramers(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kramers")).args(args).env_remove("KRAMERS_QUAD_TOL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn slip_at_full_accommodation() {
    let o = kramers(&["slip", "--q", "1", "--alpha", "-5", "--order", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&stdout(&o));
    let u = v["U_sl_dimensionless"].as_f64().unwrap();
    assert!((u - 0.5820).abs() < 5e-4);
    assert_eq!(v["coefficients"]["V"].as_array().unwrap().len(), 3);
    assert!(v["K_v"].as_f64().unwrap() > 0.0);
    let ladder = v["ladder"].as_array().unwrap();
    let errs: Vec<f64> = ladder.iter().map(|r| r["rel_error"].as_f64().unwrap().abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));

    let o = kramers(&["slip", "--q", "1", "--alpha", "-5", "--order", "0"]);
    let u = json(&stdout(&o))["U_sl_dimensionless"].as_f64().unwrap();
    assert!((u - 0.53333).abs() < 5e-6);
}

#[test]
fn slip_csv_has_one_row_per_order() {
    let o = kramers(&["slip", "--q", "0.5", "--format", "csv", "--order", "3"]);
    assert!(o.status.success());
    let (header, rows) = csv(&stdout(&o));
    assert_eq!(header, ["N", "V", "U_sl", "K_v"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][1], 0.533333333333);
    assert!((rows[2][2] - 1.67537).abs() < 2.5e-4);
}

#[test]
fn invalid_accommodation_is_a_usage_error() {
    for q in ["0", "1.5", "-0.2", "abc"] {
        let o = kramers(&["slip", "--q", q]);
        assert_eq!(o.status.code(), Some(2), "q={q}");
        if q != "abc" {
            assert!(stderr(&o).contains("q must lie in (0,1]"));
        }
    }
    let o = kramers(&["convergence", "--max-order", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_table() {
    let o = kramers(&["kernels", "--n-list", "1,2,0", "--k-list", "0,1"]);
    assert!(o.status.success());
    let (header, rows) = csv(&stdout(&o));
    assert_eq!(header, ["n", "k", "T_n", "L", "phi0"]);
    let find = |n: f64, k: f64| rows.iter().find(|r| r[0] == n && r[1] == k).unwrap().clone();
    assert_eq!(find(1.0, 0.0)[2], 0.375);
    assert_eq!(find(2.0, 0.0)[2], 0.2);
    assert!((find(0.0, 1.0)[3] - 0.143806).abs() < 5e-7);
    assert_eq!(kramers(&["kernels", "--n-list", "one"]).status.code(), Some(2));
    assert_eq!(kramers(&["kernels", "--k-list", "0,x"]).status.code(), Some(2));
}

#[test]
fn profile_figure_matches_wall_velocity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let o = kramers(&["profile", "--figure", "1", "--out", path(&out), "--svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header, ["x", "U_over_Gv"]);
    assert_eq!(rows.len(), 201);

    let spec = QuadratureSpec::default();
    let s = solve_series(2, Arc::new(KGrid::from_spec(&spec).unwrap()), &spec).unwrap();
    let w = wall_velocity(1.0, &s.coefficients, &s.densities, &spec, 2).unwrap();
    assert!((rows[0][1] - w).abs() < 1e-3);

    let svg = std::fs::read_to_string(dir.path().join("fig1.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let m = json(&std::fs::read_to_string(dir.path().join("fig1.csv.manifest.json")).unwrap());
    assert_eq!(m["command"], "profile");
    assert_eq!(m["parameters"]["q"], 1.0);
    for f in m["outputs"].as_array().unwrap() {
        assert!(Path::new(f.as_str().unwrap()).exists());
    }
}

#[test]
fn profile_far_field_and_degenerate_grid() {
    let o = kramers(&["profile", "--q", "1", "--alpha", "-5", "--xmax", "20", "--components"]);
    assert!(o.status.success());
    let (header, rows) = csv(&stdout(&o));
    assert_eq!(header, ["x", "U_over_Gv", "Uc0", "Uc1", "Uc2"]);
    let slip = rows[0][1] - rows[0][2] - rows[0][3] - rows[0][4];
    let last = rows.last().unwrap();
    assert_eq!(last[0], 20.0);
    assert!((last[1] - (slip + 20.0)).abs() < 1e-3);

    let o = kramers(&["profile", "--q", "1", "--nx", "1"]);
    let (_, rows) = csv(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.0);
}

#[test]
fn profile_usage_and_io_errors() {
    assert_eq!(kramers(&["profile", "--figure", "4"]).status.code(), Some(2));
    assert_eq!(kramers(&["profile", "--figure", "1", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(kramers(&["profile"]).status.code(), Some(2));
    let o = kramers(&["profile", "--figure", "2", "--out", "/nonexistent-dir/p.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("error"));
}

#[test]
fn oracle_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let o = kramers(&["oracle", "--q", "1", "--out", path(&out)]);
    assert!(o.status.success());
    let v = json(&stdout(&o));
    assert!((v["U_sl"].as_f64().unwrap() - 0.5819).abs() < 5e-3);
    assert!((v["U0"].as_f64().unwrap() - 0.4472).abs() < 5e-3);
    assert!(v["bc_residual"].as_f64().unwrap() < 1e-8);
    assert!(v["iters"].as_u64().unwrap() > 0);
    let (header, rows) = csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header.len(), 2 + 64);
    assert_eq!(rows.len(), 601);
    assert!(dir.path().join("field.csv.manifest.json").exists());

    let o = kramers(&["oracle", "--q", "0.5"]);
    let u = json(&stdout(&o))["U_sl"].as_f64().unwrap();
    assert!(((u - 1.67537) / 1.67537).abs() < 0.01);
}

#[test]
fn coarse_oracle_warns() {
    let o = kramers(&["oracle", "--q", "1", "--nmu", "4"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    assert_eq!(kramers(&["oracle", "--nmu", "1"]).status.code(), Some(2));
}

#[test]
fn convergence_ladder() {
    let o = kramers(&["convergence", "--q", "1", "--max-order", "3"]);
    assert!(o.status.success());
    let (header, rows) = csv(&stdout(&o));
    assert_eq!(header, ["N", "U_sl", "rel_error_oracle", "rel_error_exact"]);
    assert_eq!(rows.len(), 4);
    let e: Vec<f64> = rows.iter().map(|r| r[3].abs()).collect();
    assert!((e[0] - 0.084).abs() < 3e-3);
    assert!((e[1] - 0.005).abs() < 1e-3);
    assert!(e[2] < 5e-4);
    assert!(e[1] < e[0] && e[2] < e[1]);
    assert!(rows.iter().all(|r| r[2].abs() < 0.1));

    let o = kramers(&["convergence", "--q", "0.25", "--max-order", "4"]);
    let (header, rows) = csv(&stdout(&o));
    assert_eq!(header.len(), 3);
    let steps: Vec<f64> = rows.windows(2).map(|w| (w[1][1] - w[0][1]).abs()).collect();
    for w in steps.windows(2) {
        let ratio = w[1] / w[0];
        assert!(ratio < 0.25, "{steps:?}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert!(kramers(&["profile", "--figure", "3", "--nx", "41", "--out", path(p)]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ma = json(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap());
    let mb = json(&std::fs::read_to_string(dir.path().join("b.csv.manifest.json")).unwrap());
    assert_eq!(ma["parameters"], mb["parameters"]);
}

#[test]
fn explicit_manifest_path() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.json");
    let out = dir.path().join("k.csv");
    assert!(kramers(&["kernels", "--out", path(&out), "--manifest", path(&m)]).status.success());
    let v = json(&std::fs::read_to_string(&m).unwrap());
    assert_eq!(v["command"], "kernels");
    assert_eq!(v["outputs"][0], path(&out));
    assert!(v["tool_version"].is_string() && v["timestamp"].is_string());
}

#[test]
fn tolerance_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.json");
    let o = Command::new(env!("CARGO_BIN_EXE_kramers"))
        .args(["slip", "--q", "1", "--manifest", path(&m)])
        .env("KRAMERS_QUAD_TOL", "1e-8")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&std::fs::read_to_string(&m).unwrap());
    assert_eq!(v["parameters"]["quad_tol"], 1e-8);
    let u = json(&stdout(&o))["U_sl_dimensionless"].as_f64().unwrap();
    assert!((u - 0.5820).abs() < 5e-4);

    let o = Command::new(env!("CARGO_BIN_EXE_kramers"))
        .args(["slip", "--q", "1"])
        .env("KRAMERS_QUAD_TOL", "tight")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
