//! One line per acceptance criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use kramers_core::profile::{ProfileRequest, SLIP_DIFFUSE_REFERENCE, WALL_VELOCITY_DIFFUSE};
use kramers_core::quadrature::integrate;
use kramers_core::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn rel(a: f64, exact: f64) -> f64 {
    (a - exact) / exact
}

fn series(order: usize) -> SeriesSolution {
    solve_series(order, Arc::new(KGrid::from_spec(&spec()).unwrap()), &spec()).unwrap()
}

fn c1() -> Outcome {
    let (r, dt) = timed(|| {
        let s = solve_series(0, Arc::new(KGrid::from_spec(&spec()).unwrap()), &spec()).unwrap();
        // T_n(0) = (3/2)∫₀¹ μⁿ(1−μ²) dμ by adaptive quadrature
        let tn = |n: i32| integrate(|m: f64| 1.5 * m.powi(n) * (1.0 - m * m), 0.0, 1.0, &spec()).unwrap().value;
        (s.coefficients.v[0], tn(2) / tn(1))
    });
    let (v0, quad) = r;
    let err = (quad - 8.0 / 15.0).abs();
    check(
        v0 == 8.0 / 15.0 && err < 1e-12 && dt < Duration::from_secs(1),
        format!("V0 = {v0:.15}, quadrature ratio off by {err:.1e}, {:.3} s", dt.as_secs_f64()),
    )
}

fn c2() -> Outcome {
    let (s, dt) = timed(|| series(2));
    let v = &s.coefficients.v;
    check(
        (v[1] - 0.0518).abs() <= 5e-4 && (v[2] + 0.0031).abs() <= 5e-4 && dt < Duration::from_secs(30),
        format!("V1 = {:.6}, V2 = {:.6}, {:.2} s", v[1], v[2], dt.as_secs_f64()),
    )
}

fn c3() -> Outcome {
    let s = series(2);
    let u: Vec<f64> = (0..=2).map(|n| slip_velocity(1.0, &s.coefficients.truncated(n)).unwrap()).collect();
    let e: Vec<f64> = u.iter().map(|&u| 100.0 * rel(u, SLIP_DIFFUSE_REFERENCE)).collect();
    let pass = (u[0] - 0.5333).abs() < 5e-5
        && (e[0].abs() - 8.4).abs() <= 0.3
        && (u[1] - 0.5851).abs() < 5e-5
        && (e[1].abs() - 0.5).abs() <= 0.1
        && (u[2] - 0.5820).abs() < 5e-4
        && e[2].abs() <= 0.05;
    check(
        pass,
        format!(
            "U_sl = {:.5}, {:.5}, {:.5}; errors {:+.3}%, {:+.3}%, {:+.4}%",
            u[0], u[1], u[2], e[0], e[1], e[2]
        ),
    )
}

fn c4() -> Outcome {
    let s = series(4);
    let w: Vec<f64> = (0..=1)
        .map(|n| wall_velocity(1.0, &s.coefficients, &s.densities, &spec(), n).unwrap())
        .collect();
    let e: Vec<f64> = w.iter().map(|&w| 100.0 * rel(w, WALL_VELOCITY_DIFFUSE)).collect();
    let uc0 = uc_component(&s.densities[0], 0.0, 1.0, &spec()).unwrap();
    // 0.4482 lies above 1/√5, so only the size of the N=1 error is compared
    let pass = (w[0] - 0.4382).abs() <= 2e-3
        && (w[1] - 0.4482).abs() <= 2e-3
        && (e[0] + 2.01).abs() <= 0.3
        && (e[1].abs() - 0.22).abs() <= 0.3;
    check(
        pass,
        format!(
            "U(0) = {:.5} (N=0, want 0.4382), {:.5} (N=1, want 0.4482); errors {:+.2}% (want -2.01), {:+.2}% (want 0.22 in size); Uc0(0) = {uc0:.5}",
            w[0], w[1], e[0], e[1]
        ),
    )
}

fn c5() -> Outcome {
    let (worst, dt) = timed(|| {
        let sp = spec();
        let t = |n: usize, k: f64| eval_t(n, k, &sp).unwrap().value;
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let k = 0.05 * 1.6f64.powi(i);
            worst = worst.max((eval_l(k, &sp).unwrap().value - k * k * t(2, k)).abs());
            for n in 0..=6 {
                worst = worst.max((t(n, k) - (t(n, 0.0) - k * k * t(n + 2, k))).abs());
                worst = worst.max((eval_j(n, k, 0.0, &sp).unwrap().value - t(n, k)).abs());
            }
            worst = worst.max(eval_s(k, 0.0, &sp).unwrap().value.abs());
        }
        worst
    });
    check(
        worst < 1e-9 && dt < Duration::from_secs(5),
        format!("largest identity defect {worst:.1e}, {:.2} s", dt.as_secs_f64()),
    )
}

fn c6() -> Outcome {
    let s = series(2);
    let (rows, dt) = timed(|| {
        [1.0, 0.5, 0.25]
            .iter()
            .map(|&q| {
                let o = solve_halfspace(&OracleConfig::with_q(q)).unwrap();
                (q, o.u_sl_extracted, slip_velocity(q, &s.coefficients).unwrap())
            })
            .collect::<Vec<_>>()
    });
    let mut pass = dt < Duration::from_secs(120);
    let mut parts = Vec::new();
    for &(q, o, u) in &rows {
        pass &= rel(o, u).abs() < 0.01;
        if q == 1.0 {
            pass &= (o - 0.5819).abs() < 5e-3;
        }
        parts.push(format!("q={q}: oracle {o:.5} series {u:.5} ({:+.3}%)", 100.0 * rel(o, u)));
    }
    check(pass, format!("{}; {:.2} s", parts.join(", "), dt.as_secs_f64()))
}

fn c7() -> Outcome {
    let s = series(1);
    let tight = spec().with_tolerance(1e-9);
    let mut worst: f64 = 0.0;
    for n in 0..=1 {
        for &k in &[0.5, 2.0] {
            let f = |mu: f64| (1.0 - mu * mu) * spectral_phi(n, k, mu, &s.densities, &s.coefficients, &spec()).unwrap().re;
            let m = 0.75 * (integrate(f, -1.0, 0.0, &tight).unwrap().value + integrate(f, 0.0, 1.0, &tight).unwrap().value);
            worst = worst.max((m - s.densities[n].exact(k, &spec()).unwrap()).abs());
        }
    }
    check(worst < 1e-5, format!("largest moment mismatch {worst:.1e}"))
}

fn c8() -> Outcome {
    let s = series(2);
    let mut worst: f64 = 0.0;
    for q in [0.25, 0.5, 1.0] {
        let req = ProfileRequest::new(q, -5.0, 2, vec![20.0]);
        let p = velocity_profile(&req, &s.coefficients, &s.densities, &spec()).unwrap();
        worst = worst.max((p.u_over_gv[0] - (p.u_sl + 20.0)).abs());
    }
    check(worst < 1e-3, format!("largest |U(20) - (U_sl + 20)| = {worst:.1e}"))
}

fn c9() -> Outcome {
    let ((p, l1), dt) = timed(|| {
        let p = kv_prefactor(ReducedChemicalPotential::new(-20.0).unwrap(), &spec()).unwrap();
        let l1 = fermi_log_moment(1, ReducedChemicalPotential::new(0.0).unwrap(), &spec()).unwrap();
        (p, l1)
    });
    let d = (l1 - PI * PI / 24.0).abs();
    check(
        (p - 1.875).abs() <= 1e-4 && d <= 1e-9 && dt < Duration::from_secs(1),
        format!("prefactor(-20) = {p:.7}, l1(0) off by {d:.1e}, {:.3} s", dt.as_secs_f64()),
    )
}

fn read_profile(path: &Path) -> (Vec<f64>, Vec<f64>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,U_over_Gv"));
    lines
        .map(|l| {
            let (x, u) = l.split_once(',').unwrap();
            (x.parse::<f64>().unwrap(), u.parse::<f64>().unwrap())
        })
        .unzip()
}

fn c10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut walls = Vec::new();
    let mut pass = true;
    for fig in 1..=3 {
        let out = dir.path().join(format!("figure{fig}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_kramers"))
            .args(["profile", "--figure", &fig.to_string(), "--out"])
            .arg(&out)
            .arg("--svg")
            .output()
            .unwrap()
            .status;
        if !status.success() {
            return check(false, format!("figure {fig}: exit {status}"));
        }
        let (x, u) = read_profile(&out);
        pass &= x[0] == 0.0 && *x.last().unwrap() == 10.0;
        pass &= u.windows(2).all(|w| w[1] > w[0]);
        pass &= out.with_extension("svg").exists();
        walls.push(u[0]);
    }
    pass &= walls[0] < walls[1] && walls[1] < walls[2];
    check(pass, format!("U(0) = {:.5}, {:.5}, {:.5} for q = 1, 0.5, 0.25", walls[0], walls[1], walls[2]))
}

fn main() {
    let criteria: [fn() -> Outcome; 10] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let o = c();
        println!("criterion {:>2}: {}  {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
