use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use kramers_core::output::{fmt_g12, oracle_csv, profile_csv, svg_plot, table_csv, write_file, Series};
use kramers_core::profile::{uniform_nodes, DEFAULT_X_MAX, DEFAULT_X_NODES, SLIP_DIFFUSE_REFERENCE};
use kramers_core::series::{DEFAULT_ORDER, MAX_SERIES_ORDER};
use kramers_core::{
    eval_l, eval_phi0, eval_t, solve_halfspace, solve_series, slip_coefficient, slip_velocity, velocity_profile, KGrid,
    OracleConfig, ProfileRequest, QuadratureSpec, ReducedChemicalPotential, SeriesSolution, SlipSolution,
};

use crate::manifest::{CommandKind, RunManifest};
use crate::Usage;

const DEFAULT_ALPHA: f64 = -5.0;

pub fn parse_q(s: &str) -> std::result::Result<f64, String> {
    let q: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    if q > 0.0 && q <= 1.0 {
        Ok(q)
    } else {
        Err("q must lie in (0,1]".into())
    }
}

fn parse_order(s: &str) -> std::result::Result<usize, String> {
    let n: usize = s.parse().map_err(|_| format!("not a non-negative integer: {s}"))?;
    if n <= MAX_SERIES_ORDER {
        Ok(n)
    } else {
        Err(format!("order must not exceed {MAX_SERIES_ORDER}"))
    }
}

fn solve(order: usize, spec: &QuadratureSpec) -> Result<SeriesSolution> {
    let grid = Arc::new(KGrid::from_spec(spec)?);
    Ok(solve_series(order, grid, spec)?)
}

fn emit(text: &str, out: Option<&Path>, manifest: &mut RunManifest) -> Result<()> {
    match out {
        Some(p) => {
            write_file(p, text).with_context(|| format!("writing {}", p.display()))?;
            manifest.push_output(p);
        }
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct KernelsArgs {
    /// Kernel orders, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    n_list: Vec<usize>,
    /// Wavenumbers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,5")]
    k_list: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn kernels(a: &KernelsArgs, spec: &QuadratureSpec) -> Result<()> {
    if a.n_list.is_empty() || a.k_list.is_empty() {
        return Err(Usage("both --n-list and --k-list need at least one entry".into()).into());
    }
    if let Some(k) = a.k_list.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
        return Err(Usage(format!("wavenumbers must be finite and non-negative, got {k}")).into());
    }
    let mut rows = Vec::new();
    for &n in &a.n_list {
        for &k in &a.k_list {
            let t = eval_t(n, k, spec)?.value;
            rows.push(vec![n as f64, k, t, eval_l(k, spec)?.value, eval_phi0(k, spec)?.value]);
        }
    }
    let mut m = RunManifest::new(
        CommandKind::Kernels,
        json!({ "n_list": a.n_list, "k_list": a.k_list, "quad_tol": spec.abs_tol }),
    );
    emit(&table_csv(&["n", "k", "T_n", "L", "phi0"], &rows), a.out.as_deref(), &mut m)?;
    m.write(a.manifest.as_deref())?;
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct SlipArgs {
    #[arg(long, allow_negative_numbers = true, value_parser = parse_q)]
    q: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_ORDER, value_parser = parse_order)]
    order: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct LadderRow {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "U_sl")]
    u_sl: f64,
    #[serde(rename = "K_v")]
    k_v: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_error: Option<f64>,
}

#[derive(Serialize)]
struct SlipReport {
    #[serde(flatten)]
    solution: SlipSolution,
    ladder: Vec<LadderRow>,
}

pub fn slip(a: &SlipArgs, spec: &QuadratureSpec) -> Result<()> {
    let alpha = ReducedChemicalPotential::new(a.alpha)?;
    let sol = solve(a.order, spec)?;
    let c = &sol.coefficients;
    let mut ladder = Vec::new();
    for n in 0..=a.order {
        let cn = c.truncated(n);
        let u = slip_velocity(a.q, &cn)?;
        ladder.push(LadderRow {
            n,
            u_sl: u,
            k_v: slip_coefficient(alpha, a.q, &cn, spec)?,
            rel_error: (a.q == 1.0).then(|| (u - SLIP_DIFFUSE_REFERENCE) / SLIP_DIFFUSE_REFERENCE),
        });
    }
    let report = SlipReport { solution: SlipSolution::assemble(alpha, a.q, c, spec)?, ladder };
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let mut header = vec!["N", "V", "U_sl", "K_v"];
            if a.q == 1.0 {
                header.push("rel_error");
            }
            let rows: Vec<Vec<f64>> = report
                .ladder
                .iter()
                .map(|r| {
                    let mut row = vec![r.n as f64, c.v[r.n], r.u_sl, r.k_v];
                    row.extend(r.rel_error);
                    row
                })
                .collect();
            table_csv(&header, &rows)
        }
    };
    let mut m = RunManifest::new(
        CommandKind::Slip,
        json!({ "q": a.q, "alpha": a.alpha, "order": a.order, "quad_tol": spec.abs_tol }),
    );
    emit(&text, a.out.as_deref(), &mut m)?;
    m.write(a.manifest.as_deref())?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Preset (q, alpha) of figure 1, 2 or 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), conflicts_with_all = ["q", "alpha"])]
    figure: Option<u8>,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_q, required_unless_present = "figure")]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ORDER, value_parser = parse_order)]
    order: usize,
    #[arg(long, default_value_t = DEFAULT_X_MAX)]
    xmax: f64,
    #[arg(long, default_value_t = DEFAULT_X_NODES)]
    nx: usize,
    /// Also write the per-order continuous-spectrum columns.
    #[arg(long)]
    components: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write an SVG plot next to the CSV.
    #[arg(long, requires = "out")]
    svg: bool,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn profile(a: &ProfileArgs, spec: &QuadratureSpec) -> Result<()> {
    if !(a.xmax.is_finite() && a.xmax > 0.0) || a.nx == 0 {
        return Err(Usage("--xmax must be positive and --nx at least 1".into()).into());
    }
    let mut req = match a.figure {
        Some(f) => ProfileRequest::figure(f)?,
        None => ProfileRequest::new(a.q.expect("required by clap"), a.alpha.unwrap_or(DEFAULT_ALPHA), a.order, vec![]),
    };
    req.order = a.order;
    req.x_nodes = uniform_nodes(a.xmax, a.nx);
    req.include_components = a.components;
    req.validate()?;
    let sol = solve(a.order, spec)?;
    let p = velocity_profile(&req, &sol.coefficients, &sol.densities, spec)?;

    let mut m = RunManifest::new(
        CommandKind::Profile,
        json!({
            "figure": a.figure, "q": req.q, "alpha": req.alpha, "order": req.order,
            "xmax": a.xmax, "nx": a.nx, "components": a.components, "quad_tol": spec.abs_tol,
        }),
    );
    emit(&profile_csv(&p), a.out.as_deref(), &mut m)?;
    if a.svg {
        let out = a.out.as_ref().expect("required by clap");
        let path = out.with_extension("svg");
        let title = format!("Mass velocity, q = {}, alpha = {}", fmt_g12(req.q), fmt_g12(req.alpha));
        let asym: Vec<f64> = p.x.iter().map(|x| p.u_sl + x).collect();
        let svg = svg_plot(
            &title,
            "x",
            "U / G_v",
            &[
                Series { label: format!("U(x), N = {}", req.order), x: &p.x, y: &p.u_over_gv },
                Series { label: "U_sl + x".into(), x: &p.x, y: &asym },
            ],
        );
        write_file(&path, &svg).with_context(|| format!("writing {}", path.display()))?;
        m.push_output(&path);
    }
    eprintln!("U_sl/G_v = {}  U(0)/G_v = {}", fmt_g12(p.u_sl), fmt_g12(p.u_over_gv[0]));
    m.write(a.manifest.as_deref())?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, allow_negative_numbers = true, value_parser = parse_q, default_value = "1")]
    q: f64,
    #[arg(long, default_value_t = OracleConfig::default().n_mu)]
    nmu: usize,
    #[arg(long, default_value_t = OracleConfig::default().x_max)]
    xmax: f64,
    #[arg(long, default_value_t = OracleConfig::default().n_x)]
    nx: usize,
    /// CSV dump of U(x) and the distribution function.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct OracleSummary {
    #[serde(rename = "U_sl")]
    u_sl: f64,
    #[serde(rename = "U0")]
    u0: f64,
    bc_residual: f64,
    iters: usize,
}

pub fn oracle(a: &OracleArgs) -> Result<()> {
    let cfg = OracleConfig { n_mu: a.nmu, x_max: a.xmax, n_x: a.nx, ..OracleConfig::with_q(a.q) };
    cfg.validate()?;
    if cfg.is_coarse() {
        eprintln!("warning: only {} ordinates; results are coarse", cfg.n_mu);
    }
    let sol = solve_halfspace(&cfg)?;
    let summary = OracleSummary {
        u_sl: sol.u_sl_extracted,
        u0: sol.wall_velocity(),
        bc_residual: sol.bc_residual,
        iters: sol.iters_used,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    let mut m = RunManifest::new(
        CommandKind::Oracle,
        json!({ "q": a.q, "nmu": a.nmu, "xmax": a.xmax, "nx": a.nx, "max_iters": cfg.max_iters, "iter_tol": cfg.iter_tol }),
    );
    if let Some(p) = &a.out {
        write_file(p, &oracle_csv(&sol)).with_context(|| format!("writing {}", p.display()))?;
        m.push_output(p);
    }
    m.write(a.manifest.as_deref())?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[arg(long, allow_negative_numbers = true, value_parser = parse_q, default_value = "1")]
    q: f64,
    #[arg(long, default_value_t = 5, value_parser = parse_order)]
    max_order: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

pub fn convergence(a: &ConvergenceArgs, spec: &QuadratureSpec) -> Result<()> {
    let sol = solve(a.max_order, spec)?;
    let cfg = OracleConfig::with_q(a.q);
    let reference = solve_halfspace(&cfg)?.u_sl_extracted;
    let mut header = vec!["N", "U_sl", "rel_error_oracle"];
    if a.q == 1.0 {
        header.push("rel_error_exact");
    }
    let mut rows = Vec::new();
    for n in 0..=a.max_order {
        let u = slip_velocity(a.q, &sol.coefficients.truncated(n))?;
        let mut row = vec![n as f64, u, (u - reference) / reference];
        if a.q == 1.0 {
            row.push((u - SLIP_DIFFUSE_REFERENCE) / SLIP_DIFFUSE_REFERENCE);
        }
        rows.push(row);
    }
    let mut m = RunManifest::new(
        CommandKind::Convergence,
        json!({ "q": a.q, "max_order": a.max_order, "oracle_nmu": cfg.n_mu, "oracle_nx": cfg.n_x, "quad_tol": spec.abs_tol }),
    );
    emit(&table_csv(&header, &rows), a.out.as_deref(), &mut m)?;
    m.write(a.manifest.as_deref())?;
    Ok(())
}
