//! Discrete-ordinates solver for the half-space shear-flow problem.
//!
//! Solves `μ ∂h/∂x + h = 2U(x)`, `U(x) = (3/8) ∫ (1−μ²) h dμ`, on a slab
//! `[0, x_max]` with the wall law `h(0, μ) = (1−q) h(0, −μ)` for `μ > 0` and
//! the Chapman–Enskog inflow `h(x_max, μ) = 2U_fit + 2(x_max − μ)` for
//! `μ < 0`, where `U_fit` is the current intercept of `U(x) − x`.
//!
//! One transport sweep maps `U` to a new `U` affinely. The fixed point is
//! found with restarted GMRES, each matrix-vector product being one sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Total stretch `x_max / h₀` of the geometric cells is about `e^STRETCH`.
const STRETCH: f64 = 12.0;
const RESTART: usize = 40;
/// Fit window as fractions of `x_max`.
pub const FIT_WINDOW: (f64, f64) = (0.6, 0.9);
const MAX_FIT_SLOPE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub q: f64,
    pub n_mu: usize,
    pub x_max: f64,
    pub n_x: usize,
    pub max_iters: usize,
    pub iter_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { q: 1.0, n_mu: 32, x_max: 30.0, n_x: 600, max_iters: 2000, iter_tol: 1e-10 }
    }
}

impl OracleConfig {
    pub fn with_q(q: f64) -> Self {
        Self { q, ..Self::default() }
    }

    /// Hard preconditions. Fewer than 8 ordinates is allowed but coarse; see
    /// [`OracleConfig::is_coarse`].
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidAccommodation(self.q));
        }
        if self.n_mu < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 ordinates per half-range, got {}", self.n_mu)));
        }
        if !(self.x_max >= 20.0 && self.x_max.is_finite()) {
            return Err(Error::InvalidInput(format!("slab depth must be at least 20, got {}", self.x_max)));
        }
        if self.n_x < 20 {
            return Err(Error::InvalidInput(format!("need at least 20 cells, got {}", self.n_x)));
        }
        if !(self.iter_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidInput("iteration limits must be positive".into()));
        }
        Ok(())
    }

    pub fn is_coarse(&self) -> bool {
        self.n_mu < 8
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSolution {
    pub q: f64,
    /// ascending, negative half first
    pub mu_nodes: Vec<f64>,
    pub mu_weights: Vec<f64>,
    pub x_nodes: Vec<f64>,
    /// `h_field[i][j] = h(x_i, μ_j)`
    pub h_field: Vec<Vec<f64>>,
    #[serde(rename = "U_x")]
    pub u_x: Vec<f64>,
    #[serde(rename = "U_sl_extracted")]
    pub u_sl_extracted: f64,
    pub bc_residual: f64,
    pub iters_used: usize,
}

impl OracleSolution {
    pub fn wall_velocity(&self) -> f64 {
        self.u_x[0]
    }
}

/// Geometric cells refined towards the wall.
pub fn slab_nodes(x_max: f64, n_x: usize) -> Vec<f64> {
    let r = (STRETCH / n_x as f64).exp();
    let h0 = x_max * (r - 1.0) / (r.powi(n_x as i32) - 1.0);
    let mut x = Vec::with_capacity(n_x + 1);
    let mut acc = 0.0;
    let mut h = h0;
    x.push(0.0);
    for _ in 0..n_x {
        acc += h;
        x.push(acc);
        h *= r;
    }
    x[n_x] = x_max;
    x
}

/// Per-cell marching factors `e^{−τ}` and `(1 − e^{−τ})/τ` for one ordinate.
#[derive(Clone, Debug)]
struct CellFactors {
    e: Vec<f64>,
    a: Vec<f64>,
}

impl CellFactors {
    fn new(x: &[f64], mu: f64) -> Self {
        let (e, a) = x
            .windows(2)
            .map(|w| {
                let tau = (w[1] - w[0]) / mu;
                let e = (-tau).exp();
                let a = if tau < 1e-8 { 1.0 - 0.5 * tau } else { -(-tau).exp_m1() / tau };
                (e, a)
            })
            .unzip();
        Self { e, a }
    }
}

struct Sweeper {
    q: f64,
    x: Vec<f64>,
    mu: Vec<f64>,
    w: Vec<f64>,
    factors: Vec<CellFactors>,
    window: (usize, usize),
}

impl Sweeper {
    fn new(cfg: &OracleConfig) -> Self {
        let x = slab_nodes(cfg.x_max, cfg.n_x);
        let (mu, w) = gauss_legendre_on(cfg.n_mu, 0.0, 1.0);
        let factors = mu.iter().map(|&m| CellFactors::new(&x, m)).collect();
        let lo = x.partition_point(|&v| v < FIT_WINDOW.0 * cfg.x_max);
        let hi = x.partition_point(|&v| v <= FIT_WINDOW.1 * cfg.x_max);
        Self { q: cfg.q, x, mu, w, factors, window: (lo, hi) }
    }

    fn window_mean(&self, v: impl Fn(usize) -> f64) -> f64 {
        let (lo, hi) = self.window;
        (lo..hi).map(v).sum::<f64>() / (hi - lo) as f64
    }

    /// `h(·, −μ_j)` and `h(·, μ_j)` for source `2U` and inflow intercept `u_fit`.
    fn march(&self, j: usize, u: &[f64], u_fit: f64, affine: bool) -> (Vec<f64>, Vec<f64>) {
        let n = self.x.len();
        let m = self.mu[j];
        let f = &self.factors[j];
        let x_max = self.x[n - 1];
        let mut back = vec![0.0; n];
        back[n - 1] = 2.0 * u_fit + if affine { 2.0 * (x_max + m) } else { 0.0 };
        for i in (0..n - 1).rev() {
            let (s_start, s_end) = (2.0 * u[i + 1], 2.0 * u[i]);
            back[i] = back[i + 1] * f.e[i] + s_end * (1.0 - f.a[i]) + s_start * (f.a[i] - f.e[i]);
        }
        let mut fwd = vec![0.0; n];
        fwd[0] = (1.0 - self.q) * back[0];
        for i in 0..n - 1 {
            let (s_start, s_end) = (2.0 * u[i], 2.0 * u[i + 1]);
            fwd[i + 1] = fwd[i] * f.e[i] + s_end * (1.0 - f.a[i]) + s_start * (f.a[i] - f.e[i]);
        }
        (back, fwd)
    }

    fn fields(&self, u: &[f64], affine: bool) -> Vec<(Vec<f64>, Vec<f64>)> {
        // the intercept is affine in U; its linear part is the plain window mean
        let u_fit = if affine { self.window_mean(|i| u[i] - self.x[i]) } else { self.window_mean(|i| u[i]) };
        (0..self.mu.len()).into_par_iter().map(|j| self.march(j, u, u_fit, affine)).collect()
    }

    /// One sweep: the new `U`. With `affine = false` the inhomogeneous
    /// gradient inflow is dropped, giving the linear part of the map.
    fn sweep(&self, u: &[f64], affine: bool) -> Vec<f64> {
        let fields = self.fields(u, affine);
        let n = self.x.len();
        let mut out = vec![0.0; n];
        // fixed ordinate order keeps the reduction deterministic
        for (j, (back, fwd)) in fields.iter().enumerate() {
            let c = 0.375 * self.w[j] * (1.0 - self.mu[j] * self.mu[j]);
            for i in 0..n {
                out[i] += c * (back[i] + fwd[i]);
            }
        }
        out
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Krylov {
    solution: Vec<f64>,
    matvecs: usize,
}

/// Restarted GMRES for `A x = b`.
fn gmres<F: Fn(&[f64]) -> Vec<f64>>(a: F, b: &[f64], x0: Vec<f64>, tol: f64, max_matvecs: usize) -> Result<Krylov> {
    let mut x = x0;
    let mut matvecs = 0;
    let mut growth = 0;
    let mut last_res = f64::INFINITY;
    loop {
        let ax = a(&x);
        matvecs += 1;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let res = sup_norm(&r);
        if !res.is_finite() {
            return Err(Error::DivergenceDetected { iters: matvecs });
        }
        if res <= tol {
            return Ok(Krylov { solution: x, matvecs });
        }
        if res > last_res {
            growth += 1;
            if growth >= 10 {
                return Err(Error::DivergenceDetected { iters: matvecs });
            }
        } else {
            growth = 0;
        }
        last_res = res;
        if matvecs >= max_matvecs {
            return Err(Error::MaxItersExceeded { iters: matvecs, residual: res });
        }

        let beta = norm2(&r);
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<f64>>()];
        let mut h = vec![vec![0.0; RESTART]; RESTART + 1];
        let (mut cs, mut sn) = (vec![0.0; RESTART], vec![0.0; RESTART]);
        let mut g = vec![0.0; RESTART + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..RESTART {
            let mut w = a(&basis[k]);
            matvecs += 1;
            for (i, v) in basis.iter().enumerate() {
                let d: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
                h[i][k] = d;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= d * vi;
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            // the 2-norm bounds the sup-norm; the true residual is rechecked on restart
            if g[k + 1].abs() <= 0.1 * tol || wn == 0.0 || matvecs >= max_matvecs {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xj, vj) in x.iter_mut().zip(v) {
                *xj += yi * vj;
            }
        }
    }
}

/// Solves the slab problem to the configured tolerance.
pub fn solve_halfspace(cfg: &OracleConfig) -> Result<OracleSolution> {
    cfg.validate()?;
    let sw = Sweeper::new(cfg);
    let n = sw.x.len();
    // fixed point U = A U + b  ⇔  (I − A) U = b
    let b = sw.sweep(&vec![0.0; n], true);
    let op = |v: &[f64]| {
        let av = sw.sweep(v, false);
        v.iter().zip(&av).map(|(v, a)| v - a).collect::<Vec<f64>>()
    };
    let guess: Vec<f64> = sw.x.iter().map(|x| x + 0.5).collect();
    let k = gmres(op, &b, guess, cfg.iter_tol, cfg.max_iters)?;
    let u = k.solution;

    let fields = sw.fields(&u, true);
    let n_mu = sw.mu.len();
    let mut mu_nodes = Vec::with_capacity(2 * n_mu);
    let mut mu_weights = Vec::with_capacity(2 * n_mu);
    for j in (0..n_mu).rev() {
        mu_nodes.push(-sw.mu[j]);
        mu_weights.push(sw.w[j]);
    }
    for j in 0..n_mu {
        mu_nodes.push(sw.mu[j]);
        mu_weights.push(sw.w[j]);
    }
    let h_field: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(2 * n_mu);
            row.extend((0..n_mu).rev().map(|j| fields[j].0[i]));
            row.extend((0..n_mu).map(|j| fields[j].1[i]));
            row
        })
        .collect();
    let u_x = moment(&h_field, &mu_nodes, &mu_weights);
    let mut sol = OracleSolution {
        q: cfg.q,
        mu_nodes,
        mu_weights,
        x_nodes: sw.x.clone(),
        h_field,
        u_x,
        u_sl_extracted: 0.0,
        bc_residual: 0.0,
        iters_used: k.matvecs,
    };
    sol.bc_residual = bc_residual(&sol);
    sol.u_sl_extracted = extract_slip(&sol)?;
    Ok(sol)
}

/// `U(x_i) = (3/8) Σ_j w_j (1 − μ_j²) h(x_i, μ_j)`.
pub fn moment(h_field: &[Vec<f64>], mu: &[f64], w: &[f64]) -> Vec<f64> {
    h_field
        .iter()
        .map(|row| 0.375 * row.iter().zip(mu.iter().zip(w)).map(|(h, (m, w))| w * (1.0 - m * m) * h).sum::<f64>())
        .collect()
}

/// Intercept of `U(x) − x` over the default fit window.
pub fn extract_slip(sol: &OracleSolution) -> Result<f64> {
    extract_slip_in(sol, FIT_WINDOW)
}

/// Intercept of `U(x) − x` over `[lo·x_max, hi·x_max]`.
pub fn extract_slip_in(sol: &OracleSolution, window: (f64, f64)) -> Result<f64> {
    let x_max = *sol.x_nodes.last().ok_or_else(|| Error::InvalidInput("empty slab".into()))?;
    let pts: Vec<(f64, f64)> = sol
        .x_nodes
        .iter()
        .zip(&sol.u_x)
        .filter(|(x, _)| **x >= window.0 * x_max && **x <= window.1 * x_max)
        .map(|(x, u)| (*x, u - x))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput("fit window holds fewer than two nodes".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if slope.abs() > MAX_FIT_SLOPE {
        return Err(Error::FitUnstable { slope });
    }
    Ok(my)
}

/// `max_{μ>0} |h(0, μ) − (1−q) h(0, −μ)|`.
pub fn bc_residual(sol: &OracleSolution) -> f64 {
    let row = &sol.h_field[0];
    let n = sol.mu_nodes.len();
    (n / 2..n)
        .map(|j| {
            let mirror = n - 1 - j;
            (row[j] - (1.0 - sol.q) * row[mirror]).abs()
        })
        .fold(0.0, f64::max)
}
