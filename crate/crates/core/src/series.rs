//! Order-by-order solution of the characteristic Fredholm equation.
//!
//! With `E = 2(2−q)G_v Σ qⁿ E_n` and `U_sl = (2−q)/q · G_v Σ V_n qⁿ`, order
//! `n` of the equation reads
//!
//! ```text
//! E_n(k) L(k) = −V_n T₁(k) − (1/π) ∫₀^∞ J₁(k,k₁) E_{n−1}(k₁) dk₁      (n ≥ 1)
//! E₀(k) L(k)  = −V₀ T₁(k) + T₂(k)
//! ```
//!
//! `L` has a double zero at `k = 0`; requiring `E_n(0)` to be finite fixes
//! `V_n = −(1/(π T₁(0))) ∫ T₁ E_{n−1} dk` and leaves the regular form
//! `E_n(k) = (1/(π T₂(k))) ∫ S(k,k₁) E_{n−1}(k₁) dk₁`, which is what we
//! evaluate. The unregularized equation is kept only as a residual check.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermi::{kv_prefactor, ReducedChemicalPotential};
use crate::grid::KGrid;
use crate::kernels::{eval_j, eval_phi0, eval_t, s_from_parts, T1_AT_ZERO};
use crate::quadrature::{integrate_log, integrate_with_breaks, QuadratureSpec};
use crate::spline::CubicSpline;

/// `V₀ = T₂(0)/T₁(0)`.
pub const V0: f64 = 8.0 / 15.0;

/// Default truncation order of the series.
pub const DEFAULT_ORDER: usize = 2;

/// Highest series order accepted.
pub const MAX_SERIES_ORDER: usize = 8;

/// Knots of the interpolating spline per grid interval.
const SPLINE_REFINEMENT: usize = 8;

/// Wave number at which the pole-removal residual is probed.
const POLE_PROBE: f64 = 1e-3;

/// Large-`k` model `E(k) ≈ (a ln k + b)/k²` fitted through the last two nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AlgebraicTail {
    pub a: f64,
    pub b: f64,
    pub k_start: f64,
}

impl AlgebraicTail {
    fn fit(k1: f64, e1: f64, k2: f64, e2: f64) -> Self {
        let (g1, g2) = (e1 * k1 * k1, e2 * k2 * k2);
        let a = (g2 - g1) / (k2.ln() - k1.ln());
        let b = g2 - a * k2.ln();
        Self { a, b, k_start: k2 }
    }

    pub fn eval(&self, k: f64) -> f64 {
        (self.a * k.ln() + self.b) / (k * k)
    }

    pub fn slope(&self, k: f64) -> f64 {
        (self.a - 2.0 * (self.a * k.ln() + self.b)) / (k * k * k)
    }

    /// `∫_{k_start}^∞ E(k) dk`.
    pub fn integral(&self) -> f64 {
        let k = self.k_start;
        (self.a * (k.ln() + 1.0) + self.b) / k
    }

    /// `∫_{k_start}^∞ E(k) / (1 + k²μ²) dk`.
    pub fn lorentz_integral(&self, mu: f64, spec: &QuadratureSpec) -> Result<f64> {
        if mu == 0.0 {
            return Ok(self.integral());
        }
        // s = K/k maps the tail onto (0, 1]
        let big_k = self.k_start;
        let c = (big_k * mu).powi(2);
        let f = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            (self.a * (big_k / s).ln() + self.b) * s * s / (s * s + c)
        };
        let scale = c.sqrt().min(1.0);
        let r = integrate_with_breaks(f, 0.0, 1.0, &[0.1 * scale, scale], spec)?;
        Ok(r.value / big_k)
    }

    fn scaled(&self, w: f64) -> Self {
        Self { a: self.a * w, b: self.b * w, k_start: self.k_start }
    }
}

#[derive(Clone, Debug)]
enum Source {
    /// `E₀ = φ₀/T₂` in closed form.
    Leading,
    /// Regularized transfer of the previous order.
    Transfer(Arc<SpectralDensity>),
    /// Linear combination of other densities.
    Combination(Vec<(f64, Arc<SpectralDensity>)>),
}

/// One spectral density sampled on a [`KGrid`] with a cubic interpolant.
#[derive(Clone, Debug)]
pub struct SpectralDensity {
    order: usize,
    grid: Arc<KGrid>,
    values: Vec<f64>,
    spline: CubicSpline,
    tail: AlgebraicTail,
    source: Source,
}

impl SpectralDensity {
    fn from_values(order: usize, grid: Arc<KGrid>, values: Vec<f64>, source: Source) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            if i == 0 {
                return Err(Error::RegularityCheckFailed { order });
            }
            return Err(Error::InvalidInput(format!(
                "spectral density of order {order} is not finite at k = {}",
                grid.nodes()[i]
            )));
        }
        let n = values.len();
        let k = grid.nodes();
        let tail = AlgebraicTail::fit(k[n - 2], values[n - 2], k[n - 1], values[n - 1]);
        let (knots, fine) = grid.refine(&values, SPLINE_REFINEMENT);
        let spline = CubicSpline::clamped(&knots, &fine, 0.0, tail.slope(k[n - 1]));
        Ok(Self { order, grid, values, spline, tail, source })
    }

    /// Density that vanishes identically.
    pub fn zero(order: usize, grid: Arc<KGrid>) -> Self {
        let n = grid.len();
        Self::from_values(order, grid, vec![0.0; n], Source::Combination(Vec::new()))
            .expect("zero samples are finite")
    }

    /// `Σ wᵢ Eᵢ`, e.g. the assembled `E = 2(2−q) Σ qⁿ E_n`.
    pub fn combine(terms: &[(f64, Arc<SpectralDensity>)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("cannot combine an empty list of densities".into()))?;
        let grid = first.1.grid.clone();
        let mut values = vec![0.0; grid.len()];
        for (w, d) in terms {
            if d.grid.nodes() != grid.nodes() {
                return Err(Error::InvalidInput("densities live on different grids".into()));
            }
            for (v, e) in values.iter_mut().zip(&d.values) {
                *v += w * e;
            }
        }
        let order = terms.iter().map(|(_, d)| d.order).max().unwrap_or(0);
        let mut out = Self::from_values(order, grid, values, Source::Combination(terms.to_vec()))?;
        // the fitted tail is linear in the samples; keep the exact combination
        let mut tail = AlgebraicTail { k_start: out.tail.k_start, ..AlgebraicTail::default() };
        for (w, d) in terms {
            let t = d.tail.scaled(*w);
            tail.a += t.a;
            tail.b += t.b;
        }
        out.tail = tail;
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> &AlgebraicTail {
        &self.tail
    }

    pub fn spline(&self) -> &CubicSpline {
        &self.spline
    }

    /// Interpolated value; the algebraic tail model beyond `k_max`.
    pub fn eval(&self, k: f64) -> f64 {
        let k = k.abs();
        if k > self.grid.k_max() {
            self.tail.eval(k)
        } else {
            self.spline.eval(k)
        }
    }

    /// Value at `k` recomputed from its defining formula rather than interpolated.
    pub fn exact(&self, k: f64, spec: &QuadratureSpec) -> Result<f64> {
        let k = k.abs();
        match &self.source {
            Source::Leading => e0_at(k, spec),
            Source::Transfer(prev) => transfer_at(k, prev, spec),
            Source::Combination(terms) => {
                let mut s = 0.0;
                for (w, d) in terms {
                    s += w * d.exact(k, spec)?;
                }
                Ok(s)
            }
        }
    }

    /// `∫₀^∞ E(k) dk` including the tail beyond `k_max`.
    pub fn integral(&self) -> f64 {
        self.spline.integral() + self.tail.integral()
    }

    /// `∫₀^∞ E(k) / (1 + k²μ²) dk` on the grid weights plus tail.
    pub fn lorentz_moment(&self, mu: f64, spec: &QuadratureSpec) -> Result<f64> {
        let m2 = mu * mu;
        let body = self.grid.integrate_samples(
            &self
                .grid
                .nodes()
                .iter()
                .zip(&self.values)
                .map(|(k, e)| e / (1.0 + k * k * m2))
                .collect::<Vec<_>>(),
        );
        Ok(body + self.tail.lorentz_integral(mu, spec)?)
    }

    /// `max |E(k)|` over the nodes with `k ≥ k0`.
    pub fn sup_beyond(&self, k0: f64) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .filter(|(k, _)| **k >= k0)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

fn e0_at(k: f64, spec: &QuadratureSpec) -> Result<f64> {
    let phi = eval_phi0(k, spec)?.value;
    let t2 = eval_t(2, k, spec)?.value;
    Ok(phi / t2)
}

fn transfer_at(k: f64, prev: &SpectralDensity, spec: &QuadratureSpec) -> Result<f64> {
    let grid = &prev.grid;
    let t1k = eval_t(1, k, spec)?.value;
    let t2k = eval_t(2, k, spec)?.value;
    let t3k = eval_t(3, k, spec)?.value;
    let mut acc = Vec::with_capacity(grid.len());
    for &k1 in grid.nodes() {
        let s = if k1 == 0.0 {
            0.0
        } else {
            let j3 = eval_j(3, k, k1, spec)?.value;
            let t1k1 = eval_t(1, k1, spec)?.value;
            let t3k1 = eval_t(3, k1, spec)?.value;
            s_from_parts(k, k1, j3, t1k, t3k, t1k1, t3k1)
        };
        acc.push(s);
    }
    let products: Vec<f64> = acc.iter().zip(&prev.values).map(|(s, e)| s * e).collect();
    let body = grid.integrate_samples(&products);
    let n = grid.len();
    let tail = power_tail(grid.nodes()[n - 2], products[n - 2], grid.nodes()[n - 1], products[n - 1]);
    Ok((body + tail) / (PI * t2k))
}

/// Tail `∫_{k_b}^∞ f` for `f ≈ C k^{−p}` through two samples; zero when the
/// samples do not look like a decaying power law.
fn power_tail(ka: f64, fa: f64, kb: f64, fb: f64) -> f64 {
    if fa == 0.0 || fb == 0.0 || fa.signum() != fb.signum() {
        return 0.0;
    }
    let p = (fa / fb).ln() / (kb / ka).ln();
    if p > 1.0 {
        fb * kb / (p - 1.0)
    } else {
        0.0
    }
}

/// Samples `E₀ = φ₀/T₂` on the grid.
pub fn build_e0(grid: Arc<KGrid>, spec: &QuadratureSpec) -> Result<SpectralDensity> {
    let values = grid
        .nodes()
        .par_iter()
        .map(|&k| e0_at(k, spec))
        .collect::<Result<Vec<_>>>()?;
    SpectralDensity::from_values(0, grid, values, Source::Leading)
}

/// Kernel samples shared by every order on a fixed grid.
#[derive(Clone, Debug)]
pub struct TransferOperator {
    grid: Arc<KGrid>,
    spec: QuadratureSpec,
    t1: Vec<f64>,
    t2: Vec<f64>,
    /// `S(k_i, k_j)`, row-major
    s: Vec<f64>,
}

impl TransferOperator {
    pub fn new(grid: Arc<KGrid>, spec: &QuadratureSpec) -> Result<Self> {
        let k = grid.nodes();
        let n = k.len();
        let t1 = k.iter().map(|&k| eval_t(1, k, spec).map(|v| v.value)).collect::<Result<Vec<_>>>()?;
        let t2 = k.iter().map(|&k| eval_t(2, k, spec).map(|v| v.value)).collect::<Result<Vec<_>>>()?;
        let t3 = k.iter().map(|&k| eval_t(3, k, spec).map(|v| v.value)).collect::<Result<Vec<_>>>()?;
        // J₃ is symmetric; compute the upper triangle row by row
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| eval_j(3, k[i], k[j], spec).map(|v| v.value))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let j3 = if j >= i { upper[i][j - i] } else { upper[j][i - j] };
                s[i * n + j] = s_from_parts(k[i], k[j], j3, t1[i], t3[i], t1[j], t3[j]);
            }
        }
        Ok(Self { grid, spec: *spec, t1, t2, s })
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    /// `V_n` from `E_{n−1}` by removing the double pole at `k = 0`.
    pub fn next_v(&self, prev: &SpectralDensity) -> Result<f64> {
        let products: Vec<f64> = self.t1.iter().zip(&prev.values).map(|(t, e)| t * e).collect();
        let body = self.grid.integrate_samples(&products);
        let tail = t1_tail_moment(&prev.tail, &self.spec)?;
        let limit = 10.0 * self.spec.abs_tol;
        if tail.abs() > limit {
            return Err(Error::TailTooLarge { tail, limit });
        }
        Ok(-(body + tail) / (PI * T1_AT_ZERO))
    }

    /// `E_n` from `E_{n−1}` through the regularized transfer kernel.
    pub fn next_e(&self, prev: &Arc<SpectralDensity>) -> Result<SpectralDensity> {
        let n = self.grid.len();
        let k = self.grid.nodes();
        let w = self.grid.weights();
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let row = &self.s[i * n..(i + 1) * n];
                let mut body = 0.0;
                for j in 0..n {
                    body += w[j] * row[j] * prev.values[j];
                }
                let tail = power_tail(k[n - 2], row[n - 2] * prev.values[n - 2], k[n - 1], row[n - 1] * prev.values[n - 1]);
                (body + tail) / (PI * self.t2[i])
            })
            .collect();
        if !values[0].is_finite() {
            return Err(Error::RegularityCheckFailed { order: prev.order + 1 });
        }
        SpectralDensity::from_values(prev.order + 1, self.grid.clone(), values, Source::Transfer(prev.clone()))
    }
}

fn t1_tail_moment(tail: &AlgebraicTail, spec: &QuadratureSpec) -> Result<f64> {
    if tail.a == 0.0 && tail.b == 0.0 {
        return Ok(0.0);
    }
    let k0 = tail.k_start;
    let loose = QuadratureSpec { abs_tol: 1e-30, rel_tol: 1e-8, ..*spec };
    let r = integrate_log(
        |k| eval_t(1, k, spec).map(|v| v.value).unwrap_or(0.0) * tail.eval(k),
        k0,
        k0 * 1e8,
        &loose,
    )?;
    Ok(r.value)
}

/// `V_n = −(1/(π T₁(0))) ∫₀^∞ T₁(k) E_{n−1}(k) dk`.
pub fn next_v(prev: &SpectralDensity, spec: &QuadratureSpec) -> Result<f64> {
    let grid = prev.grid.clone();
    let products: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&prev.values)
        .map(|(&k, e)| eval_t(1, k, spec).map(|t| t.value * e))
        .collect::<Result<Vec<_>>>()?;
    let body = grid.integrate_samples(&products);
    let tail = t1_tail_moment(&prev.tail, spec)?;
    let limit = 10.0 * spec.abs_tol;
    if tail.abs() > limit {
        return Err(Error::TailTooLarge { tail, limit });
    }
    Ok(-(body + tail) / (PI * T1_AT_ZERO))
}

/// `E_n` from `E_{n−1}`, building the transfer kernel on the fly.
pub fn next_e(prev: &Arc<SpectralDensity>, grid: Arc<KGrid>, spec: &QuadratureSpec) -> Result<SpectralDensity> {
    if grid.nodes() != prev.grid.nodes() {
        return Err(Error::InvalidInput("previous order lives on a different grid".into()));
    }
    TransferOperator::new(grid, spec)?.next_e(prev)
}

/// Slip-series coefficients `V₀…V_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoefficients {
    pub order: usize,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    /// pole-removal residual per order, probed at `k = 1e−3`
    pub residuals: Vec<f64>,
}

impl SeriesCoefficients {
    /// `Σ V_n qⁿ` by Horner's rule.
    pub fn bracket(&self, q: f64) -> f64 {
        self.v.iter().rev().fold(0.0, |acc, v| acc * q + v)
    }

    /// Coefficients truncated to order `n`.
    pub fn truncated(&self, n: usize) -> Self {
        let m = (n + 1).min(self.v.len());
        Self { order: m - 1, v: self.v[..m].to_vec(), residuals: self.residuals[..m.min(self.residuals.len())].to_vec() }
    }
}

/// Everything produced by [`solve_series`].
#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub coefficients: SeriesCoefficients,
    pub densities: Vec<Arc<SpectralDensity>>,
}

fn pole_residual(order: usize, v: f64, e: &SpectralDensity, prev: Option<&SpectralDensity>, spec: &QuadratureSpec) -> Result<f64> {
    let eps = POLE_PROBE;
    let l = eps * eps * eval_t(2, eps, spec)?.value;
    let t1 = eval_t(1, eps, spec)?.value;
    let rhs = match prev {
        None => eval_t(2, eps, spec)?.value,
        Some(p) => {
            let products = p
                .grid
                .nodes()
                .iter()
                .zip(&p.values)
                .map(|(&k1, e1)| eval_j(1, eps, k1, spec).map(|j| j.value * e1))
                .collect::<Result<Vec<_>>>()?;
            -p.grid.integrate_samples(&products) / PI
        }
    };
    let _ = order;
    Ok((e.values[0] * l + v * t1 - rhs).abs())
}

/// Runs the series to order `order` on `grid`.
pub fn solve_series(order: usize, grid: Arc<KGrid>, spec: &QuadratureSpec) -> Result<SeriesSolution> {
    spec.validate()?;
    if order > MAX_SERIES_ORDER {
        return Err(Error::InvalidInput(format!("series order {order} exceeds {MAX_SERIES_ORDER}")));
    }
    let e0 = Arc::new(build_e0(grid.clone(), spec)?);
    let mut v = vec![V0];
    let mut residuals = vec![pole_residual(0, V0, &e0, None, spec)?];
    let mut densities = vec![e0];
    if order > 0 {
        let op = TransferOperator::new(grid, spec)?;
        for n in 1..=order {
            let prev = densities[n - 1].clone();
            let vn = op.next_v(&prev)?;
            let en = Arc::new(op.next_e(&prev)?);
            residuals.push(pole_residual(n, vn, &en, Some(&prev), spec)?);
            v.push(vn);
            densities.push(en);
        }
    }
    Ok(SeriesSolution { coefficients: SeriesCoefficients { order, v, residuals }, densities })
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAccommodation(q))
    }
}

/// `U_sl / G_v = (2−q)/q · Σ V_n qⁿ`.
pub fn slip_velocity(q: f64, coeffs: &SeriesCoefficients) -> Result<f64> {
    check_q(q)?;
    Ok((2.0 - q) / q * coeffs.bracket(q))
}

/// `K_v(α, q) = 15 l₀/(8√π l₁) · (2−q)/2 · Σ V_n qⁿ`.
pub fn slip_coefficient(alpha: ReducedChemicalPotential, q: f64, coeffs: &SeriesCoefficients, spec: &QuadratureSpec) -> Result<f64> {
    check_q(q)?;
    Ok(kv_prefactor(alpha, spec)? * (2.0 - q) / 2.0 * coeffs.bracket(q))
}

/// Slip results for one `(α, q)`.
#[derive(Clone, Debug, Serialize)]
pub struct SlipSolution {
    pub q: f64,
    pub alpha: f64,
    #[serde(rename = "U_sl_dimensionless")]
    pub u_sl: f64,
    #[serde(rename = "K_v")]
    pub k_v: f64,
    /// `V_n qⁿ`
    pub per_order_terms: Vec<f64>,
    pub coefficients: SeriesCoefficients,
}

impl SlipSolution {
    pub fn assemble(alpha: ReducedChemicalPotential, q: f64, coeffs: &SeriesCoefficients, spec: &QuadratureSpec) -> Result<Self> {
        let u_sl = slip_velocity(q, coeffs)?;
        let k_v = slip_coefficient(alpha, q, coeffs, spec)?;
        let per_order_terms = coeffs.v.iter().enumerate().map(|(n, v)| v * q.powi(n as i32)).collect();
        Ok(Self { q, alpha: alpha.value(), u_sl, k_v, per_order_terms, coefficients: coeffs.clone() })
    }
}

/// Residual of the full equation
/// `E L + (q/π) ∫ J₁ E dk₁ + 2q U_sl T₁ − 2(2−q) T₂` at `k` for the series
/// truncated at `order`.
pub fn fredholm_residual(
    q: f64,
    k: f64,
    coeffs: &SeriesCoefficients,
    densities: &[Arc<SpectralDensity>],
    order: usize,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_q(q)?;
    if densities.len() <= order || coeffs.v.len() <= order {
        return Err(Error::InvalidInput(format!("order {order} not available")));
    }
    let u_sl = slip_velocity(q, &coeffs.truncated(order))?;
    let grid = densities[0].grid.clone();
    let n = grid.len();
    let mut e = vec![0.0; n];
    let mut e_k = 0.0;
    for (m, d) in densities[..=order].iter().enumerate() {
        let c = 2.0 * (2.0 - q) * q.powi(m as i32);
        for (v, dv) in e.iter_mut().zip(&d.values) {
            *v += c * dv;
        }
        e_k += c * d.exact(k, spec)?;
    }
    let products = grid
        .nodes()
        .iter()
        .zip(&e)
        .map(|(&k1, e1)| eval_j(1, k, k1, spec).map(|j| j.value * e1))
        .collect::<Result<Vec<_>>>()?;
    let integral = grid.integrate_samples(&products)
        + power_tail(grid.nodes()[n - 2], products[n - 2], grid.nodes()[n - 1], products[n - 1]);
    let l = k * k * eval_t(2, k, spec)?.value;
    Ok(e_k * l + q / PI * integral + 2.0 * q * u_sl * eval_t(1, k, spec)?.value
        - 2.0 * (2.0 - q) * eval_t(2, k, spec)?.value)
}

/// `Φ_n(k, μ)`, the order-`n` spectral density of the distribution function.
///
/// `densities` must hold orders `0..=n` from the same solve as `coeffs`.
pub fn spectral_phi(
    n: usize,
    k: f64,
    mu: f64,
    densities: &[Arc<SpectralDensity>],
    coeffs: &SeriesCoefficients,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    if mu.abs() > 1.0 || !mu.is_finite() {
        return Err(Error::InvalidInput(format!("μ must lie in [−1, 1], got {mu}")));
    }
    if n >= densities.len() || n >= coeffs.v.len() {
        return Err(Error::InvalidInput(format!("order {n} not available")));
    }
    let m = mu.abs();
    let e_n = densities[n].exact(k, spec)?;
    let numerator = if n == 0 {
        e_n + (m - coeffs.v[0]) * m
    } else {
        e_n - coeffs.v[n] * m - m / PI * densities[n - 1].lorentz_moment(mu, spec)?
    };
    Ok(Complex64::new(numerator, 0.0) / Complex64::new(1.0, k * mu))
}
