//! Velocity profile in the Knudsen layer from cosine transforms of the
//! spectral densities.
//!
//! `U(x)/G_v = U_sl + x + Σ qⁿ U_c⁽ⁿ⁾(x)` with
//! `U_c⁽ⁿ⁾(x) = ((2−q)/π) ∫₀^∞ cos(kx) E_n(k) dk`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermi::{kv_prefactor, ReducedChemicalPotential};
use crate::quadrature::{integrate_log, integrate_with_breaks, wynn_epsilon, QuadratureSpec};
use crate::series::{slip_velocity, SeriesCoefficients, SpectralDensity};

/// `1/√5`, the exact wall velocity for diffuse reflection.
pub const WALL_VELOCITY_DIFFUSE: f64 = 0.447_213_595_499_958;

/// Slip velocity for `q = 1` quoted as the reference value.
pub const SLIP_DIFFUSE_REFERENCE: f64 = 0.5819;

/// Default x-range of the figure presets.
pub const DEFAULT_X_MAX: f64 = 10.0;
pub const DEFAULT_X_NODES: usize = 201;

const MAX_HALF_PERIODS: usize = 600;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRequest {
    pub q: f64,
    pub alpha: f64,
    pub order: usize,
    pub x_nodes: Vec<f64>,
    pub include_components: bool,
}

impl ProfileRequest {
    pub fn new(q: f64, alpha: f64, order: usize, x_nodes: Vec<f64>) -> Self {
        Self { q, alpha, order, x_nodes, include_components: false }
    }

    /// Preset conditions for figures 1, 2 and 3.
    pub fn figure(n: u8) -> Result<Self> {
        let q = match n {
            1 => 1.0,
            2 => 0.5,
            3 => 0.25,
            _ => return Err(Error::InvalidInput(format!("unknown figure {n}; expected 1, 2 or 3"))),
        };
        Ok(Self::new(q, -5.0, crate::series::DEFAULT_ORDER, uniform_nodes(DEFAULT_X_MAX, DEFAULT_X_NODES)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidAccommodation(self.q));
        }
        ReducedChemicalPotential::new(self.alpha)?;
        if self.x_nodes.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput("x nodes must be finite and non-negative".into()));
        }
        if self.x_nodes.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("x nodes must be sorted".into()));
        }
        Ok(())
    }
}

/// `n` uniform nodes on `[0, x_max]`; a single node sits at `x = 0`.
pub fn uniform_nodes(x_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| x_max * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VelocityProfile {
    pub x: Vec<f64>,
    #[serde(rename = "U_over_Gv")]
    pub u_over_gv: Vec<f64>,
    /// `[order][x]`
    #[serde(rename = "Uc_components", skip_serializing_if = "Option::is_none")]
    pub uc_components: Option<Vec<Vec<f64>>>,
    pub u_sl: f64,
}

/// Sum of `∫ f` over consecutive intervals of length `half` starting at
/// `start`, extrapolated with Wynn's epsilon algorithm.
fn alternating_tail<F: Fn(f64) -> f64>(f: F, start: f64, half: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let piece_spec = QuadratureSpec { abs_tol: spec.abs_tol * 1e-3, ..*spec };
    let mut partial = Vec::new();
    let mut sum = 0.0;
    let mut last_est = f64::NAN;
    let mut settled = 0;
    for j in 0..MAX_HALF_PERIODS {
        let a = start + half * j as f64;
        let piece = integrate_with_breaks(&f, a, a + half, &[], &piece_spec)?.value;
        sum += piece;
        partial.push(sum);
        if partial.len() < 6 {
            continue;
        }
        let window = &partial[partial.len().saturating_sub(12)..];
        let (est, _) = wynn_epsilon(window);
        let tol = spec.target(est).max(1e-15);
        if (est - last_est).abs() <= tol || piece.abs() <= 1e-3 * tol {
            settled += 1;
            if settled >= 2 {
                return Ok(est);
            }
        } else {
            settled = 0;
        }
        last_est = est;
    }
    Err(Error::OscillatoryNonConvergence { x })
}

/// `∫₀^∞ cos(kx) E(k) dk`: the spline exactly up to `k_max`, the algebraic
/// tail beyond it.
pub fn cosine_transform(e: &SpectralDensity, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidInput(format!("x must be finite and non-negative, got {x}")));
    }
    let body = e.spline().cosine_moment(x);
    let tail = e.tail();
    if tail.a == 0.0 && tail.b == 0.0 {
        return Ok(body);
    }
    if x == 0.0 {
        return Ok(body + tail.integral());
    }
    let k0 = tail.k_start;
    let half = PI / x;
    // first zero of cos(kx) beyond k_max
    let first = ((k0 * x / PI - 0.5).floor() + 1.5) * half;
    let f = |k: f64| (k * x).cos() * tail.eval(k);
    let lead = if first / k0 > 4.0 {
        integrate_log(f, k0, first, spec)?.value
    } else {
        integrate_with_breaks(f, k0, first, &[], spec)?.value
    };
    Ok(body + lead + alternating_tail(f, first, half, x, spec)?)
}

/// `U_c⁽ⁿ⁾(x)/G_v = ((2−q)/π) ∫₀^∞ cos(kx) E_n(k) dk`.
pub fn uc_component(e_n: &SpectralDensity, x: f64, q: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidAccommodation(q));
    }
    Ok((2.0 - q) / PI * cosine_transform(e_n, x, spec)?)
}

fn check_orders(order: usize, coeffs: &SeriesCoefficients, densities: &[Arc<SpectralDensity>]) -> Result<()> {
    if densities.len() <= order {
        return Err(Error::InvalidInput(format!(
            "profile of order {order} needs {} spectral densities, got {}",
            order + 1,
            densities.len()
        )));
    }
    if coeffs.v.is_empty() {
        return Err(Error::InvalidInput("no slip coefficients".into()));
    }
    Ok(())
}

/// `Σ_{n≤N} qⁿ U_c⁽ⁿ⁾(x)` together with the individual orders.
fn uc_sum(x: f64, q: f64, order: usize, densities: &[Arc<SpectralDensity>], spec: &QuadratureSpec) -> Result<(f64, Vec<f64>)> {
    let parts = densities[..=order]
        .iter()
        .map(|e| uc_component(e, x, q, spec))
        .collect::<Result<Vec<_>>>()?;
    let total = parts.iter().enumerate().map(|(n, u)| q.powi(n as i32) * u).sum();
    Ok((total, parts))
}

/// `U(x)/G_v` on the requested nodes.
///
/// The slip term uses every coefficient in `coeffs`; `req.order` truncates
/// the continuous-spectrum sum.
pub fn velocity_profile(
    req: &ProfileRequest,
    coeffs: &SeriesCoefficients,
    densities: &[Arc<SpectralDensity>],
    spec: &QuadratureSpec,
) -> Result<VelocityProfile> {
    req.validate()?;
    check_orders(req.order, coeffs, densities)?;
    let u_sl = slip_velocity(req.q, coeffs)?;
    let rows = req
        .x_nodes
        .par_iter()
        .map(|&x| uc_sum(x, req.q, req.order, densities, spec))
        .collect::<Result<Vec<_>>>()?;
    let u_over_gv = req.x_nodes.iter().zip(&rows).map(|(x, (uc, _))| u_sl + x + uc).collect();
    let uc_components = req.include_components.then(|| {
        (0..=req.order)
            .map(|n| rows.iter().map(|(_, parts)| parts[n]).collect())
            .collect()
    });
    Ok(VelocityProfile { x: req.x_nodes.clone(), u_over_gv, uc_components, u_sl })
}

/// `U(0)/G_v = U_sl + Σ_{n≤N} qⁿ U_c⁽ⁿ⁾(0)`.
pub fn wall_velocity(
    q: f64,
    coeffs: &SeriesCoefficients,
    densities: &[Arc<SpectralDensity>],
    spec: &QuadratureSpec,
    order: usize,
) -> Result<f64> {
    profile_h(0.0, q, coeffs, densities, spec, order)
}

/// `H(x, α) = U(x)/G_v`; independent of `α`.
pub fn profile_h(
    x: f64,
    q: f64,
    coeffs: &SeriesCoefficients,
    densities: &[Arc<SpectralDensity>],
    spec: &QuadratureSpec,
    order: usize,
) -> Result<f64> {
    check_orders(order, coeffs, densities)?;
    let u_sl = slip_velocity(q, coeffs)?;
    Ok(u_sl + x + uc_sum(x, q, order, densities, spec)?.0)
}

/// `K_v*(x, α) = 15 H(x, α) l₀(α) / (8√π l₁(α))`.
pub fn kv_star(
    x: f64,
    alpha: ReducedChemicalPotential,
    q: f64,
    coeffs: &SeriesCoefficients,
    densities: &[Arc<SpectralDensity>],
    spec: &QuadratureSpec,
    order: usize,
) -> Result<f64> {
    Ok(kv_prefactor(alpha, spec)? * profile_h(x, q, coeffs, densities, spec, order)?)
}

/// The assembled density `E = 2(2−q) Σ qⁿ E_n` with its slip velocity,
/// used for distribution-function diagnostics.
#[derive(Clone, Debug)]
pub struct AssembledSeries {
    pub q: f64,
    pub u_sl: f64,
    pub density: SpectralDensity,
}

impl AssembledSeries {
    pub fn new(q: f64, coeffs: &SeriesCoefficients, densities: &[Arc<SpectralDensity>], order: usize) -> Result<Self> {
        check_orders(order, coeffs, densities)?;
        let u_sl = slip_velocity(q, &coeffs.truncated(order))?;
        let terms: Vec<_> = densities[..=order]
            .iter()
            .enumerate()
            .map(|(n, e)| (2.0 * (2.0 - q) * q.powi(n as i32), e.clone()))
            .collect();
        Ok(Self { q, u_sl, density: SpectralDensity::combine(&terms)? })
    }

    /// `U_c(x)/G_v = (1/π) ∫₀^∞ cos(kx) E(k) dk / 2`.
    pub fn uc(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        Ok(cosine_transform(&self.density, x, spec)? / (2.0 * PI))
    }

    /// `(1/π) ∫₀^∞ [cos(kx) + kμ sin(kx)] E(k) / (1 + k²μ²) dk`, for either sign of `x`.
    pub fn continuous_part(&self, x: f64, mu: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_slice(x.abs(), mu)?;
        if x == 0.0 {
            return Ok(self.density.lorentz_moment(mu, spec)? / PI);
        }
        let e = &self.density;
        let f = |k: f64| ((k * x).cos() + k * mu * (k * x).sin()) * e.eval(k) / (1.0 + k * k * mu * mu);
        let half = PI / x.abs();
        let lead_pieces = (40.0 / half).ceil().max(1.0);
        let lead_end = lead_pieces * half;
        let mut breaks: Vec<f64> = (1..lead_pieces as usize).map(|j| j as f64 * half).collect();
        breaks.extend([0.5, 1.0, 2.0, 5.0, 10.0, 20.0].iter().filter(|&&b| b < lead_end));
        breaks.sort_by(f64::total_cmp);
        let lead = integrate_with_breaks(f, 0.0, lead_end, &breaks, spec)?.value;
        Ok((lead + alternating_tail(f, lead_end, half, x, spec)?) / PI)
    }

    /// `h_c(x, μ) = h(x, μ) − h_as(x, μ)`.
    ///
    /// For `μ > 0` the molecules leaving the wall carry, besides the
    /// continuous part, the term `s(μ) e^{−x/μ}` fixed by the reflection law,
    /// with `s(μ) = −2qU_sl + 2(2−q)μ − q h_c(0, −μ)` from the continuous part.
    pub fn distribution_slice(&self, x: f64, mu: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_slice(x, mu)?;
        let c = self.continuous_part(x, mu, spec)?;
        if mu <= 0.0 {
            return Ok(c);
        }
        let b = self.continuous_part(0.0, mu, spec)?;
        let s = -2.0 * self.q * self.u_sl + 2.0 * (2.0 - self.q) * mu - self.q * b;
        Ok(c + s * (-x / mu).exp())
    }
}

fn check_slice(x: f64, mu: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidInput(format!("x must be finite and non-negative, got {x}")));
    }
    if !(mu.is_finite() && mu.abs() <= 1.0) {
        return Err(Error::InvalidInput(format!("μ must lie in [−1, 1], got {mu}")));
    }
    Ok(())
}
