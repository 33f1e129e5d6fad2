//! Fermi-statistics factors entering the dimensional slip coefficient.
//!
//! `l_n(α) = ∫₀^∞ tⁿ ln(1 + e^{α − t²}) dt`, and the prefactor
//! `15 l₀(α) / (8 √π l₁(α))` that converts the per-`G_v` slip into `K_v`.
//! In the Boltzmann limit `α → −∞` the ratio `l₀/l₁ → √π` and the prefactor
//! tends to `15/8`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, ln_1p_exp, QuadratureSpec};

/// Reduced chemical potential `α = μ_chem / kT`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReducedChemicalPotential(f64);

impl ReducedChemicalPotential {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidInput(format!("chemical potential must be finite, got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

// Gaussian decay beyond the Fermi edge makes the integrand < e^{-1600} here.
const EDGE_MARGIN: f64 = 40.0;

/// `l_n(α)` for `n ∈ {0, 1}`.
pub fn fermi_log_moment(n: usize, alpha: ReducedChemicalPotential, spec: &QuadratureSpec) -> Result<f64> {
    if n > 1 {
        return Err(Error::InvalidInput(format!("Fermi moment order must be 0 or 1, got {n}")));
    }
    let a = alpha.value();
    let edge = a.max(0.0).sqrt();
    let upper = edge + EDGE_MARGIN;
    let mut breaks = vec![edge, edge + 1.0, edge + 3.0, edge + 6.0];
    if edge > 1.0 {
        breaks.extend([edge - 1.0, 0.5 * edge]);
    }
    let power = n as i32;
    let r = integrate_with_breaks(|t| t.powi(power) * ln_1p_exp(a - t * t), 0.0, upper, &breaks, spec)?;
    if !(r.value > 0.0) {
        return Err(Error::NonConvergence {
            what: format!("l_{n}({a}) underflowed"),
            estimate: r.error,
            tolerance: spec.target(r.value),
        });
    }
    Ok(r.value)
}

/// `15 l₀(α) / (8 √π l₁(α))`.
pub fn kv_prefactor(alpha: ReducedChemicalPotential, spec: &QuadratureSpec) -> Result<f64> {
    let l0 = fermi_log_moment(0, alpha, spec)?;
    let l1 = fermi_log_moment(1, alpha, spec)?;
    Ok(15.0 * l0 / (8.0 * std::f64::consts::PI.sqrt() * l1))
}
