//! Kernel functions of the characteristic integral equation.
//!
//! All kernels are moments of the weight `(3/2) tⁿ (1 − t²)` on `t ∈ [0, 1]`
//! against Lorentzian factors `1/(1 + k²t²)`:
//!
//! * `T_n(k)     = (3/2) ∫ tⁿ(1−t²) / (1+k²t²) dt`
//! * `J_n(k,k₁)  = (3/2) ∫ tⁿ(1−t²) / ((1+k²t²)(1+k₁²t²)) dt`
//! * `L(k)       = 1 − T₀(k) = k² T₂(k)`
//! * `φ₀(k)      = (8/15) T₃(k) − T₄(k)`
//! * `S(k,k₁)    = k₁² [T₃(k)T₃(k₁)/T₁(0) − J₅(k,k₁)]`
//!
//! `T₀…T₂` use arctan/log closed forms for `k ≥ 0.5` and the convergent power
//! series in `k²` below that; everything else is adaptive Gauss–Kronrod.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};

/// Highest kernel order supported.
pub const MAX_ORDER: usize = 8;

/// `T₁(0) = 3/8`.
pub const T1_AT_ZERO: f64 = 0.375;
/// `T₂(0) = 1/5`.
pub const T2_AT_ZERO: f64 = 0.2;

const SERIES_CUTOFF: f64 = 0.5;

/// A kernel value with its absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub est_error: f64,
}

impl KernelValue {
    fn exact(value: f64) -> Self {
        Self { value, est_error: 4.0 * f64::EPSILON * value.abs() }
    }
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::InvalidInput(format!("kernel order {n} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

fn check_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidInput(format!("wave number must be finite and ≥ 0, got {k}")));
    }
    Ok(())
}

/// `T_n(0) = 3 / ((n+1)(n+3))`.
pub fn t_at_zero(n: usize) -> f64 {
    3.0 / (((n + 1) * (n + 3)) as f64)
}

/// Power series `T_n(k) = 3 Σ_j (−k²)^j / ((n+2j+1)(n+2j+3))`, valid for `k < 1`.
fn t_series(n: usize, k: f64) -> f64 {
    let z = -k * k;
    let mut sum = 0.0;
    let mut zp = 1.0;
    for j in 0..200 {
        let m = (n + 2 * j) as f64;
        let term = zp / ((m + 1.0) * (m + 3.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        zp *= z;
    }
    3.0 * sum
}

fn t_closed(n: usize, k: f64) -> f64 {
    let k2 = k * k;
    match n {
        0 => {
            let a = k.atan() / k;
            1.5 * ((1.0 + 1.0 / k2) * a - 1.0 / k2)
        }
        1 => {
            let b = (k2).ln_1p() / (2.0 * k2);
            1.5 * (b * (1.0 + 1.0 / k2) - 0.5 / k2)
        }
        2 => {
            let a = k.atan() / k;
            1.5 / k2 * ((1.0 - a) * (1.0 + 1.0 / k2) - 1.0 / 3.0)
        }
        _ => unreachable!("closed forms exist for n ≤ 2 only"),
    }
}

fn lorentz_breaks(k: f64) -> Vec<f64> {
    if k > 1.0 {
        vec![0.1 / k, 1.0 / k, 10.0 / k]
    } else {
        Vec::new()
    }
}

fn t_quadrature(n: usize, k: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    let k2 = k * k;
    let r = integrate_with_breaks(
        |t| 1.5 * t.powi(n as i32) * (1.0 - t * t) / (1.0 + k2 * t * t),
        0.0,
        1.0,
        &lorentz_breaks(k),
        spec,
    )?;
    Ok(KernelValue { value: r.value, est_error: r.error })
}

/// `T_n(k)`.
pub fn eval_t(n: usize, k: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    check_order(n)?;
    check_k(k)?;
    if k < SERIES_CUTOFF {
        return Ok(KernelValue::exact(t_series(n, k)));
    }
    if n <= 2 {
        return Ok(KernelValue::exact(t_closed(n, k)));
    }
    t_quadrature(n, k, spec)
}

/// `J_n(k, k₁)`; symmetric in its two wave numbers.
pub fn eval_j(n: usize, k: f64, k1: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    check_order(n)?;
    check_k(k)?;
    check_k(k1)?;
    if k1 == 0.0 {
        return eval_t(n, k, spec);
    }
    if k == 0.0 {
        return eval_t(n, k1, spec);
    }
    // order the pair so the result is bit-identical under exchange
    let (lo, hi) = if k <= k1 { (k, k1) } else { (k1, k) };
    let (a, b) = (lo * lo, hi * hi);
    let mut breaks = lorentz_breaks(hi);
    breaks.extend(lorentz_breaks(lo));
    let r = integrate_with_breaks(
        |t| {
            let t2 = t * t;
            1.5 * t.powi(n as i32) * (1.0 - t2) / ((1.0 + a * t2) * (1.0 + b * t2))
        },
        0.0,
        1.0,
        &breaks,
        spec,
    )?;
    Ok(KernelValue { value: r.value, est_error: r.error })
}

/// `L(k) = k² T₂(k)`.
pub fn eval_l(k: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    let t2 = eval_t(2, k, spec)?;
    let k2 = k * k;
    Ok(KernelValue { value: k2 * t2.value, est_error: k2 * t2.est_error })
}

/// `φ₀(k) = (8/15) T₃(k) − T₄(k)`, the regularized numerator of `E₀`.
pub fn eval_phi0(k: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    check_k(k)?;
    if k < SERIES_CUTOFF {
        let v = 8.0 / 15.0 * t_series(3, k) - t_series(4, k);
        return Ok(KernelValue::exact(v));
    }
    // k² φ₀ = T₂ − (8/15) T₁ holds exactly; no cancellation once k is O(1)
    let _ = spec;
    let num = t_closed(2, k) - 8.0 / 15.0 * t_closed(1, k);
    let v = num / (k * k);
    Ok(KernelValue { value: v, est_error: 8.0 * f64::EPSILON * (t_closed(2, k).abs() + t_closed(1, k).abs()) / (k * k) })
}

/// `S(k, k₁)`, the regularized transfer kernel of the higher orders.
pub fn eval_s(k: f64, k1: f64, spec: &QuadratureSpec) -> Result<KernelValue> {
    check_k(k)?;
    check_k(k1)?;
    if k1 == 0.0 {
        return Ok(KernelValue { value: 0.0, est_error: 0.0 });
    }
    if k <= 1.0 && k1 < SERIES_CUTOFF {
        let t3k = eval_t(3, k, spec)?;
        let t3k1 = eval_t(3, k1, spec)?;
        let j5 = eval_j(5, k, k1, spec)?;
        let k12 = k1 * k1;
        let value = k12 * (t3k.value * t3k1.value / T1_AT_ZERO - j5.value);
        let est_error = k12 * (t3k.est_error + t3k1.est_error + j5.est_error);
        return Ok(KernelValue { value, est_error });
    }
    let j3 = eval_j(3, k, k1, spec)?;
    let t1k = eval_t(1, k, spec)?;
    let t3k = eval_t(3, k, spec)?;
    let t1k1 = eval_t(1, k1, spec)?;
    let t3k1 = eval_t(3, k1, spec)?;
    let value = s_from_parts(k, k1, j3.value, t1k.value, t3k.value, t1k1.value, t3k1.value);
    let scale = if k > 1.0 { (k1 * k1) / (k * k) } else { 1.0 };
    let est_error = scale * (j3.est_error + t3k.est_error + t3k1.est_error + t1k.est_error + t1k1.est_error);
    Ok(KernelValue { value, est_error })
}

/// `S(k, k₁)` assembled from precomputed `J₃(k,k₁)`, `T₁`, `T₃`.
///
/// Uses `S = J₃ − T₃(k)T₁(k₁)/T₁(0)` for `k ≤ 1` and the equivalent
/// `(k₁²/k²)[J₃ − T₁(k)T₃(k₁)/T₁(0)]` above, which avoids cancelling the
/// leading `1/k²` terms at large `k`.
#[allow(clippy::too_many_arguments)]
pub fn s_from_parts(k: f64, k1: f64, j3: f64, t1k: f64, t3k: f64, t1k1: f64, t3k1: f64) -> f64 {
    if k1 == 0.0 {
        return 0.0;
    }
    if k <= 1.0 {
        j3 - t3k * t1k1 / T1_AT_ZERO
    } else {
        (k1 * k1) / (k * k) * (j3 - t1k * t3k1 / T1_AT_ZERO)
    }
}
