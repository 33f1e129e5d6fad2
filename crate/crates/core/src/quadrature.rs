//! Numerical integration primitives.
//!
//! Everything downstream (kernels, Fermi moments, spectral transforms) goes
//! through the adaptive 21-point Gauss–Kronrod integrator defined here, so the
//! tolerance contract of [`QuadratureSpec`] is enforced in one place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and node budgets for all numerical integration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Target node count for the mapped `[0, ∞)` spectral grid.
    pub semi_infinite_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
            semi_infinite_nodes: 200,
        }
    }
}

impl QuadratureSpec {
    /// Same spec with both tolerances set to `tol`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.abs_tol.is_finite()
            && self.rel_tol.is_finite()
            && self.max_subdivisions >= 1
            && self.semi_infinite_nodes >= 16;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "quadrature spec violates invariants: {self:?}"
            )))
        }
    }

    /// Acceptance threshold for an integral of magnitude `value`.
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integral value with its absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_272_008_390,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Single application of the 21-point Kronrod rule on `[a, b]`.
pub fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Integral {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    let mut fvals = [(0.0, 0.0); 10];
    for (j, slot) in fvals.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
        *slot = (f1, f2);
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for (j, (f1, f2)) in fvals.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_sum);
    }
    Integral { value, error: err }
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// `breaks` are interior points where the integrand is known to change
/// character; they seed the initial partition.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges = vec![lo];
    let mut interior: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    edges.extend(interior);
    edges.push(hi);

    let mut segments: Vec<Segment> = edges
        .windows(2)
        .map(|w| {
            let r = gauss_kronrod_21(&f, w[0], w[1]);
            Segment { a: w[0], b: w[1], value: r.value, error: r.error }
        })
        .collect();

    let limit = spec.max_subdivisions.max(segments.len());
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature produced a non-finite value".into(),
                estimate: err,
                tolerance: spec.target(total),
            });
        }
        if err <= spec.target(total) {
            return Ok(Integral { value: sign * total, error: err });
        }
        if segments.len() >= limit {
            return Err(Error::NonConvergence {
                what: format!("adaptive quadrature on [{lo}, {hi}]"),
                estimate: err,
                tolerance: spec.target(total),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty partition");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval exhausted at machine precision; accept as is
            let total: f64 = segments.iter().map(|s| s.value).sum::<f64>() + s.value;
            let err: f64 = segments.iter().map(|s| s.error).sum::<f64>() + s.error;
            return Err(Error::NonConvergence {
                what: "adaptive quadrature hit machine resolution".into(),
                estimate: err,
                tolerance: spec.target(total),
            });
        }
        let left = gauss_kronrod_21(&f, s.a, mid);
        let right = gauss_kronrod_21(&f, mid, s.b);
        segments.push(Segment { a: s.a, b: mid, value: left.value, error: left.error });
        segments.push(Segment { a: mid, b: s.b, value: right.value, error: right.error });
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    integrate_with_breaks(f, a, b, &[], spec)
}

/// `∫_a^b f(k) dk` for `0 < a < b` evaluated in the variable `s = ln k`.
///
/// Suited to algebraically decaying integrands spread over many decades.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    debug_assert!(a > 0.0 && b > a);
    let (la, lb) = (a.ln(), b.ln());
    let n = ((lb - la).ceil() as usize).max(1);
    let breaks: Vec<f64> = (1..n).map(|i| la + (lb - la) * i as f64 / n as f64).collect();
    integrate_with_breaks(
        |s| {
            let k = s.exp();
            f(k) * k
        },
        la,
        lb,
        &breaks,
        spec,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|v| h * v).collect(),
    )
}

/// Clenshaw–Curtis rule with `n` intervals on `[-1, 1]`, ascending, endpoints included.
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2 && n % 2 == 0, "Clenshaw–Curtis order must be even and ≥ 2");
    let pi = std::f64::consts::PI;
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for j in (0..=n).rev() {
        let theta = j as f64 * pi / n as f64;
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        let mut s = 0.0;
        for k in 1..=n / 2 {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
        }
        nodes.push(theta.cos());
        weights.push(c / n as f64 * (1.0 - s));
    }
    // exact symmetry and endpoints
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    if n % 2 == 0 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Numerically stable `ln(1 + e^y)`.
pub fn ln_1p_exp(y: f64) -> f64 {
    if y > 35.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// Wynn epsilon extrapolation of a sequence of partial sums.
///
/// Returns the most recent extrapolated limit together with the difference
/// between the last two estimates, used as an error indicator.
pub fn wynn_epsilon(partial: &[f64]) -> (f64, f64) {
    let n = partial.len();
    if n < 3 {
        let last = partial.last().copied().unwrap_or(0.0);
        let prev = if n >= 2 { partial[n - 2] } else { 0.0 };
        return (last, (last - prev).abs());
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut estimates = Vec::new();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let v = if d == 0.0 { f64::INFINITY } else { prev[i + 1] + 1.0 / d };
            next.push(v);
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    estimates.push(v);
                }
            }
        }
    }
    match estimates.len() {
        0 => {
            let last = partial[n - 1];
            (last, (last - partial[n - 2]).abs())
        }
        _ => {
            let best = *estimates.last().unwrap();
            let base = partial[n - 1];
            // compare highest-order estimate with the next lower one (or the raw sum)
            let other = if estimates.len() >= 2 { estimates[estimates.len() - 2] } else { base };
            (best, (best - other).abs())
        }
    }
}
