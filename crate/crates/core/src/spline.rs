//! Clamped cubic spline with exact cosine moments.

use serde::Serialize;

use crate::quadrature::gauss_legendre;

#[derive(Clone, Debug, Serialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    /// Spline through `(x, y)` with prescribed end slopes.
    pub fn clamped(x: &[f64], y: &[f64], slope_start: f64, slope_end: f64) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n, "spline needs ≥ 2 matching samples");
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // tridiagonal system for the knot second derivatives
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut r = vec![0.0; n];
        b[0] = h[0] / 3.0;
        c[0] = h[0] / 6.0;
        r[0] = (y[1] - y[0]) / h[0] - slope_start;
        for i in 1..n - 1 {
            a[i] = h[i - 1] / 6.0;
            b[i] = (h[i - 1] + h[i]) / 3.0;
            c[i] = h[i] / 6.0;
            r[i] = (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1];
        }
        a[n - 1] = h[n - 2] / 6.0;
        b[n - 1] = h[n - 2] / 3.0;
        r[n - 1] = slope_end - (y[n - 1] - y[n - 2]) / h[n - 2];

        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            r[i] -= w * r[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = r[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (r[i] - c[i] * m[i + 1]) / b[i];
        }
        Self { x: x.to_vec(), y: y.to_vec(), m }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    fn segment(&self, k: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&k)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Local cubic `y + b t + c t² + d t³` on segment `i`, with `t = k − x_i`.
    fn coefficients(&self, i: usize) -> [f64; 4] {
        let h = self.x[i + 1] - self.x[i];
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let b = (self.y[i + 1] - self.y[i]) / h - h * (2.0 * m0 + m1) / 6.0;
        [self.y[i], b, 0.5 * m0, (m1 - m0) / (6.0 * h)]
    }

    /// Value at `k`, extrapolating the end cubics outside the knot range.
    pub fn eval(&self, k: f64) -> f64 {
        let i = self.segment(k);
        let [y0, b, c, d] = self.coefficients(i);
        let t = k - self.x[i];
        y0 + t * (b + t * (c + t * d))
    }

    /// `∫_{x₀}^{x_N} cos(x k) s(k) dk`, exact for the piecewise cubic.
    pub fn cosine_moment(&self, x: f64) -> f64 {
        let (gx, gw) = gl8();
        let mut total = 0.0;
        for i in 0..self.x.len() - 1 {
            let (k0, k1) = (self.x[i], self.x[i + 1]);
            let h = k1 - k0;
            let [y0, b, c, d] = self.coefficients(i);
            let p = |t: f64| y0 + t * (b + t * (c + t * d));
            if x * h <= 0.3 {
                // 8-point Gauss is exact for x = 0 and accurate to (xh)^16 otherwise
                let mut s = 0.0;
                for (g, w) in gx.iter().zip(gw.iter()) {
                    let t = 0.5 * h * (g + 1.0);
                    s += w * p(t) * (x * (k0 + t)).cos();
                }
                total += 0.5 * h * s;
            } else {
                let anti = |t: f64| {
                    let k = k0 + t;
                    let (sn, cs) = (x * k).sin_cos();
                    let p0 = p(t);
                    let p1 = b + t * (2.0 * c + 3.0 * d * t);
                    let p2 = 2.0 * c + 6.0 * d * t;
                    let p3 = 6.0 * d;
                    p0 * sn / x + p1 * cs / (x * x) - p2 * sn / (x * x * x) - p3 * cs / (x * x * x * x)
                };
                total += anti(h) - anti(0.0);
            }
        }
        total
    }

    /// `∫_{x₀}^{x_N} s(k) dk`.
    pub fn integral(&self) -> f64 {
        self.cosine_moment(0.0)
    }
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}
