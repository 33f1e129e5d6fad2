//! Discretization of the wave-number half-line.
//!
//! The grid is a Clenshaw–Curtis panel on `k ∈ [0, 1]` followed by
//! Clenshaw–Curtis panels in `u = ln k` out to `k_max`. Spectral densities
//! decay like `ln k / k²`, which is smooth in `u`, so log panels of unit
//! width resolve the decades cheaply. Shared panel endpoints are merged,
//! keeping every weight positive and `nodes[0] = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{clenshaw_curtis, QuadratureSpec};

pub const DEFAULT_K_MAX: f64 = 1e5;
const MIN_NODES: usize = 64;

/// Node range `first..=last` of one Clenshaw–Curtis panel, either in `k` or
/// in `ln k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Panel {
    pub first: usize,
    pub last: usize,
    pub log: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    k_max: f64,
    panels: Vec<Panel>,
}

impl KGrid {
    /// Grid sized from `spec.semi_infinite_nodes` with the default truncation point.
    pub fn from_spec(spec: &QuadratureSpec) -> Result<Self> {
        Self::with_k_max(DEFAULT_K_MAX, spec.semi_infinite_nodes)
    }

    /// Grid reaching `k_max` with at least `target_nodes` nodes.
    pub fn with_k_max(k_max: f64, target_nodes: usize) -> Result<Self> {
        if !(k_max.is_finite() && k_max > 2.0) {
            return Err(Error::InvalidInput(format!("k_max must exceed 2, got {k_max}")));
        }
        let panels = k_max.ln().ceil() as usize;
        let target = target_nodes.max(MIN_NODES);
        // core panel carries 2m intervals, each log panel m
        let mut m = 8usize;
        while 2 * m + 1 + panels * m < target {
            m += 2;
        }
        Self::build(k_max, 2 * m, m, panels)
    }

    pub fn build(k_max: f64, core_intervals: usize, panel_intervals: usize, panels: usize) -> Result<Self> {
        if core_intervals < 2 || core_intervals % 2 == 1 || panel_intervals < 2 || panel_intervals % 2 == 1 {
            return Err(Error::InvalidInput("Clenshaw–Curtis panels need an even interval count".into()));
        }
        if panels == 0 || !(k_max > 1.0) {
            return Err(Error::InvalidInput("grid needs at least one log panel beyond k = 1".into()));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut panel_list = vec![Panel { first: 0, last: core_intervals, log: false }];

        let (x, w) = clenshaw_curtis(core_intervals);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(0.5 * (xi + 1.0));
            weights.push(0.5 * wi);
        }
        nodes[0] = 0.0;
        nodes[core_intervals] = 1.0;

        let (x, w) = clenshaw_curtis(panel_intervals);
        let u_max = k_max.ln();
        let width = u_max / panels as f64;
        for p in 0..panels {
            let first = core_intervals + p * panel_intervals;
            panel_list.push(Panel { first, last: first + panel_intervals, log: true });
            let u0 = width * p as f64;
            for (j, (xi, wi)) in x.iter().zip(&w).enumerate() {
                let u = if j == panel_intervals {
                    // exact panel edges
                    width * (p + 1) as f64
                } else {
                    u0 + 0.5 * width * (xi + 1.0)
                };
                let k = if p + 1 == panels && j == panel_intervals { k_max } else { u.exp() };
                let wk = 0.5 * width * wi * k;
                if j == 0 {
                    *weights.last_mut().expect("core panel present") += wk;
                } else {
                    nodes.push(k);
                    weights.push(wk);
                }
            }
        }
        let grid = Self { nodes, weights, k_max, panels: panel_list };
        grid.check()?;
        Ok(grid)
    }

    fn check(&self) -> Result<()> {
        let ok = self.nodes.len() == self.weights.len()
            && self.nodes.len() >= MIN_NODES
            && self.nodes[0] == 0.0
            && self.nodes.windows(2).all(|w| w[0] < w[1])
            && self.weights.iter().all(|&w| w > 0.0)
            && self.panels.last().map(|p| p.last + 1) == Some(self.nodes.len());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("k-grid violates its invariants".into()))
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(k_i)`, summed in node order.
    pub fn integrate_samples(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&k, w)| w * f(k)).sum()
    }

    /// Samples on a grid with every node interval split into `factor`
    /// pieces, the new values interpolated by the polynomial through each
    /// panel's Chebyshev points (in `k` or `ln k`).
    pub fn refine(&self, values: &[f64], factor: usize) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(values.len(), self.nodes.len());
        let factor = factor.max(1);
        let mut knots = vec![self.nodes[0]];
        let mut out = vec![values[0]];
        for p in &self.panels {
            let map = |k: f64| if p.log { k.ln() } else { k };
            let t: Vec<f64> = self.nodes[p.first..=p.last].iter().map(|&k| map(k)).collect();
            let f = &values[p.first..=p.last];
            let m = t.len() - 1;
            // Chebyshev–Lobatto barycentric weights
            let w: Vec<f64> = (0..=m)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    if j == 0 || j == m {
                        0.5 * sign
                    } else {
                        sign
                    }
                })
                .collect();
            for j in 0..m {
                for s in 1..factor {
                    let tt = t[j] + (t[j + 1] - t[j]) * s as f64 / factor as f64;
                    let (mut num, mut den) = (0.0, 0.0);
                    for i in 0..=m {
                        let c = w[i] / (tt - t[i]);
                        num += c * f[i];
                        den += c;
                    }
                    knots.push(if p.log { tt.exp() } else { tt });
                    out.push(num / den);
                }
                knots.push(self.nodes[p.first + j + 1]);
                out.push(f[j + 1]);
            }
        }
        (knots, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_invariants() {
        let g = KGrid::from_spec(&QuadratureSpec::default()).unwrap();
        assert!(g.len() >= 200);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(*g.nodes().last().unwrap(), DEFAULT_K_MAX);
        assert!(g.weights().iter().all(|&w| w > 0.0));
        let p = g.panels();
        assert_eq!(p[0].first, 0);
        assert!(p.windows(2).all(|w| w[0].last == w[1].first));
    }

    #[test]
    fn integrates_algebraic_decay() {
        let g = KGrid::from_spec(&QuadratureSpec::default()).unwrap();
        let k_max = g.k_max();
        // ∫₀^K dk/(1+k²) = atan K
        let v = g.integrate(|k| 1.0 / (1.0 + k * k));
        assert!((v - k_max.atan()).abs() < 1e-12, "{v}");
        let v = g.integrate(|k| (-k).exp());
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_interpolates_spectrally() {
        let g = KGrid::from_spec(&QuadratureSpec::default()).unwrap();
        let f = |k: f64| (1.0 + k.ln_1p()) / (1.0 + k * k);
        let v: Vec<f64> = g.nodes().iter().map(|&k| f(k)).collect();
        let (knots, vals) = g.refine(&v, 4);
        assert_eq!(knots.len(), 4 * (g.len() - 1) + 1);
        assert!(knots.windows(2).all(|w| w[0] < w[1]));
        for (k, y) in knots.iter().zip(&vals) {
            assert!((y - f(*k)).abs() < 1e-12 * (1.0 + f(*k).abs()), "k={k}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KGrid::with_k_max(1.0, 100).is_err());
        assert!(KGrid::build(100.0, 3, 8, 4).is_err());
    }
}
