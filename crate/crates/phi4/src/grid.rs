//! Geometric grids on `[0, Λ²]` and functions sampled on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest positive node used when none is given.
pub const DEFAULT_X1: f64 = 1e-2;

/// A zero node followed by a geometric ladder `x1 * g^(i-1)` ending at the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGrid {
    cutoff: f64,
    x1: f64,
    nodes: Vec<f64>,
}

impl GeometricGrid {
    pub fn new(n: usize, cutoff: f64, x1: f64) -> Result<Self> {
        if n < 3 {
            return invalid(format!("grid needs at least 3 nodes, got {n}"));
        }
        if !(x1 > 0.0 && x1 < cutoff && cutoff.is_finite()) {
            return invalid(format!(
                "need 0 < x1 < cutoff, got x1={x1}, cutoff={cutoff}"
            ));
        }
        let g = (cutoff / x1).powf(1.0 / (n - 2) as f64);
        let mut nodes = Vec::with_capacity(n);
        nodes.push(0.0);
        for i in 0..n - 1 {
            nodes.push(x1 * g.powi(i as i32));
        }
        nodes[1] = x1;
        nodes[n - 1] = cutoff;
        Ok(Self { cutoff, x1, nodes })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Index `i` with `nodes[i] <= x <= nodes[i+1]`, clamped to the last segment.
    pub fn segment(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Trapezoid weights for `∫₀^{Λ²}` over the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let mut w = vec![0.0; n];
        for j in 0..n - 1 {
            let d = self.nodes[j + 1] - self.nodes[j];
            w[j] += 0.5 * d;
            w[j + 1] += 0.5 * d;
        }
        w
    }

    /// Every `stride`-th node plus the node before the cutoff, as `m` indices.
    pub fn decimate(&self, m: usize) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        if m < 2 || m > n - 1 {
            return invalid(format!("decimation m={m} must lie in [2, {}]", n - 1));
        }
        // The cutoff node itself is never reported.
        let last = n - 2;
        let mut idx: Vec<usize> = (0..m)
            .map(|k| ((k as f64) * last as f64 / (m - 1) as f64).round() as usize)
            .collect();
        idx.dedup();
        Ok(idx)
    }
}

pub fn build_grid(n: usize, cutoff: f64, x1: f64) -> Result<GeometricGrid> {
    GeometricGrid::new(n, cutoff, x1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interp {
    PiecewiseLinear,
    CubicSpline,
}

/// Values on the nodes of a shared grid.
#[derive(Debug, Clone)]
pub struct Sampled1D {
    grid: Arc<GeometricGrid>,
    values: Vec<f64>,
    rule: Interp,
    // second derivatives for the natural spline
    m2: Option<Vec<f64>>,
}

impl Sampled1D {
    pub fn new(grid: Arc<GeometricGrid>, values: Vec<f64>, rule: Interp) -> Result<Self> {
        if values.len() != grid.n() {
            return invalid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.n()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "non-finite sample at node {i} (a={})",
                grid.nodes()[i]
            )));
        }
        let m2 = match rule {
            Interp::PiecewiseLinear => None,
            Interp::CubicSpline => Some(natural_spline(grid.nodes(), &values)),
        };
        Ok(Self {
            grid,
            values,
            rule,
            m2,
        })
    }

    pub fn linear(grid: Arc<GeometricGrid>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, Interp::PiecewiseLinear)
    }

    pub fn from_fn(grid: Arc<GeometricGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::linear(grid, values)
    }

    pub fn grid(&self) -> &Arc<GeometricGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rule(&self) -> Interp {
        self.rule
    }

    pub fn with_rule(&self, rule: Interp) -> Self {
        Self::new(self.grid.clone(), self.values.clone(), rule).expect("values already checked")
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let cutoff = self.grid.cutoff();
        if !(0.0..=cutoff).contains(&x) {
            return Err(Error::Domain(format!("x={x} outside [0, {cutoff}]")));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let q = self.grid.nodes();
        let j = self.grid.segment(x);
        let (x0, x1) = (q[j], q[j + 1]);
        if x == x0 {
            return self.values[j];
        }
        if x == x1 {
            return self.values[j + 1];
        }
        let d = x1 - x0;
        let t = (x - x0) / d;
        let lin = (1.0 - t) * self.values[j] + t * self.values[j + 1];
        match &self.m2 {
            None => lin,
            Some(m) => {
                let a = 1.0 - t;
                lin + ((a * a * a - a) * m[j] + (t * t * t - t) * m[j + 1]) * d * d / 6.0
            }
        }
    }

    /// Resample onto another grid with this function's rule.
    pub fn resample(&self, grid: Arc<GeometricGrid>) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .map(|&x| self.eval_unchecked(x.min(self.grid.cutoff())))
            .collect();
        Self::new(grid, values, self.rule)
    }
}

/// Second derivatives of the natural cubic spline through `(x, y)`.
fn natural_spline(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations.
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let cc = h1 / 6.0;
        let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}
