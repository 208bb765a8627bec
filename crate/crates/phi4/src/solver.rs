//! Fixed-point iteration `G ← TG` for the boundary 2-point function `G_{a0}`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{GeometricGrid, Sampled1D, DEFAULT_X1};
use crate::hilbert::HilbertMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub cutoff: f64,
    pub n: usize,
    pub x1: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Permit λ > 0, where the map is truncated (no homogeneous terms) and
    /// the resulting `G_ab` is known not to be symmetric.
    #[serde(default)]
    pub allow_positive: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda: -0.1,
            cutoff: 1e7,
            n: 2000,
            x1: DEFAULT_X1,
            tol: 1e-9,
            max_iter: 2000,
            damping: 0.0,
            allow_positive: false,
        }
    }
}

impl ModelParams {
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            allow_positive: self.allow_positive || lambda > 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return invalid(format!("cutoff must be positive, got {}", self.cutoff));
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if self.n < 3 {
            return invalid(format!("need n ≥ 3, got {}", self.n));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return invalid(format!("damping must lie in [0,1), got {}", self.damping));
        }
        if !self.lambda.is_finite() {
            return invalid("lambda must be finite");
        }
        if self.lambda > 0.0 && !self.allow_positive {
            return invalid("λ > 0 runs the truncated map; set allow_positive to request it");
        }
        Ok(())
    }

    pub fn is_experimental(&self) -> bool {
        self.lambda > 0.0
    }
}

/// Grid-dependent data shared by every solve on the same grid.
#[derive(Debug)]
pub struct Workspace {
    pub grid: Arc<GeometricGrid>,
    pub hilbert: HilbertMatrix,
    /// Trapezoid weights with the cutoff node removed.
    pub weights: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize, cutoff: f64, x1: f64) -> Result<Self> {
        let grid = Arc::new(GeometricGrid::new(n, cutoff, x1)?);
        let hilbert = HilbertMatrix::new(grid.clone());
        let mut weights = grid.trapezoid_weights();
        *weights.last_mut().unwrap() = 0.0;
        Ok(Self {
            grid,
            hilbert,
            weights,
        })
    }

    pub fn for_params(p: &ModelParams) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(p.n, p.cutoff, p.x1)?))
    }

    pub fn matches(&self, p: &ModelParams) -> bool {
        self.grid.n() == p.n && self.grid.cutoff() == p.cutoff && self.grid.x1() == p.x1
    }

    /// `H_p[G]` and `h(p) = (1 + λπ p H_p[G]) / G(p)`.
    pub fn h_field(&self, g: &[f64], lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(i) = g.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::NumericFailure(format!(
                "G must stay positive; G({})={}",
                self.grid.nodes()[i],
                g[i]
            )));
        }
        let hg = self.hilbert.apply(g);
        let q = self.grid.nodes();
        let h = (0..q.len())
            .map(|i| {
                let ah = if i == 0 { 0.0 } else { q[i] * hg[i] };
                (1.0 + lambda * PI * ah) / g[i]
            })
            .collect();
        Ok((hg, h))
    }

    /// The master map applied to nodal values of `G`.
    pub fn apply_t(&self, g: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let q = self.grid.nodes();
        if lambda == 0.0 {
            return Ok(q.iter().map(|b| 1.0 / (1.0 + b)).collect());
        }
        let (_, h) = self.h_field(g, lambda)?;
        self.apply_t_h(&h, lambda)
    }

    fn apply_t_h(&self, h: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let q = self.grid.nodes();
        let n = q.len();
        let w = &self.weights;
        let amp: Vec<f64> = q.iter().map(|p| lambda.abs() * PI * p).collect();
        let h0 = h[0];
        if !(h0 > 0.0) {
            return Err(Error::NumericFailure(format!("h(0)={h0} is not positive")));
        }
        let out: Vec<f64> = q
            .par_iter()
            .map(|&b| {
                // ∫₀^b dt ∫ dp [A² + (t+h)²]^{-1} = ∫ dp (τ₀ − τ_b)/A
                let mut s = w[0] * b / (h0 * (h0 + b));
                for p in 1..n - 1 {
                    let a = amp[p];
                    let hp = h[p];
                    s += w[p] * (a * b).atan2(a * a + hp * (hp + b)) / a;
                }
                (-lambda * s).exp() / (1.0 + b)
            })
            .collect();
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "exponent overflow in TG at b={}",
                q[i]
            )));
        }
        Ok(out)
    }

    /// `𝒴 = λ ∫ dp / [(λπp)² + h(p)²]`.
    pub fn wavefunction_y(&self, h: &[f64], lambda: f64) -> f64 {
        let q = self.grid.nodes();
        let lp = lambda * PI;
        (0..q.len())
            .map(|i| self.weights[i] / ((lp * q[i]).powi(2) + h[i] * h[i]))
            .sum::<f64>()
            * lambda
    }

    pub fn effective_coupling(&self, g: &[f64], hg: &[f64], y: f64, lambda: f64) -> f64 {
        let q = self.grid.nodes();
        let lp = lambda * PI;
        let one_y = 1.0 + y;
        // the integrand vanishes at p = 0
        let s: f64 = (1..q.len())
            .map(|i| {
                let (p, gp) = (q[i], g[i]);
                let num = ((1.0 - gp) / (one_y * p) - gp) * gp;
                let den = (lp * p * gp).powi(2) + (1.0 + lp * p * hg[i]).powi(2);
                self.weights[i] * num / den
            })
            .sum();
        lambda * (1.0 + lambda / one_y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeReport {
    /// Iterations whose output left the cone (normalisation, positivity, or the
    /// side of `1/(1+b)` fixed by the sign of λ).
    pub violations: usize,
    /// Whether the final iterate is non-increasing on the grid.
    pub monotone: bool,
}

#[derive(Debug, Clone)]
pub struct BoundarySolution {
    pub params: ModelParams,
    pub g: Sampled1D,
    pub hg: Sampled1D,
    pub h: Sampled1D,
    pub y: f64,
    pub lambda_eff: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub experimental: bool,
    pub cone: ConeReport,
    pub workspace: Arc<Workspace>,
}

impl BoundarySolution {
    pub fn grid(&self) -> &Arc<GeometricGrid> {
        self.g.grid()
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    /// Assemble all cached fields for given nodal `G`.
    pub fn from_values(
        params: ModelParams,
        ws: Arc<Workspace>,
        g: Vec<f64>,
        residual: f64,
        iterations: usize,
        converged: bool,
        cone: ConeReport,
    ) -> Result<Self> {
        let lambda = params.lambda;
        let (hg, h) = ws.h_field(&g, lambda)?;
        let y = if lambda == 0.0 {
            0.0
        } else {
            ws.wavefunction_y(&h, lambda)
        };
        let lambda_eff = if lambda == 0.0 {
            0.0
        } else {
            ws.effective_coupling(&g, &hg, y, lambda)
        };
        let grid = ws.grid.clone();
        Ok(Self {
            experimental: params.is_experimental(),
            g: Sampled1D::linear(grid.clone(), g)?,
            hg: Sampled1D::linear(grid.clone(), hg)?,
            h: Sampled1D::linear(grid, h)?,
            y,
            lambda_eff,
            residual,
            iterations,
            converged,
            cone,
            params,
            workspace: ws,
        })
    }

    /// `sup |TG − G|` recomputed from scratch.
    pub fn recompute_residual(&self) -> Result<f64> {
        let tg = self.workspace.apply_t(self.g.values(), self.lambda())?;
        Ok(sup_diff(&tg, self.g.values()))
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn in_cone(tg: &[f64], q: &[f64], lambda: f64) -> bool {
    if tg[0] != 1.0 {
        return false;
    }
    tg.iter().zip(q).all(|(&v, &b)| {
        let free = 1.0 / (1.0 + b);
        let slack = 1e-14 * free;
        v > 0.0
            && if lambda < 0.0 {
                v >= free - slack
            } else {
                v <= free + slack
            }
    })
}

fn is_monotone(g: &[f64]) -> bool {
    g.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

/// One application of the master map.
#[allow(non_snake_case)]
pub fn apply_T(g: &Sampled1D, params: &ModelParams) -> Result<Sampled1D> {
    params.validate()?;
    if g.values()[0] != 1.0 {
        return invalid("input must satisfy G(0) = 1");
    }
    let ws = Workspace::new(g.grid().n(), g.grid().cutoff(), g.grid().x1())?;
    let out = ws.apply_t(g.values(), params.lambda)?;
    Sampled1D::linear(g.grid().clone(), out)
}

pub fn solve_boundary(params: &ModelParams, init: Option<&Sampled1D>) -> Result<BoundarySolution> {
    params.validate()?;
    let ws = Workspace::for_params(params)?;
    solve_with(params, ws, init.map(|s| s.values()))
}

/// Iterate on an existing workspace, optionally warm-started from nodal values.
pub fn solve_with(
    params: &ModelParams,
    ws: Arc<Workspace>,
    init: Option<&[f64]>,
) -> Result<BoundarySolution> {
    params.validate()?;
    if !ws.matches(params) {
        return invalid("workspace grid does not match the parameters");
    }
    let q = ws.grid.nodes();
    let mut g: Vec<f64> = match init {
        Some(v) if v.len() == q.len() => v.to_vec(),
        Some(v) => {
            return invalid(format!(
                "initial guess has {} values, grid {}",
                v.len(),
                q.len()
            ))
        }
        None => q.iter().map(|b| 1.0 / (1.0 + b)).collect(),
    };
    let lambda = params.lambda;
    let d = params.damping;
    let mut violations = 0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let tg = ws.apply_t(&g, lambda)?;
        iterations += 1;
        if !in_cone(&tg, q, lambda) {
            violations += 1;
        }
        residual = sup_diff(&tg, &g);
        if residual <= params.tol {
            converged = true;
            break;
        }
        for (gi, ti) in g.iter_mut().zip(&tg) {
            *gi = (1.0 - d) * ti + d * *gi;
        }
    }
    let cone = ConeReport {
        violations,
        monotone: is_monotone(&g),
    };
    BoundarySolution::from_values(params.clone(), ws, g, residual, iterations, converged, cone)
}
