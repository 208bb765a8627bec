//! Finite Hilbert transform `H_a[f] = (1/π) PV∫₀^{Λ²} f(q)/(q−a) dq` of piecewise-linear data,
//! and Carleman-type singular integral equations built on it.
//!
//! Each linear segment is integrated in closed form. The logarithms of the two segments
//! flanking a node cancel exactly when `ln|0|` is read as 0, which is also the finite part
//! used at the two endpoints.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{GeometricGrid, Interp, Sampled1D};

#[inline]
fn ln_abs(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().ln()
    }
}

/// Weights `w` with `H_a[f] = Σ_j w_j f_j` for the linear interpolant of `f` on `nodes`.
pub fn hilbert_weights(nodes: &[f64], a: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut row = vec![0.0; n];
    let mut lu = ln_abs(nodes[0] - a);
    for j in 0..n - 1 {
        let u = nodes[j] - a;
        let v = nodes[j + 1] - a;
        let lv = ln_abs(v);
        let r = (lv - lu) / (nodes[j + 1] - nodes[j]);
        row[j] += v * r - 1.0;
        row[j + 1] += 1.0 - u * r;
        lu = lv;
    }
    for w in &mut row {
        *w /= PI;
    }
    row
}

fn dot(w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(f).map(|(a, b)| a * b).sum()
}

fn check_linear(f: &Sampled1D) -> Result<()> {
    if f.rule() != Interp::PiecewiseLinear {
        return invalid("Hilbert transform needs piecewise-linear data");
    }
    Ok(())
}

/// Principal value at a single point.
///
/// Off the open interval the transform diverges unless `f` vanishes at that endpoint.
pub fn hilbert_at(f: &Sampled1D, a: f64) -> Result<f64> {
    check_linear(f)?;
    let g = f.grid();
    let cutoff = g.cutoff();
    let v = f.values();
    if a < 0.0 || a > cutoff {
        return Err(Error::Domain(format!("a={a} outside [0, {cutoff}]")));
    }
    if (a == 0.0 && v[0] != 0.0) || (a == cutoff && v[v.len() - 1] != 0.0) {
        return Err(Error::Domain(format!(
            "logarithmic endpoint divergence at a={a}; use a_hilbert_at"
        )));
    }
    Ok(dot(&hilbert_weights(g.nodes(), a), v))
}

/// `a·H_a[f]`, continuous down to `a = 0` where it vanishes.
pub fn a_hilbert_at(f: &Sampled1D, a: f64) -> Result<f64> {
    check_linear(f)?;
    let cutoff = f.grid().cutoff();
    if a == 0.0 {
        return Ok(0.0);
    }
    if !(a > 0.0 && a < cutoff) {
        return Err(Error::Domain(format!("a={a} outside (0, {cutoff})")));
    }
    Ok(a * dot(&hilbert_weights(f.grid().nodes(), a), f.values()))
}

/// Dense transform matrix on a grid; row `i` gives `H` at node `i`.
///
/// The endpoint rows hold the finite part (log divergence dropped).
#[derive(Debug, Clone)]
pub struct HilbertMatrix {
    grid: Arc<GeometricGrid>,
    w: Vec<f64>,
}

impl HilbertMatrix {
    pub fn new(grid: Arc<GeometricGrid>) -> Self {
        let n = grid.n();
        let nodes = grid.nodes();
        let mut w = vec![0.0; n * n];
        w.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            row.copy_from_slice(&hilbert_weights(nodes, nodes[i]));
        });
        Self { grid, w }
    }

    pub fn grid(&self) -> &Arc<GeometricGrid> {
        &self.grid
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n();
        &self.w[i * n..(i + 1) * n]
    }

    pub fn apply_row(&self, i: usize, f: &[f64]) -> f64 {
        dot(self.row(i), f)
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        assert_eq!(f.len(), n);
        self.w.par_chunks(n).map(|row| dot(row, f)).collect()
    }

    /// `a·H_a[f]` at every node, 0 at the origin.
    pub fn apply_scaled(&self, f: &[f64]) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let mut out = self.apply(f);
        out[0] = 0.0;
        for (o, &a) in out.iter_mut().zip(nodes).skip(1) {
            *o *= a;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct HilbertField {
    pub input: Sampled1D,
    /// `H` at every node; the two endpoint entries are finite parts, see [`HilbertField::endpoint_flags`].
    pub output: Sampled1D,
}

impl HilbertField {
    /// Whether the first and last entries of `output` are regularised finite parts
    /// rather than convergent principal values.
    pub fn endpoint_flags(&self) -> [bool; 2] {
        let v = self.input.values();
        [v[0] != 0.0, v[v.len() - 1] != 0.0]
    }

    /// The product form `a·H_a[f]`, exact zero at the origin.
    pub fn scaled(&self) -> Vec<f64> {
        let nodes = self.output.grid().nodes();
        let mut out: Vec<f64> = self
            .output
            .values()
            .iter()
            .zip(nodes)
            .map(|(h, a)| h * a)
            .collect();
        out[0] = 0.0;
        out
    }
}

pub fn hilbert_field(f: &Sampled1D) -> Result<HilbertField> {
    check_linear(f)?;
    let nodes = f.grid().nodes();
    let v = f.values();
    let out: Vec<f64> = nodes
        .par_iter()
        .map(|&a| dot(&hilbert_weights(nodes, a), v))
        .collect();
    Ok(HilbertField {
        input: f.clone(),
        output: Sampled1D::linear(f.grid().clone(), out)?,
    })
}

/// `e^{H_a[τ]} cos τ(a) − H_a[e^{H[τ]} sin τ] − 1` at every node.
pub fn tricomi_residual(hm: &HilbertMatrix, tau: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = hm.apply(tau).into_iter().map(f64::exp).collect();
    let s: Vec<f64> = e.iter().zip(tau).map(|(e, t)| e * t.sin()).collect();
    let hs = hm.apply(&s);
    e.iter()
        .zip(tau)
        .zip(hs)
        .map(|((e, t), hs)| e * t.cos() - hs - 1.0)
        .collect()
}

/// Pieces of the closed-form solution of `c(a)·y(a) − λπ H_a[y] = f(a)`.
///
/// With `ϑ(a) ∈ [0, π]` the angle with `cot ϑ = c(a)/(λπ)` and `ψ = π − ϑ`, every solution reads
/// `y = P(a)·(N(a) + C)` where `P = sin ϑ e^{−H[ψ]}/(λπa)` and
/// `N = a f e^{H[ψ]} cos ϑ + H_a[e^{H[ψ]} q f sin ϑ]`.
#[derive(Debug, Clone)]
pub struct CarlemanSolution {
    grid: Arc<GeometricGrid>,
    /// `P` at every node; infinite at the origin in the unscaled form.
    pub prefactor: Vec<f64>,
    /// `N` at every node.
    pub numerator: Vec<f64>,
    pub theta: Vec<f64>,
}

impl CarlemanSolution {
    /// `y = P·(N + C)`. Fails when the result is not finite on the whole grid.
    pub fn with_constant(&self, c: f64) -> Result<Sampled1D> {
        let n = self.prefactor.len();
        let mut y: Vec<f64> = self
            .prefactor
            .iter()
            .zip(&self.numerator)
            .map(|(p, m)| p * (m + c))
            .collect();
        if !y[0].is_finite() && self.numerator[0] + c == 0.0 && n > 2 {
            // regular at the origin: continue linearly from the first two positive nodes
            let q = self.grid.nodes();
            y[0] = y[1] - (y[2] - y[1]) * q[1] / (q[2] - q[1]);
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "solution with C={c} is singular at a={}",
                self.grid.nodes()[i]
            )));
        }
        Sampled1D::linear(self.grid.clone(), y)
    }

    /// The `C = 0` particular solution.
    pub fn particular(&self) -> Result<Sampled1D> {
        self.with_constant(0.0)
    }

    /// The constant that removes the singularity at the origin.
    pub fn regular_constant(&self) -> f64 {
        -self.numerator[0]
    }

    /// The homogeneous solution `P`, where finite.
    pub fn homogeneous(&self) -> &[f64] {
        &self.prefactor
    }
}

fn carleman_parts(
    hm: &HilbertMatrix,
    coeff: &[f64],
    f: &[f64],
    lambda: f64,
    scaled: bool,
) -> Result<CarlemanSolution> {
    let grid = hm.grid().clone();
    let q = grid.nodes();
    let lp = lambda * PI;
    let theta: Vec<f64> = q
        .iter()
        .zip(coeff)
        .map(|(&a, &c)| {
            let t = if scaled {
                // cot ϑ = (c/a)/(λπ) = c/(λπa)
                if a == 0.0 {
                    if lambda < 0.0 {
                        PI
                    } else {
                        0.0
                    }
                } else {
                    (lp * a).atan2(c)
                }
            } else {
                lp.atan2(c)
            };
            if t < 0.0 {
                t + PI
            } else {
                t
            }
        })
        .collect();
    let psi: Vec<f64> = theta.iter().map(|t| PI - t).collect();
    let hpsi = hm.apply(&psi);
    let e: Vec<f64> = hpsi.iter().map(|x| x.exp()).collect();
    if let Some(i) = e.iter().position(|v| !v.is_finite() || *v == 0.0) {
        return Err(Error::NumericFailure(format!(
            "exp(H[ψ]) out of range at a={}",
            q[i]
        )));
    }
    let g: Vec<f64> = (0..q.len())
        .map(|i| e[i] * q[i] * f[i] * theta[i].sin())
        .collect();
    let hg = hm.apply(&g);
    let numerator: Vec<f64> = (0..q.len())
        .map(|i| q[i] * f[i] * e[i] * theta[i].cos() + hg[i])
        .collect();
    let prefactor: Vec<f64> = (0..q.len())
        .map(|i| {
            if q[i] == 0.0 {
                if scaled {
                    lambda.signum() / coeff[0]
                } else if theta[0].sin() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                theta[i].sin() / (lp * q[i] * e[i])
            }
        })
        .collect();
    Ok(CarlemanSolution {
        grid,
        prefactor,
        numerator,
        theta,
    })
}

fn same_grid(hm: &HilbertMatrix, fs: &[&Sampled1D]) -> Result<()> {
    for f in fs {
        check_linear(f)?;
        if f.grid().as_ref() != hm.grid().as_ref() {
            return invalid("inputs live on different grids");
        }
    }
    Ok(())
}

/// Solution pieces of `h·y − λπ H[y] = f`.
pub fn carleman_parts_with(
    hm: &HilbertMatrix,
    h: &Sampled1D,
    f: &Sampled1D,
    lambda: f64,
) -> Result<CarlemanSolution> {
    same_grid(hm, &[h, f])?;
    carleman_parts(hm, h.values(), f.values(), lambda, false)
}

/// Solution pieces of `(k(a)/a)·y − λπ H[y] = f`, for coefficients with a simple pole at the origin.
pub fn carleman_parts_scaled(
    hm: &HilbertMatrix,
    k: &Sampled1D,
    f: &Sampled1D,
    lambda: f64,
) -> Result<CarlemanSolution> {
    same_grid(hm, &[k, f])?;
    if lambda != 0.0 && k.values()[0] == 0.0 {
        return invalid("scaled coefficient must not vanish at the origin");
    }
    carleman_parts(hm, k.values(), f.values(), lambda, true)
}

/// The `C = 0` particular solution of `h·y − λπ H[y] = f`.
pub fn carleman_solve(h: &Sampled1D, f: &Sampled1D, lambda: f64) -> Result<Sampled1D> {
    if lambda == 0.0 {
        return divide(h, f);
    }
    let hm = HilbertMatrix::new(h.grid().clone());
    carleman_parts_with(&hm, h, f, lambda)?.particular()
}

fn divide(h: &Sampled1D, f: &Sampled1D) -> Result<Sampled1D> {
    if let Some(i) = h.values().iter().position(|&v| v == 0.0) {
        return invalid(format!(
            "coefficient vanishes at a={} with λ=0",
            h.grid().nodes()[i]
        ));
    }
    let y = f
        .values()
        .iter()
        .zip(h.values())
        .map(|(f, h)| f / h)
        .collect();
    Sampled1D::linear(h.grid().clone(), y)
}

/// `c·y − λπ H[y] − f` at every node, with `c = h` or `c = k/a` in the scaled form.
pub fn carleman_residual(
    hm: &HilbertMatrix,
    coeff: &[f64],
    y: &[f64],
    f: &[f64],
    lambda: f64,
    scaled: bool,
) -> Vec<f64> {
    let q = hm.grid().nodes();
    let hy = hm.apply(y);
    (0..q.len())
        .map(|i| {
            let c = if scaled { coeff[i] / q[i] } else { coeff[i] };
            c * y[i] - lambda * PI * hy[i] - f[i]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn grid(n: usize, cutoff: f64, x1: f64) -> Arc<GeometricGrid> {
        Arc::new(build_grid(n, cutoff, x1).unwrap())
    }

    #[test]
    fn constant_closed_forms() {
        let g = grid(200, 10.0, 1e-3);
        let one = Sampled1D::from_fn(g.clone(), |_| 1.0).unwrap();
        assert!(hilbert_at(&one, 5.0).unwrap().abs() < 1e-12);
        let want = 4f64.ln() / PI;
        assert!((hilbert_at(&one, 2.0).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.441271).abs() < 1e-6);
    }

    #[test]
    fn linear_closed_form() {
        let g = grid(50, 1.0, 1e-3);
        let f = Sampled1D::from_fn(g, |q| q).unwrap();
        let got = hilbert_at(&f, 0.5).unwrap();
        assert!((got - 1.0 / PI).abs() < 1e-12, "{got}");
    }

    #[test]
    fn endpoint_divergence_is_a_domain_error() {
        let g = grid(30, 10.0, 1e-2);
        let one = Sampled1D::from_fn(g.clone(), |_| 1.0).unwrap();
        assert!(matches!(hilbert_at(&one, 0.0), Err(Error::Domain(_))));
        assert!(matches!(hilbert_at(&one, 10.0), Err(Error::Domain(_))));
        assert!(hilbert_at(&one, 11.0).is_err());
        assert_eq!(a_hilbert_at(&one, 0.0).unwrap(), 0.0);
        let lin = Sampled1D::from_fn(g, |q| q).unwrap();
        // vanishes at 0, so the origin is fine: (1/π)∫ dq = Λ²/π
        assert!((hilbert_at(&lin, 0.0).unwrap() - 10.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn field_matches_log_formula_for_constants() {
        let g = grid(120, 1e3, 1e-2);
        let one = Sampled1D::from_fn(g.clone(), |_| 1.0).unwrap();
        let hf = hilbert_field(&one).unwrap();
        assert_eq!(hf.endpoint_flags(), [true, true]);
        for (i, &a) in g.nodes().iter().enumerate().skip(1).take(g.n() - 2) {
            let want = ((1e3 - a) / a).ln() / PI;
            assert!((hf.output.values()[i] - want).abs() < 1e-11);
        }
        assert_eq!(hf.scaled()[0], 0.0);
    }

    #[test]
    fn matrix_rows_agree_with_direct() {
        let g = grid(64, 100.0, 0.1);
        let hm = HilbertMatrix::new(g.clone());
        let f = Sampled1D::from_fn(g.clone(), |q| 1.0 / (1.0 + q)).unwrap();
        let hv = hm.apply(f.values());
        for i in 1..g.n() - 1 {
            let d = hilbert_at(&f, g.nodes()[i]).unwrap();
            assert!((hv[i] - d).abs() < 1e-13);
        }
    }

    #[test]
    fn carleman_lambda_zero_divides() {
        let g = grid(20, 10.0, 0.1);
        let h = Sampled1D::from_fn(g.clone(), |a| 1.0 + a).unwrap();
        let f = Sampled1D::from_fn(g.clone(), |a| 2.0 * (1.0 + a)).unwrap();
        let y = carleman_solve(&h, &f, 0.0).unwrap();
        assert!(y.values().iter().all(|v| (v - 2.0).abs() < 1e-15));
        let z = Sampled1D::from_fn(g, |a| a - 0.1).unwrap();
        assert!(matches!(
            carleman_solve(&z, &f, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn carleman_homogeneous_solves_the_equation_away_from_the_ends() {
        // k = 1 + a in the scaled form; the regular solution with f = −1/(1+a)
        let g = grid(800, 100.0, 1e-3);
        let hm = HilbertMatrix::new(g.clone());
        let k = Sampled1D::from_fn(g.clone(), |a| 1.0 + a).unwrap();
        let f = Sampled1D::from_fn(g.clone(), |a| -1.0 / (1.0 + a)).unwrap();
        let sol = carleman_parts_scaled(&hm, &k, &f, -0.1).unwrap();
        let y = sol.with_constant(sol.regular_constant()).unwrap();
        assert_eq!(y.values()[0], 0.0);
        let r = carleman_residual(&hm, k.values(), y.values(), f.values(), -0.1, true);
        let q = g.nodes();
        let worst = (1..g.n() - 1)
            .filter(|&i| q[i] > 0.1 && q[i] < 50.0)
            .map(|i| r[i].abs())
            .fold(0.0, f64::max);
        assert!(worst < 5e-3, "{worst}");
    }
}
