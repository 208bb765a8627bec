//! Widder's criteria for the Stieltjes property, integrated mass densities and the mass gap.
//!
//! `L_{k,t}[f] = ((−t)^{k−1}/c_k) d^{2k−1}/dt^{2k−1} (t^k f(t))`, `c₁ = 1`, `c_k = k!(k−2)!`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::solver::BoundarySolution;
use crate::twopoint;

pub const MAX_K_BOUNDARY: usize = 16;
pub const MAX_K_DIAGONAL: usize = 4;

/// Relative negativity tolerance.
pub const NEGATIVITY_TOL: f64 = 1e-6;

/// Window fits above this residual in `ln G` are not trusted.
pub const DIAGONAL_FIT_TOL: f64 = 1e-5;
const DIAGONAL_DEGREE: usize = 8;
const DIAGONAL_HALF_WIDTH: f64 = 0.5;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

fn widder_c(k: usize) -> f64 {
    if k == 1 {
        1.0
    } else {
        factorial(k) * factorial(k - 2)
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// `(log G_{a0})^{(ℓ)}` for `ℓ = 1..=l_max`, from the closed-form integral over the angle `τ_a`.
pub fn log_derivs_boundary(sol: &BoundarySolution, a: f64, l_max: usize) -> Result<Vec<f64>> {
    if l_max == 0 {
        return invalid("need at least the first derivative");
    }
    if !(a >= 0.0 && a < sol.grid().cutoff()) {
        return Err(Error::Domain(format!("a={a} outside [0, Λ²)")));
    }
    let lambda = sol.lambda();
    let free = |l: usize| {
        let s = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
        s * factorial(l - 1) / (1.0 + a).powi(l as i32)
    };
    if lambda == 0.0 {
        return Ok((1..=l_max).map(free).collect());
    }
    let ws = &sol.workspace;
    let q = ws.grid.nodes();
    let h = sol.h.values();
    let lp = lambda.abs() * PI;
    let mut acc = vec![0.0; l_max];
    // p = 0 limit: ℓ|λ|π/(a+h₀)^{ℓ+1}
    let r0 = 1.0 / (a + h[0]);
    for (l, s) in acc.iter_mut().enumerate() {
        let l = l + 1;
        *s += ws.weights[0] * l as f64 * lp * r0.powi(l as i32 + 1);
    }
    for p in 1..q.len() - 1 {
        let amp = lp * q[p];
        let s = a + h[p];
        let tau = amp.atan2(s);
        let r = 1.0 / amp.hypot(s);
        let mut pow = 1.0;
        for (l, acc_l) in acc.iter_mut().enumerate() {
            pow *= r;
            let l = (l + 1) as f64;
            *acc_l += ws.weights[p] * (l * tau).sin() / q[p] * pow;
        }
    }
    let sgn = lambda.signum();
    Ok(acc
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let l = i + 1;
            let parity = if l % 2 == 0 { 1.0 } else { -1.0 };
            free(l) + parity * sgn * factorial(l - 1) * s / PI
        })
        .collect())
}

pub fn log_deriv_boundary(sol: &BoundarySolution, a: f64, l: usize) -> Result<f64> {
    Ok(*log_derivs_boundary(sol, a, l)?.last().unwrap())
}

/// `f, f′, …, f^{(m)}` from `f` and the derivatives of `ln f` (`kappa[i] = (ln f)^{(i+1)}`),
/// through complete Bell polynomials.
pub fn derivs_from_log(f0: f64, kappa: &[f64], m: usize) -> Result<Vec<f64>> {
    if kappa.len() < m {
        return Err(Error::MissingDerivative(m));
    }
    let mut bell = vec![1.0];
    for n in 0..m {
        let next = compensated_sum((0..=n).map(|i| binomial(n, i) * bell[n - i] * kappa[i]));
        bell.push(next);
    }
    Ok(bell.into_iter().map(|b| f0 * b).collect())
}

/// `L_{k,t}` from `derivs[m] = f^{(m)}(t)`, `m = 0..=2k−1`.
pub fn widder_l(derivs: &[f64], k: usize, t: f64) -> Result<f64> {
    if k == 0 {
        return invalid("k starts at 1");
    }
    if !(t > 0.0) {
        return invalid(format!("t must be positive, got {t}"));
    }
    let n = 2 * k - 1;
    if derivs.len() <= n {
        return Err(Error::MissingDerivative(n));
    }
    let kf = factorial(k);
    let terms = (0..=k)
        .map(|j| binomial(n, j) * kf / factorial(k - j) * t.powi((k - j) as i32) * derivs[n - j]);
    Ok((-t).powi(k as i32 - 1) / widder_c(k) * compensated_sum(terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Boundary,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct WidderReport {
    pub which: Which,
    pub k_list: Vec<usize>,
    pub t_nodes: Vec<f64>,
    /// `l_table[k−1][i] = L_{k, t_i}`.
    pub l_table: Vec<Vec<f64>>,
    /// Cumulative trapezoid integral of each row, from the first `t` node.
    pub rho_table: Vec<Vec<f64>>,
    pub min_l_per_k: Vec<f64>,
    pub mass_gap_estimate: f64,
    pub verdict: Verdict,
    /// Largest window-fit residual in `ln G` (diagonal only).
    pub fit_residual: Option<f64>,
}

impl WidderReport {
    /// The `m²` at which `ρ̃_k` reaches `fraction` of its final value, by linear interpolation.
    pub fn onset(&self, k: usize, fraction: f64) -> Option<f64> {
        onset(&self.t_nodes, &self.rho_table[k - 1], fraction)
    }

    /// Location of the steepest rise of `ρ̃_k` and the 10–90% rise width.
    pub fn step_profile(&self, k: usize) -> (f64, f64) {
        let row = &self.l_table[k - 1];
        let imax = (0..row.len())
            .max_by(|&i, &j| row[i].total_cmp(&row[j]))
            .unwrap_or(0);
        let lo = self.onset(k, 0.1).unwrap_or(f64::NAN);
        let hi = self.onset(k, 0.9).unwrap_or(f64::NAN);
        (self.t_nodes[imax], hi - lo)
    }
}

fn onset(t: &[f64], rho: &[f64], fraction: f64) -> Option<f64> {
    let target = fraction * rho.last()?;
    let i = rho.iter().position(|&r| r >= target)?;
    if i == 0 {
        return Some(t[0]);
    }
    let s = (target - rho[i - 1]) / (rho[i] - rho[i - 1]);
    Some(t[i - 1] + s * (t[i] - t[i - 1]))
}

fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
    }
    out
}

/// Derivatives of `f` at `t` together with a trust flag and the fit residual.
struct Local {
    derivs: Vec<f64>,
    trusted: bool,
    residual: f64,
}

fn boundary_local(sol: &BoundarySolution, t: f64, m: usize) -> Result<Local> {
    let kappa = log_derivs_boundary(sol, t, m)?;
    let g = sol.g.with_rule(crate::grid::Interp::CubicSpline).eval(t)?;
    Ok(Local {
        derivs: derivs_from_log(g, &kappa, m)?,
        trusted: true,
        residual: 0.0,
    })
}

/// Fit `ln G_aa` by a polynomial in `x = ln(1+a)` around `ln(1+t)` and return
/// `(ln G)(t), (ln G)′(t), …` through the chain rule, as truncated Taylor series.
fn diagonal_local(samples: &[(f64, f64)], t: f64, m: usize) -> Result<Local> {
    let x0 = t.ln_1p();
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(a, g)| ((a.ln_1p() - x0) / DIAGONAL_HALF_WIDTH, g.ln()))
        .filter(|(u, _)| u.abs() <= 1.0)
        .collect();
    let deg = DIAGONAL_DEGREE;
    if pts.len() < deg + 3 {
        return Err(Error::NumericFailure(format!(
            "only {} diagonal samples around t={t}",
            pts.len()
        )));
    }
    let v = DMatrix::from_fn(pts.len(), deg + 1, |i, j| pts[i].0.powi(j as i32));
    let rhs = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let coef = v
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NumericFailure(e.to_string()))?;
    let residual = (&v * &coef - &rhs).amax();
    // ln G as a series in δ = x − x₀, then δ(ε) = ln(1 + ε/(1+t))
    let c: Vec<f64> = (0..=deg)
        .map(|j| coef[j] / DIAGONAL_HALF_WIDTH.powi(j as i32))
        .collect();
    let mut delta = vec![0.0; m + 1];
    for (j, d) in delta.iter_mut().enumerate().skip(1) {
        let s = if j % 2 == 1 { 1.0 } else { -1.0 };
        *d = s / (j as f64 * (1.0 + t).powi(j as i32));
    }
    let mut series = vec![0.0; m + 1];
    let mut power = vec![0.0; m + 1];
    power[0] = 1.0;
    for cj in &c {
        for (s, p) in series.iter_mut().zip(&power) {
            *s += cj * p;
        }
        power = series_mul(&power, &delta);
    }
    let kappa: Vec<f64> = (1..=m).map(|i| series[i] * factorial(i)).collect();
    Ok(Local {
        derivs: derivs_from_log(series[0].exp(), &kappa, m)?,
        trusted: residual <= DIAGONAL_FIT_TOL,
        residual,
    })
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut out = vec![0.0; m];
    for i in 0..m {
        for j in 0..m - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

pub fn widder_report(
    sol: &BoundarySolution,
    which: Which,
    k_max: usize,
    t_nodes: &[f64],
) -> Result<WidderReport> {
    let cap = match which {
        Which::Boundary => MAX_K_BOUNDARY,
        Which::Diagonal => MAX_K_DIAGONAL,
    };
    if k_max == 0 || k_max > cap {
        return invalid(format!(
            "k_max must lie in 1..={cap} for {which:?}, got {k_max}"
        ));
    }
    if t_nodes.is_empty() || t_nodes.windows(2).any(|w| w[1] <= w[0]) || !(t_nodes[0] > 0.0) {
        return invalid("t nodes must be positive and strictly increasing");
    }
    let m = 2 * k_max - 1;
    let locals: Vec<Local> = match which {
        Which::Boundary => t_nodes
            .par_iter()
            .map(|&t| boundary_local(sol, t, m))
            .collect::<Result<_>>()?,
        Which::Diagonal => {
            let t_last = *t_nodes.last().unwrap();
            let a_max = (1.0 + t_last) * (DIAGONAL_HALF_WIDTH).exp() - 1.0;
            let samples = twopoint::diagonal(sol, a_max)?;
            t_nodes
                .par_iter()
                .map(|&t| diagonal_local(&samples, t, m))
                .collect::<Result<_>>()?
        }
    };
    let k_list: Vec<usize> = (1..=k_max).collect();
    let mut l_table = vec![vec![0.0; t_nodes.len()]; k_max];
    for (i, (&t, loc)) in t_nodes.iter().zip(&locals).enumerate() {
        for k in 1..=k_max {
            l_table[k - 1][i] = widder_l(&loc.derivs, k, t)?;
        }
    }
    let rho_table: Vec<Vec<f64>> = l_table
        .iter()
        .map(|row| cumulative_trapezoid(t_nodes, row))
        .collect();
    let min_l_per_k: Vec<f64> = l_table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let mut violated = false;
    let mut all_trusted = true;
    for (i, loc) in locals.iter().enumerate() {
        let tol = NEGATIVITY_TOL * loc.derivs[0].abs();
        let negative = l_table.iter().any(|row| row[i] < -tol);
        if loc.trusted {
            violated |= negative;
        } else {
            all_trusted = false;
        }
    }
    let verdict = if violated {
        Verdict::Violated
    } else if all_trusted {
        Verdict::Consistent
    } else {
        Verdict::Inconclusive
    };
    let last = &rho_table[k_max - 1];
    let plateau = *last.last().unwrap();
    let mass_gap_estimate = t_nodes
        .iter()
        .zip(last)
        .take_while(|(_, &r)| r <= 0.01 * plateau)
        .map(|(&t, _)| t)
        .last()
        .unwrap_or(0.0);
    let fit_residual = match which {
        Which::Boundary => None,
        Which::Diagonal => Some(locals.iter().map(|l| l.residual).fold(0.0, f64::max)),
    };
    Ok(WidderReport {
        which,
        k_list,
        t_nodes: t_nodes.to_vec(),
        l_table,
        rho_table,
        min_l_per_k,
        mass_gap_estimate,
        verdict,
        fit_residual,
    })
}
