//! The full matrix 2-point function `G_ab` rebuilt from a boundary solution.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::Sampled1D;
use crate::hilbert::{carleman_parts_scaled, hilbert_weights};
use crate::solver::BoundarySolution;

/// `G_ab` on decimated nodes, `values[i][j] = G(a_i, b_j)`.
#[derive(Debug, Clone)]
pub struct TwoPointField {
    pub a_nodes: Vec<f64>,
    pub b_nodes: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub max_asymmetry: f64,
    pub experimental: bool,
}

impl TwoPointField {
    /// Bilinear interpolation in `(a, b)`; clamps to the table.
    pub fn interp(&self, a: f64, b: f64) -> f64 {
        let (i, s) = locate(&self.a_nodes, a);
        let (j, t) = locate(&self.b_nodes, b);
        let v = &self.values;
        (1.0 - s) * ((1.0 - t) * v[i][j] + t * v[i][j + 1])
            + s * ((1.0 - t) * v[i + 1][j] + t * v[i + 1][j + 1])
    }

    pub fn diagonal(&self) -> Vec<(f64, f64)> {
        self.a_nodes
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| {
                self.b_nodes
                    .iter()
                    .position(|&b| b == a)
                    .map(|j| (a, self.values[i][j]))
            })
            .collect()
    }
}

fn locate(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    let x = x.clamp(xs[0], xs[n - 1]);
    let j = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    (j, (x - xs[j]) / (xs[j + 1] - xs[j]))
}

fn check_ab(sol: &BoundarySolution, a: f64, b: f64) -> Result<()> {
    let cutoff = sol.grid().cutoff();
    for (name, v) in [("a", a), ("b", b)] {
        if !(0.0..cutoff).contains(&v) {
            return Err(Error::Domain(format!("{name}={v} outside [0, {cutoff})")));
        }
    }
    Ok(())
}

fn angle(lambda: f64, a: f64, s: f64) -> f64 {
    // first argument ≥ 0, so atan2 already lands in [0, π]
    (lambda.abs() * PI * a).atan2(s)
}

/// `τ_b(a) = arctan_{[0,π]}(|λ|πa / (b + h(a)))`.
pub fn tau(sol: &BoundarySolution, b: f64, a: f64) -> Result<f64> {
    check_ab(sol, a, b)?;
    Ok(angle(sol.lambda(), a, b + sol.h.eval(a)?))
}

/// `τ_b` at every grid node.
pub fn tau_field(sol: &BoundarySolution, b: f64) -> Vec<f64> {
    let lambda = sol.lambda();
    sol.grid()
        .nodes()
        .iter()
        .zip(sol.h.values())
        .map(|(&a, &h)| angle(lambda, a, b + h))
        .collect()
}

/// `H_0[τ_0]`, the normalising exponent.
pub fn h0_tau0(sol: &BoundarySolution) -> f64 {
    sol.workspace.hilbert.apply_row(0, &tau_field(sol, 0.0))
}

fn assemble(sol: &BoundarySolution, a: f64, b: f64, h_a: f64, h_tau: f64, h00: f64) -> Result<f64> {
    let lambda = sol.lambda();
    let amp = lambda.abs() * PI * a;
    let expo = lambda.signum() * (h_tau - h00);
    let v = expo.exp() / amp.hypot(b + h_a);
    if !v.is_finite() {
        return Err(Error::NumericFailure(format!(
            "G_ab overflow at a={a}, b={b} (exponent {expo})"
        )));
    }
    Ok(v)
}

/// `G_ab = [sin τ_b(a)/(|λ|πa)] · exp(sign(λ)(H_a[τ_b] − H_0[τ_0]))`.
///
/// `sin τ_b(a)/(|λ|πa) = 1/√((λπa)² + (b+h(a))²)` also covers the limit `a → 0`.
pub fn two_point(sol: &BoundarySolution, a: f64, b: f64) -> Result<f64> {
    check_ab(sol, a, b)?;
    let q = sol.grid().nodes();
    let tb = tau_field(sol, b);
    let h_tau = match q.binary_search_by(|v| v.total_cmp(&a)) {
        Ok(i) => sol.workspace.hilbert.apply_row(i, &tb),
        Err(_) => hilbert_weights(q, a)
            .iter()
            .zip(&tb)
            .map(|(w, t)| w * t)
            .sum(),
    };
    assemble(sol, a, b, sol.h.eval(a)?, h_tau, h0_tau0(sol))
}

/// `G_ab` for fixed `b` at every grid node `a` except the cutoff.
pub fn column(sol: &BoundarySolution, b: f64) -> Result<Vec<f64>> {
    check_ab(sol, 0.0, b)?;
    let q = sol.grid().nodes();
    let tb = tau_field(sol, b);
    let htb = sol.workspace.hilbert.apply(&tb);
    let h00 = h0_tau0(sol);
    let h = sol.h.values();
    (0..q.len() - 1)
        .map(|i| assemble(sol, q[i], b, h[i], htb[i], h00))
        .collect()
}

/// `G_ab` on `m` decimated nodes per axis, with the symmetry defect.
pub fn two_point_field(sol: &BoundarySolution, m: usize) -> Result<TwoPointField> {
    let grid = sol.grid();
    if m > grid.n() {
        return invalid(format!("decimation {m} exceeds grid size {}", grid.n()));
    }
    let idx = grid.decimate(m)?;
    let q = grid.nodes();
    let h = sol.h.values();
    let h00 = h0_tau0(sol);
    let hm = &sol.workspace.hilbert;
    // columns in b, then transpose
    let cols: Vec<Vec<f64>> = idx
        .par_iter()
        .map(|&jb| {
            let b = q[jb];
            let tb = tau_field(sol, b);
            idx.iter()
                .map(|&ia| assemble(sol, q[ia], b, h[ia], hm.apply_row(ia, &tb), h00))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let k = idx.len();
    let values: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| cols[j][i]).collect())
        .collect();
    let mut max_asymmetry: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let (x, y) = (values[i][j], values[j][i]);
            max_asymmetry = max_asymmetry.max(((x - y) / (x + y)).abs());
        }
    }
    let nodes: Vec<f64> = idx.iter().map(|&i| q[i]).collect();
    Ok(TwoPointField {
        a_nodes: nodes.clone(),
        b_nodes: nodes,
        values,
        max_asymmetry,
        experimental: sol.experimental,
    })
}

/// `G_aa` at every grid node `0 < a ≤ a_max`.
pub fn diagonal(sol: &BoundarySolution, a_max: f64) -> Result<Vec<(f64, f64)>> {
    let q = sol.grid().nodes();
    let h = sol.h.values();
    let h00 = h0_tau0(sol);
    let hm = &sol.workspace.hilbert;
    (1..q.len() - 1)
        .filter(|&i| q[i] <= a_max)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| {
            let tb = tau_field(sol, q[i]);
            Ok((
                q[i],
                assemble(sol, q[i], q[i], h[i], hm.apply_row(i, &tb), h00)?,
            ))
        })
        .collect()
}

pub fn wavefunction_y(sol: &BoundarySolution) -> f64 {
    sol.y
}

pub fn effective_coupling(sol: &BoundarySolution) -> f64 {
    sol.lambda_eff
}

/// Residual of the linear equation for `D_ab = (a/b)(G_ab − G_{a0})` at fixed `b > 0`:
/// `(b + h(a))/a · D − λπ H_a[D_{•b}] + G_{a0}`, at every node except the two ends.
pub fn difference_residual(sol: &BoundarySolution, b: f64) -> Result<Vec<f64>> {
    if !(b > 0.0) {
        return invalid("difference function needs b > 0");
    }
    let q = sol.grid().nodes();
    let n = q.len();
    let col = column(sol, b)?;
    // subtract the b = 0 column of the same formula so its discretisation error cancels
    let col0 = column(sol, 0.0)?;
    let g = sol.g.values();
    let mut d: Vec<f64> = (0..n - 1).map(|i| q[i] / b * (col[i] - col0[i])).collect();
    // D at the cutoff node, continued linearly
    let t = (q[n - 1] - q[n - 2]) / (q[n - 2] - q[n - 3]);
    d.push(d[n - 2] + t * (d[n - 2] - d[n - 3]));
    let hd = sol.workspace.hilbert.apply(&d);
    let h = sol.h.values();
    let lp = sol.lambda() * PI;
    Ok((1..n - 1)
        .map(|i| (b + h[i]) / q[i] * d[i] - lp * hd[i] + g[i])
        .collect())
}

/// `G_ab` for fixed `b` at every grid node, obtained by solving the linear singular
/// equation for the difference function with the solution regular at the origin.
pub fn column_via_carleman(sol: &BoundarySolution, b: f64) -> Result<Vec<f64>> {
    if !(b > 0.0) {
        return invalid("difference function needs b > 0");
    }
    let grid = sol.grid().clone();
    let k = Sampled1D::linear(grid.clone(), sol.h.values().iter().map(|h| b + h).collect())?;
    let f = Sampled1D::linear(grid.clone(), sol.g.values().iter().map(|g| -g).collect())?;
    let parts = carleman_parts_scaled(&sol.workspace.hilbert, &k, &f, sol.lambda())?;
    let d = parts.with_constant(parts.regular_constant())?;
    let q = grid.nodes();
    let g = sol.g.values();
    // b/a·D is 0/0 at the origin; use G_0b = G_b0 there
    let g0b = sol.g.eval(b)?;
    Ok((0..q.len())
        .map(|i| {
            if i == 0 {
                g0b
            } else {
                g[i] + b / q[i] * d.values()[i]
            }
        })
        .collect())
}
