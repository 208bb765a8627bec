//! Position-space 2-point Schwinger function from the diagonal matrix 2-point function.
//!
//! The 4-D radial Fourier transform `∫d⁴p/(2π)⁴ e^{ipξ} F(‖p‖)` reduces to
//! `(1/(4π² r)) ∫₀^∞ dk k² J₁(kr) F(k)` with `r = ‖ξ‖`. The same `(2π)⁻⁴` measure comes out
//! of the general `N`-point assembly at `N = 2`: two orderings times `4²/2` times
//! `1/(64π²·4π²)` is `1/(16π⁴)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::solver::BoundarySolution;
use crate::special::{bessel_k, gauss_legendre_16, j1, j1_zero, tgamma, wynn_epsilon};
use crate::twopoint::{self, TwoPointField};

/// Relative agreement of successive extrapolated sums required to stop early.
pub const SETTLE_TOL: f64 = 1e-9;
/// Looser agreement accepted when the momentum cutoff is reached first.
pub const CUTOFF_TOL: f64 = 1e-5;
const MIN_INTERVALS: usize = 12;
const WYNN_WINDOW: usize = 30;
const MAX_PIECE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r_nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    /// Indices of sampled separations where `S(r) ≤ 0`.
    pub fn nonpositive(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| !(self.values[i] > 0.0))
            .collect()
    }

    /// Least-squares slope of `ln S` against `ln r` over `r ∈ [r_lo, r_hi]`.
    pub fn log_slope(&self, r_lo: f64, r_hi: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .r_nodes
            .iter()
            .zip(&self.values)
            .filter(|(r, s)| **r >= r_lo && **r <= r_hi && **s > 0.0)
            .map(|(r, s)| (r.ln(), s.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::FitFailure(
                "fewer than two positive samples in range".into(),
            ));
        }
        let n = pts.len() as f64;
        let (mx, my) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
            (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
        });
        Ok(sxy / sxx)
    }

    /// Decay rate from the slope of `ln(r^{3/2} S)` against `r` over `[r_lo, r_hi]`; the
    /// power removes the free large-distance prefactor.
    pub fn decay_rate(&self, r_lo: f64, r_hi: f64) -> Result<f64> {
        let shifted = RadialProfile {
            r_nodes: self.r_nodes.iter().map(|r| r.exp()).collect(),
            values: self
                .r_nodes
                .iter()
                .zip(&self.values)
                .map(|(r, s)| r.powf(1.5) * s)
                .collect(),
        };
        Ok(-shifted.log_slope(r_lo.exp(), r_hi.exp())?)
    }
}

/// `(1/(4π² r)) ∫₀^{k_max} dk k² J₁(kr) F(k)`.
///
/// Integrates between consecutive zeros of `J₁(kr)` with Gauss–Legendre and extrapolates the
/// alternating partial sums with Wynn's ε-algorithm. Stops as soon as the extrapolation
/// settles; `k_max` only bounds how far it may go.
pub fn hankel_2pt(profile: impl Fn(f64) -> f64, r: f64, k_max: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("separation must be positive, got {r}"));
    }
    if !(k_max > 0.0) {
        return invalid("k_max must be positive");
    }
    let (gx, gw) = gauss_legendre_16();
    let piece = |lo: f64, hi: f64| -> f64 {
        let m = ((hi - lo) / MAX_PIECE).ceil().max(1.0) as usize;
        let step = (hi - lo) / m as f64;
        let mut s = 0.0;
        for p in 0..m {
            let (c, half) = (lo + (p as f64 + 0.5) * step, 0.5 * step);
            for (x, w) in gx.iter().zip(&gw) {
                let k = c + half * x;
                s += w * half * k * k * j1(k * r) * profile(k);
            }
        }
        s
    };
    let mut partial = Vec::new();
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut prev_est = f64::NAN;
    let mut change = f64::INFINITY;
    let mut s = 1;
    loop {
        let hi = (j1_zero(s) / r).min(k_max);
        total += piece(lo, hi);
        if !total.is_finite() {
            return Err(Error::NumericFailure(
                "non-finite Hankel partial sum".into(),
            ));
        }
        partial.push(total);
        if partial.len() >= MIN_INTERVALS {
            let w = &partial[partial.len().saturating_sub(WYNN_WINDOW)..];
            let (_, est) = wynn_epsilon(w);
            change = ((est - prev_est) / est).abs();
            prev_est = est;
            if change <= SETTLE_TOL || (hi >= k_max && change <= CUTOFF_TOL) {
                return Ok(est / (4.0 * PI * PI * r));
            }
        }
        if hi >= k_max {
            break;
        }
        lo = hi;
        s += 1;
    }
    Err(Error::NumericFailure(format!(
        "Hankel extrapolation at r = {r} did not settle before k_max = {k_max} (last change {change:.1e})"
    )))
}

/// Leading-order closed form `2^{−λ} K_{1−λ}(r) / (4π² Γ(1+λ) r^{1−λ})`.
pub fn bessel_reference_2pt(r: f64, lambda: f64) -> Result<f64> {
    if !(r > 0.0) || !(lambda > -1.0) {
        return invalid(format!("need r > 0 and λ > −1, got r = {r}, λ = {lambda}"));
    }
    let nu = 1.0 - lambda;
    Ok(2f64.powf(-lambda) * bessel_k(nu, r) / (4.0 * PI * PI * tgamma(1.0 + lambda) * r.powf(nu)))
}

/// `G_qq` on the whole grid, interpolated linearly in `ln G` against `ln(1+q)`.
#[derive(Clone, Debug)]
pub struct DiagonalProfile {
    x: Vec<f64>,
    ln_g: Vec<f64>,
}

impl DiagonalProfile {
    pub fn from_solution(sol: &BoundarySolution) -> Result<Self> {
        let mut pts = vec![(0.0, twopoint::two_point(sol, 0.0, 0.0)?)];
        pts.extend(twopoint::diagonal(sol, sol.grid().cutoff())?);
        Self::from_points(&pts)
    }

    pub fn from_points(pts: &[(f64, f64)]) -> Result<Self> {
        if pts.len() < 2 || pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return invalid("diagonal samples must be increasing in q");
        }
        if pts.iter().any(|p| !(p.1 > 0.0)) {
            return Err(Error::NumericFailure(
                "non-positive diagonal 2-point function".into(),
            ));
        }
        Ok(Self {
            x: pts.iter().map(|p| p.0.ln_1p()).collect(),
            ln_g: pts.iter().map(|p| p.1.ln()).collect(),
        })
    }

    pub fn q_max(&self) -> f64 {
        self.x.last().unwrap().exp_m1()
    }

    /// Clamped to the last sample beyond `q_max`.
    pub fn eval(&self, q: f64) -> f64 {
        let x = q.max(0.0).ln_1p();
        let n = self.x.len();
        if x >= self.x[n - 1] {
            return self.ln_g[n - 1].exp();
        }
        let j = self.x.partition_point(|v| *v <= x).clamp(1, n - 1) - 1;
        let t = (x - self.x[j]) / (self.x[j + 1] - self.x[j]);
        ((1.0 - t) * self.ln_g[j] + t * self.ln_g[j + 1]).exp()
    }
}

fn momentum_cutoff(sol: &BoundarySolution) -> f64 {
    (2.0 * (1.0 + sol.y) * sol.grid().cutoff()).sqrt()
}

fn check_solution(sol: &BoundarySolution) -> Result<()> {
    if !sol.converged {
        return Err(Error::NumericFailure(
            "boundary solution did not converge".into(),
        ));
    }
    if !(1.0 + sol.y > 0.0) {
        return Err(Error::NumericFailure(format!(
            "1+Y = {} is not positive",
            1.0 + sol.y
        )));
    }
    Ok(())
}

/// `S(r)` with `F(k) = G_diag(k²/(2(1+Y)))` up to the grid's momentum cutoff.
///
/// The diagonal is taken at full grid resolution from `sol`; `field` must come from the
/// same solution and is used only to reject mismatched inputs.
pub fn schwinger_2pt(sol: &BoundarySolution, field: &TwoPointField, r: f64) -> Result<f64> {
    Ok(schwinger_profile(sol, field, &[r])?.values[0])
}

pub fn schwinger_profile(
    sol: &BoundarySolution,
    field: &TwoPointField,
    r_nodes: &[f64],
) -> Result<RadialProfile> {
    check_solution(sol)?;
    if field
        .a_nodes
        .last()
        .is_some_and(|a| *a > sol.grid().cutoff())
    {
        return invalid("two-point field does not belong to this solution's grid");
    }
    if r_nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("r nodes must be strictly increasing");
    }
    let diag = DiagonalProfile::from_solution(sol)?;
    let scale = 2.0 * (1.0 + sol.y);
    let k_max = momentum_cutoff(sol);
    let values = r_nodes
        .iter()
        .map(|&r| hankel_2pt(|k| diag.eval(k * k / scale), r, k_max))
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile {
        r_nodes: r_nodes.to_vec(),
        values,
    })
}

/// `S(r)` for the leading-order profile `G_qq = (1+2q)^{−(1+λ)}` with `1+Y = 1`.
pub fn perturbative_2pt(r: f64, lambda: f64) -> Result<f64> {
    hankel_2pt(|k| (1.0 + k * k).powf(-(1.0 + lambda)), r, f64::INFINITY)
}

/// `n` logarithmically spaced separations in `[r_min, r_max]`.
pub fn log_spaced(r_min: f64, r_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min) || n < 2 {
        return invalid("need 0 < r_min < r_max and at least two points");
    }
    let g = (r_max / r_min).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| r_min * (g * i as f64).exp()).collect())
}
