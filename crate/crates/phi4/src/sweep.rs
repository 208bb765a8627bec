//! Coupling-constant sweeps and the fit of the critical behaviour of `1+Y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::solver::{solve_with, BoundarySolution, ModelParams, Workspace};
use crate::twopoint::two_point_field;

/// Decimation used for the asymmetry diagnostic of each record.
pub const ASYMMETRY_DECIMATION: usize = 100;
/// Relative RMS misfit above which no kink is reported.
pub const FIT_RESIDUAL_MAX: f64 = 0.05;
pub const MIN_FIT_RECORDS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub lambda_eff: f64,
    pub max_asymmetry: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Sequential, each solve starting from the previous solution.
    Continuation,
    /// Independent solves from the free propagator, in parallel.
    Cold,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRun {
    pub mode: SweepMode,
    pub records: Vec<SweepRecord>,
}

fn record(lambda: f64, sol: Result<BoundarySolution>) -> (SweepRecord, Option<BoundarySolution>) {
    match sol {
        Ok(sol) => {
            let asym = if sol.converged {
                two_point_field(&sol, ASYMMETRY_DECIMATION.min(sol.grid().n()))
                    .map_or(f64::NAN, |f| f.max_asymmetry)
            } else {
                f64::NAN
            };
            let rec = SweepRecord {
                lambda,
                y: sol.y,
                lambda_eff: sol.lambda_eff,
                max_asymmetry: asym,
                iterations: sol.iterations,
                converged: sol.converged,
            };
            (rec, Some(sol))
        }
        Err(_) => (
            SweepRecord {
                lambda,
                y: f64::NAN,
                lambda_eff: f64::NAN,
                max_asymmetry: f64::NAN,
                iterations: 0,
                converged: false,
            },
            None,
        ),
    }
}

fn check_lambdas(template: &ModelParams, lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return invalid("empty coupling list");
    }
    for &l in lambdas {
        template.with_lambda(l).validate()?;
    }
    Ok(())
}

fn sorted(mut records: Vec<SweepRecord>) -> Vec<SweepRecord> {
    records.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    records
}

/// Solve at every `λ`, starting nearest the free theory and warm-starting each solve from
/// the last converged one. Failed solves are flagged, not dropped. Records come back sorted.
pub fn sweep(template: &ModelParams, lambdas: &[f64]) -> Result<Vec<SweepRecord>> {
    check_lambdas(template, lambdas)?;
    let ws = Workspace::for_params(template)?;
    let mut order = lambdas.to_vec();
    order.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(b.total_cmp(a)));
    let mut warm: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(order.len());
    for l in order {
        let p = template.with_lambda(l);
        let (rec, sol) = record(l, solve_with(&p, ws.clone(), warm.as_deref()));
        if let Some(sol) = sol.filter(|s| s.converged) {
            warm = Some(sol.g.values().to_vec());
        }
        out.push(rec);
    }
    Ok(sorted(out))
}

/// Independent solves from the free propagator, run in parallel.
pub fn sweep_cold(template: &ModelParams, lambdas: &[f64]) -> Result<Vec<SweepRecord>> {
    check_lambdas(template, lambdas)?;
    let ws = Workspace::for_params(template)?;
    let out = lambdas
        .par_iter()
        .map(|&l| record(l, solve_with(&template.with_lambda(l), ws.clone(), None)).0)
        .collect();
    Ok(sorted(out))
}

pub fn run_sweep(template: &ModelParams, lambdas: &[f64], mode: SweepMode) -> Result<SweepRun> {
    let records = match mode {
        SweepMode::Continuation => sweep(template, lambdas)?,
        SweepMode::Cold => sweep_cold(template, lambdas)?,
    };
    Ok(SweepRun { mode, records })
}

/// `steps` equally spaced couplings from `lo` to `hi` inclusive, snapped to 12 decimals so
/// that printed values stay short.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(hi > lo) {
        return invalid("need lambda_min < lambda_max and at least two steps");
    }
    let d = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| ((lo + d * i as f64) * 1e12).round() / 1e12)
        .collect())
}

/// `1+Y = A·max(0, λ−λ_c)^α` fitted over `window`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalFit {
    pub lambda_c: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub alpha: f64,
    /// RMS misfit divided by the largest `1+Y` in the window.
    pub fit_residual: f64,
    pub window: (f64, f64),
    /// Where the sampled `1+Y` first reaches zero coming from `λ = 0`, linearly interpolated.
    pub raw_zero: Option<f64>,
}

impl CriticalFit {
    pub fn model(&self, lambda: f64) -> f64 {
        self.a * (lambda - self.lambda_c).max(0.0).powf(self.alpha)
    }
}

/// Best amplitude for fixed `(λ_c, α)` and the resulting sum of squares.
fn profile_amplitude(x: &[f64], y: &[f64], lc: f64, alpha: f64) -> (f64, f64) {
    let phi: Vec<f64> = x.iter().map(|l| (l - lc).max(0.0).powf(alpha)).collect();
    let pp: f64 = phi.iter().map(|p| p * p).sum();
    let a = if pp > 0.0 {
        phi.iter().zip(y).map(|(p, y)| p * y).sum::<f64>() / pp
    } else {
        0.0
    };
    let ss = phi.iter().zip(y).map(|(p, y)| (a * p - y).powi(2)).sum();
    (a, ss)
}

fn golden(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

const ALPHA_RANGE: (f64, f64) = (0.05, 4.0);

/// Sum of squares at `λ_c` with `α` and `A` profiled out.
fn best_alpha(x: &[f64], y: &[f64], lc: f64) -> (f64, f64) {
    let alpha = golden(ALPHA_RANGE.0, ALPHA_RANGE.1, |al| {
        profile_amplitude(x, y, lc, al).1
    });
    (alpha, profile_amplitude(x, y, lc, alpha).1)
}

fn raw_zero(x: &[f64], y: &[f64]) -> Option<f64> {
    // x ascending; walk down from the largest λ
    (1..x.len()).rev().find_map(|i| {
        (y[i] > 0.0 && y[i - 1] <= 0.0)
            .then(|| x[i - 1] + (x[i] - x[i - 1]) * (-y[i - 1]) / (y[i] - y[i - 1]))
    })
}

/// Fit over all converged records.
pub fn fit_critical(records: &[SweepRecord]) -> Result<CriticalFit> {
    let lo = records
        .iter()
        .map(|r| r.lambda)
        .fold(f64::INFINITY, f64::min);
    let hi = records
        .iter()
        .map(|r| r.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    fit_critical_window(records, (lo, hi))
}

pub fn fit_critical_window(records: &[SweepRecord], window: (f64, f64)) -> Result<CriticalFit> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.converged && r.y.is_finite())
        .filter(|r| r.lambda >= window.0 && r.lambda <= window.1)
        .map(|r| (r.lambda, 1.0 + r.y))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < MIN_FIT_RECORDS {
        return Err(Error::FitFailure(format!(
            "{} usable records, need at least {MIN_FIT_RECORDS}",
            pts.len()
        )));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let n = x.len();

    // seed: largest discrete second difference
    let seed = (1..n - 1)
        .max_by(|&i, &j| {
            let dd = |k: usize| y[k - 1] - 2.0 * y[k] + y[k + 1];
            dd(i).total_cmp(&dd(j))
        })
        .unwrap();
    // scan λ_c between sample points around the seed, then refine
    let span = (x[(seed + 3).min(n - 1)] - x[seed.saturating_sub(3)]).max(1e-12);
    let c0 = x[seed.saturating_sub(3)];
    let scan = 60;
    let best = (0..=scan)
        .map(|i| c0 + span * i as f64 / scan as f64)
        .min_by(|&a, &b| best_alpha(&x, &y, a).1.total_cmp(&best_alpha(&x, &y, b).1))
        .unwrap();
    let h = span / scan as f64;
    let lambda_c = golden(best - h, best + h, |lc| best_alpha(&x, &y, lc).1);
    let (alpha, ss) = best_alpha(&x, &y, lambda_c);
    let (a, _) = profile_amplitude(&x, &y, lambda_c, alpha);

    let scale = y.iter().cloned().fold(0.0, f64::max);
    let fit_residual = (ss / n as f64).sqrt() / scale;
    let below = x.iter().filter(|&&l| l < lambda_c).count();
    let above = n - below;
    if !(alpha > 0.0 && a > 0.0) || below < 2 || above < 2 {
        return Err(Error::FitFailure(format!(
            "no kink: λ_c = {lambda_c:.4} with {below} records below and {above} above"
        )));
    }
    if !(fit_residual <= FIT_RESIDUAL_MAX) {
        return Err(Error::FitFailure(format!(
            "relative misfit {fit_residual:.3} exceeds {FIT_RESIDUAL_MAX}"
        )));
    }
    Ok(CriticalFit {
        lambda_c,
        a,
        alpha,
        fit_residual,
        window: (x[0], x[n - 1]),
        raw_zero: raw_zero(&x, &y),
    })
}
