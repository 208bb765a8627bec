//! Bessel functions and quadrature nodes not covered by `libm`.

use std::f64::consts::PI;

pub use libm::{j0, j1, tgamma};

/// `K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt`, trapezoid rule (spectrally accurate here).
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "K_ν needs x > 0");
    let h: f64 = 0.02;
    let mut s = 0.5 * (-x).exp();
    let mut t = h;
    loop {
        let e = -x * t.cosh() + nu.abs() * t;
        let term = e.exp() * 0.5 * (1.0 + (-2.0 * nu.abs() * t).exp());
        s += term;
        if e < -745.0 || (term < 1e-18 * s && x * t.cosh() > nu.abs() * t + 40.0) {
            break;
        }
        t += h;
    }
    s * h
}

/// The `s`-th positive zero of `J₁`, `s ≥ 1`.
pub fn j1_zero(s: usize) -> f64 {
    let b = (s as f64 + 0.25) * PI;
    // McMahon expansion, then Newton with J₁′ = J₀ − J₁/x
    let mut x = b - 3.0 / (8.0 * b) + 36.0 / (384.0 * b.powi(3));
    for _ in 0..8 {
        let f = j1(x);
        let d = j0(x) - f / x;
        let step = f / d;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

/// 16-point Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre_16() -> ([f64; 16], [f64; 16]) {
    let half = [
        (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
        (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
        (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
        (0.617_876_244_402_643_8, 0.149_595_988_816_576_7),
        (0.755_404_408_355_003, 0.124_628_971_255_533_9),
        (0.865_631_202_387_831_7, 0.095_158_511_682_492_78),
        (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
        (0.989_400_934_991_649_9, 0.027_152_459_411_754_09),
    ];
    let mut x = [0.0; 16];
    let mut w = [0.0; 16];
    for (i, &(xi, wi)) in half.iter().enumerate() {
        x[7 - i] = -xi;
        w[7 - i] = wi;
        x[8 + i] = xi;
        w[8 + i] = wi;
    }
    (x, w)
}

/// Limit of a sequence of partial sums by Wynn's ε-algorithm; returns the last two
/// even-column estimates.
pub fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = (s[n.saturating_sub(2)], s[n - 1]);
    let mut col = 0;
    while cur.len() > 1 {
        let next: Vec<f64> = (0..cur.len() - 1)
            .map(|i| {
                let d = cur[i + 1] - cur[i];
                let p = if col == 0 { 0.0 } else { prev[i + 1] };
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    p + 1.0 / d
                }
            })
            .collect();
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 && cur.len() >= 2 && cur.iter().all(|v| v.is_finite()) {
            best = (cur[cur.len() - 2], cur[cur.len() - 1]);
        }
        if cur.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    best
}
