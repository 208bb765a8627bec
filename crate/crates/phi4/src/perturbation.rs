//! First- and second-order closed forms in λ, used as oracles.

pub fn pert_boundary(a: f64, lambda: f64) -> f64 {
    let l = a.ln_1p();
    (1.0 - lambda * l) / (1.0 + a)
}

pub fn pert_two_point(a: f64, b: f64, lambda: f64) -> f64 {
    let s = 1.0 + a + b;
    let x = (1.0 + a) * a.ln_1p();
    let y = (1.0 + b) * b.ln_1p();
    // sum in a fixed order so the result is symmetric bit for bit
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    1.0 / s - lambda * (lo + hi) / (s * s)
}

/// `(x − (1+x)ln(1+x) − y + (1+y)ln(1+y))/(x − y)`, equal to `−ln(1+x)` at `x = y`.
pub fn divided_difference(x: f64, y: f64) -> f64 {
    let phi = |t: f64| t - (1.0 + t) * t.ln_1p();
    let d = x - y;
    if d.abs() <= 1e-6 * (1.0 + x.abs()) {
        // expansion around the midpoint: φ' = −ln(1+t), φ''' = 1/(1+t)²
        let m = 0.5 * (x + y);
        -m.ln_1p() + d * d / (24.0 * (1.0 + m) * (1.0 + m))
    } else {
        (phi(x) - phi(y)) / d
    }
}

/// `Γ_abcd` to second order: `λ(1 − λ·DD(a,c) − λ·DD(b,d))`.
pub fn pert_gamma4(a: f64, b: f64, c: f64, d: f64, lambda: f64) -> f64 {
    lambda * (1.0 - lambda * divided_difference(a, c) - lambda * divided_difference(b, d))
}
