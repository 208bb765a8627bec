//! Solve the boundary function at the default configuration and print the diagnostics.

use std::time::Instant;

use phi4::twopoint::two_point_field;
use phi4::{solve_boundary, ModelParams};

fn main() {
    let lambda: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(-0.1);
    let params = ModelParams::default().with_lambda(lambda);
    let t = Instant::now();
    let sol = solve_boundary(&params, None).expect("solve");
    println!(
        "λ={lambda} 1+Y={:.10} λ_eff={:.8} residual={:.2e} iterations={} ({:.1?})",
        1.0 + sol.y,
        sol.lambda_eff,
        sol.residual,
        sol.iterations,
        t.elapsed()
    );
    let t = Instant::now();
    let field = two_point_field(&sol, 100).expect("field");
    println!(
        "max asymmetry {:.4} ({:.1?})",
        field.max_asymmetry,
        t.elapsed()
    );
}
