use phi4::sweep::{fit_critical, linspace, run_sweep, sweep, SweepMode, SweepRecord};
use phi4::ModelParams;

fn template() -> ModelParams {
    ModelParams {
        cutoff: 1e5,
        n: 600,
        ..Default::default()
    }
}

// cubic through four points, evaluated at x
fn lagrange(xs: [f64; 4], ys: [f64; 4], x: f64) -> f64 {
    (0..4)
        .map(|i| {
            let w: f64 = (0..4)
                .filter(|&j| j != i)
                .map(|j| (x - xs[j]) / (xs[i] - xs[j]))
                .product();
            w * ys[i]
        })
        .sum()
}

#[test]
fn normalisation_decreases_along_the_sweep() {
    let lambdas = linspace(-0.5, -0.02, 25).unwrap();
    let recs = sweep(&template(), &lambdas).unwrap();
    assert_eq!(recs.len(), lambdas.len());
    assert!(recs.iter().all(|r| r.converged));
    assert!(recs.windows(2).all(|w| w[0].lambda < w[1].lambda));
    // sorted by λ ascending, so |λ| decreases along the records
    for w in recs.windows(2) {
        assert!(1.0 + w[0].y <= 1.0 + w[1].y + 1e-3, "{:?}", w);
    }
}

#[test]
fn nothing_happens_at_minus_one_seventy_second() {
    let pole = -1.0 / 72.0;
    let xs = [-0.016, -0.015, -0.012, -0.011];
    let mut lambdas = xs.to_vec();
    lambdas.push(pole);
    let recs = sweep(&template(), &lambdas).unwrap();
    let at = |l: f64| recs.iter().find(|r| r.lambda == l).unwrap().clone();
    let mid = at(pole);
    let pick = |f: fn(&SweepRecord) -> f64| xs.map(|x| f(&at(x)));
    let y = lagrange(xs, pick(|r| r.y), pole);
    let le = lagrange(xs, pick(|r| r.lambda_eff), pole);
    assert!((mid.y - y).abs() < 1e-6, "Y {} vs {}", mid.y, y);
    assert!(
        (mid.lambda_eff - le).abs() < 1e-6,
        "λ_eff {} vs {}",
        mid.lambda_eff,
        le
    );
}

#[test]
fn kink_on_a_coarse_grid() {
    let lambdas = linspace(-0.6, -0.1, 26).unwrap();
    let run = run_sweep(&template(), &lambdas, SweepMode::Continuation).unwrap();
    assert_eq!(run.mode, SweepMode::Continuation);
    let fit = fit_critical(&run.records).unwrap();
    assert!(fit.alpha > 0.0 && fit.a > 0.0);
    assert!(fit.lambda_c > -0.6 && fit.lambda_c < -0.1);
    assert!(fit.fit_residual <= 0.05);
}
