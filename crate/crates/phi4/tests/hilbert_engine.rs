use std::f64::consts::PI;
use std::sync::Arc;

use phi4::hilbert::{
    a_hilbert_at, carleman_parts_scaled, carleman_residual, carleman_solve, hilbert_at,
    hilbert_field, tricomi_residual, HilbertMatrix,
};
use phi4::twopoint::tau_field;
use phi4::{build_grid, solve_boundary, GeometricGrid, Interp, ModelParams, Sampled1D};
use proptest::prelude::*;

fn grid(n: usize, cutoff: f64, x1: f64) -> Arc<GeometricGrid> {
    Arc::new(build_grid(n, cutoff, x1).unwrap())
}

// partial fractions of 1/((1+q)(q−a)) and 1/((1+q)²(q−a)) on [0, L]
fn pv_inverse(a: f64, l: f64) -> f64 {
    (((l - a) / a).ln() - (1.0 + l).ln()) / ((1.0 + a) * PI)
}

fn pv_inverse_square(a: f64, l: f64) -> f64 {
    let s = 1.0 + a;
    (((l - a) / a).ln() / (s * s) - (1.0 + l).ln() / (s * s) - (1.0 - 1.0 / (1.0 + l)) / s) / PI
}

#[test]
fn closed_forms_for_constants_and_lines() {
    let g = Arc::new(GeometricGrid::new(40, 10.0, 0.05).unwrap());
    let one = Sampled1D::from_fn(g.clone(), |_| 1.0).unwrap();
    assert!(hilbert_at(&one, 5.0).unwrap().abs() < 1e-12);
    assert!((hilbert_at(&one, 2.0).unwrap() - 4f64.ln() / PI).abs() < 1e-12);
    for &a in &[0.1f64, 0.77, 3.0, 9.5] {
        let want = ((10.0 - a) / a).ln() / PI;
        assert!((hilbert_at(&one, a).unwrap() - want).abs() < 1e-12);
    }
    let g1 = grid(30, 1.0, 1e-3);
    let lin = Sampled1D::from_fn(g1, |q| q).unwrap();
    assert!((hilbert_at(&lin, 0.5).unwrap() - 1.0 / PI).abs() < 1e-12);
    for &a in &[0.01f64, 0.3, 0.9] {
        let want = (1.0 + a * ((1.0 - a) / a).ln()) / PI;
        assert!((hilbert_at(&lin, a).unwrap() - want).abs() < 1e-12);
        assert!((a_hilbert_at(&lin, a).unwrap() - a * want).abs() < 1e-12);
    }
}

#[test]
fn inverse_on_short_interval() {
    // (1/(2π)) ln(9/11) at a = 1 on [0, 10]
    let want = (9.0f64 / 11.0).ln() / (2.0 * PI);
    assert!((pv_inverse(1.0, 10.0) - want).abs() < 1e-15);
    let f = Sampled1D::from_fn(grid(4000, 10.0, 1e-4), |q| 1.0 / (1.0 + q)).unwrap();
    assert!((hilbert_at(&f, 1.0).unwrap() - want).abs() < 1e-6);
}

// Regression bound for the linear-interpolant transform against exact principal values on
// the paper grid; the discretisation error sits near 1e-5 relative.
#[test]
fn paper_grid_against_exact_principal_values() {
    let g = grid(2000, 1e7, 1e-2);
    let f1 = Sampled1D::from_fn(g.clone(), |q| 1.0 / (1.0 + q)).unwrap();
    let f2 = Sampled1D::from_fn(g.clone(), |q| (1.0 + q).powi(-2)).unwrap();
    for &a in &[0.05, 0.5, 3.0, 30.0, 1e3] {
        let (h1, w1) = (hilbert_at(&f1, a).unwrap(), pv_inverse(a, 1e7));
        let (h2, w2) = (hilbert_at(&f2, a).unwrap(), pv_inverse_square(a, 1e7));
        assert!((h1 / w1 - 1.0).abs() < 1e-4, "a={a}: {h1} vs {w1}");
        assert!((h2 / w2 - 1.0).abs() < 1e-4, "a={a}: {h2} vs {w2}");
    }
}

#[test]
fn field_of_constant_and_endpoint_flags() {
    let g = grid(60, 1e3, 1e-2);
    let one = Sampled1D::from_fn(g.clone(), |_| 1.0).unwrap();
    let hf = hilbert_field(&one).unwrap();
    assert_eq!(hf.endpoint_flags(), [true, true]);
    let q = g.nodes();
    for i in 1..q.len() - 1 {
        let want = ((1e3 - q[i]) / q[i]).ln() / PI;
        assert!((hf.output.values()[i] - want).abs() < 1e-12);
    }
    assert_eq!(hf.scaled()[0], 0.0);
    let vanishing = Sampled1D::from_fn(g, |q| q * (1e3 - q)).unwrap();
    assert_eq!(
        hilbert_field(&vanishing).unwrap().endpoint_flags(),
        [false, false]
    );
    assert!(hilbert_at(&vanishing, 0.0).is_ok());
    assert!(hilbert_at(&one.with_rule(Interp::CubicSpline), 1.0).is_err());
}

#[test]
fn matrix_apply_is_the_field() {
    let g = grid(120, 1e4, 1e-2);
    let f = Sampled1D::from_fn(g.clone(), |q| (-q / 7.0).exp() / (1.0 + q.sqrt())).unwrap();
    let hm = HilbertMatrix::new(g.clone());
    let a = hm.apply(f.values());
    let b = hilbert_field(&f).unwrap();
    for (x, y) in a.iter().zip(b.output.values()) {
        assert!((x - y).abs() <= 1e-14 * (1.0 + y.abs()));
    }
}

#[test]
fn tricomi_identity_on_the_solved_angle() {
    let sol = solve_boundary(&ModelParams::default(), None).unwrap();
    let tau = tau_field(&sol, 0.0);
    assert_eq!(tau[0], 0.0);
    assert!(tau.iter().all(|t| (0.0..=PI).contains(t)));
    let r = tricomi_residual(&sol.workspace.hilbert, &tau);
    let n = r.len();
    let worst = r[5..n - 5].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst <= 1e-3, "Tricomi residual {worst:e}");
}

#[test]
fn carleman_at_zero_coupling_divides() {
    let g = grid(50, 1e3, 1e-2);
    let h = Sampled1D::from_fn(g.clone(), |a| 2.0 + a).unwrap();
    let f = Sampled1D::from_fn(g.clone(), |a| (1.0 + a).recip()).unwrap();
    let y = carleman_solve(&h, &f, 0.0).unwrap();
    for ((y, h), f) in y.values().iter().zip(h.values()).zip(f.values()) {
        assert_eq!(*y, f / h);
    }
}

#[test]
fn regular_scaled_solution_satisfies_the_equation() {
    // (k/a)·y − λπH[y] = f with k(a) = a(1+a), so the coefficient is 1+a
    let g = grid(2000, 1e7, 1e-2);
    let hm = HilbertMatrix::new(g.clone());
    let lambda = -0.1;
    let k = Sampled1D::from_fn(g.clone(), |a| 1.0 + a).unwrap();
    let f = Sampled1D::from_fn(g.clone(), |a| 1.0 / (1.0 + a)).unwrap();
    let parts = carleman_parts_scaled(&hm, &k, &f, lambda).unwrap();
    let y = parts.with_constant(parts.regular_constant()).unwrap();
    let r = carleman_residual(&hm, k.values(), y.values(), f.values(), lambda, true);
    let q = g.nodes();
    let worst = (1..q.len() - 1)
        .filter(|&i| q[i] > 0.1 && q[i] < 50.0)
        .map(|i| r[i].abs())
        .fold(0.0, f64::max);
    assert!(worst < 5e-3, "{worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transform_is_linear(
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        s in 0.1f64..2.0,
        t in 0.1f64..5.0,
    ) {
        let g = grid(80, 1e3, 1e-2);
        let f = Sampled1D::from_fn(g.clone(), |q| (1.0 + q).powf(-s)).unwrap();
        let h = Sampled1D::from_fn(g.clone(), |q| (-q / t).exp()).unwrap();
        let mix: Vec<f64> = f.values().iter().zip(h.values()).map(|(a, b)| alpha * a + beta * b).collect();
        let mix = Sampled1D::linear(g.clone(), mix).unwrap();
        let (hf, hh, hm) = (hilbert_field(&f).unwrap(), hilbert_field(&h).unwrap(), hilbert_field(&mix).unwrap());
        for i in 0..g.n() {
            let want = alpha * hf.output.values()[i] + beta * hh.output.values()[i];
            let scale = alpha.abs() * hf.output.values()[i].abs() + beta.abs() * hh.output.values()[i].abs() + 1.0;
            prop_assert!((hm.output.values()[i] - want).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn interpolation_hits_nodes_and_stays_between_them(
        n in 3usize..60,
        seed in proptest::collection::vec(-5.0f64..5.0, 60),
        x in 0.0f64..1.0,
    ) {
        let g = grid(n, 100.0, 0.5);
        let vals: Vec<f64> = seed[..n].to_vec();
        for rule in [Interp::PiecewiseLinear, Interp::CubicSpline] {
            let s = Sampled1D::new(g.clone(), vals.clone(), rule).unwrap();
            for (i, q) in g.nodes().iter().enumerate() {
                prop_assert_eq!(s.eval(*q).unwrap(), vals[i]);
            }
        }
        let lin = Sampled1D::linear(g.clone(), vals.clone()).unwrap();
        let p = x * 100.0;
        let j = g.segment(p);
        let v = lin.eval(p).unwrap();
        prop_assert!(v >= vals[j].min(vals[j + 1]) - 1e-12 && v <= vals[j].max(vals[j + 1]) + 1e-12);
    }
}

#[test]
fn refinement_reproduces_smooth_data() {
    // resample linear data onto a finer grid: error O(Δ²) at the coarse nodes
    let coarse = grid(200, 1e4, 1e-2);
    let fine = grid(398, 1e4, 1e-2);
    let f = |q: f64| 1.0 / (1.0 + q);
    let s = Sampled1D::from_fn(coarse.clone(), f).unwrap();
    let r = s.resample(fine.clone()).unwrap();
    let back = r.resample(coarse.clone()).unwrap();
    for (a, b) in back.values().iter().zip(s.values()) {
        assert!((a - b).abs() < 1e-12);
    }
    let worst = fine
        .nodes()
        .iter()
        .zip(r.values())
        .map(|(q, v)| (v - f(*q)).abs())
        .fold(0.0, f64::max);
    let h = coarse.nodes()[2] / coarse.nodes()[1] - 1.0;
    assert!(worst < h * h, "{worst:e}");
}
