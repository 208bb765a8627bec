use std::sync::Arc;

use phi4::perturbation::pert_boundary;
use phi4::solver::solve_with;
use phi4::{apply_T, solve_boundary, ModelParams, Sampled1D, Workspace};
use proptest::prelude::*;

fn params(lambda: f64, cutoff: f64, n: usize) -> ModelParams {
    ModelParams {
        lambda,
        cutoff,
        n,
        ..Default::default()
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `G(0) = 1`, decreasing, and above the free propagator: `(1+b)^{−s}·(1 + c·b/(1+b)·e^{−b/w})`.
fn admissible(ws: &Workspace, s: f64, c: f64, w: f64) -> Vec<f64> {
    ws.grid
        .nodes()
        .iter()
        .map(|&b| (1.0 + b).powf(-s) * (1.0 + c * b / (1.0 + b) * (-b / w).exp()))
        .collect()
}

#[test]
fn free_theory_any_grid() {
    for (cutoff, n) in [(1e4, 500), (1e7, 2000), (50.0, 3)] {
        let sol = solve_boundary(&params(0.0, cutoff, n), None).unwrap();
        assert!(sol.converged && sol.iterations <= 2);
        assert!(sol.y.abs() <= 1e-10 && sol.lambda_eff.abs() <= 1e-10);
        for (g, a) in sol.g.values().iter().zip(sol.grid().nodes()) {
            assert!((g - 1.0 / (1.0 + a)).abs() <= 1e-12);
        }
    }
}

#[test]
fn weak_coupling_matches_first_order() {
    let sol = solve_boundary(&params(-0.01, 1e6, 1000), None).unwrap();
    assert!(sol.converged);
    let q = sol.grid().nodes();
    let worst = (0..q.len() - 1)
        .map(|i| (sol.g.values()[i] - pert_boundary(q[i], -0.01)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 5e-4, "{worst:e}");
    assert!((sol.y + 0.01).abs() <= 2e-3);
    assert!((sol.lambda_eff + 0.01).abs() <= 2e-3);
    // (TG)(1) at the fixed point: 0.5 + 0.01·ln(2)/2
    let tg = apply_T(&sol.g, &sol.params).unwrap();
    assert!((tg.eval(1.0).unwrap() - 0.503466).abs() <= 5e-4);
}

#[test]
fn paper_configuration_converges_quickly() {
    let t = std::time::Instant::now();
    let sol = solve_boundary(&ModelParams::default(), None).unwrap();
    assert!(sol.converged && sol.residual <= 1e-8 && sol.iterations <= 200);
    assert_eq!(sol.cone.violations, 0);
    assert!(sol.cone.monotone);
    assert_eq!(sol.recompute_residual().unwrap(), sol.residual);
    // regression anchor from the first verified run
    assert!(
        (sol.lambda_eff + 0.100_754_94).abs() < 1e-7,
        "{}",
        sol.lambda_eff
    );
    assert!((1.0 + sol.y - 0.888_546_43).abs() < 1e-7);
    assert!(t.elapsed().as_secs() < 60);
}

#[test]
fn strong_coupling_loses_wavefunction_normalisation() {
    let sol = solve_boundary(&params(-0.5, 1e7, 2000), None).unwrap();
    assert!(sol.converged);
    assert!(1.0 + sol.y <= 0.02, "1+Y = {}", 1.0 + sol.y);
}

#[test]
fn refinement_changes_little() {
    let coarse = solve_boundary(&params(-0.1, 1e7, 2000), None).unwrap();
    // twice the intervals: every other node is shared
    let fine = solve_boundary(&params(-0.1, 1e7, 3998), None).unwrap();
    let (gc, gf) = (coarse.g.values(), fine.g.values());
    let worst = (0..gc.len() - 1)
        .map(|i| (gc[i] - gf[(2 * i).saturating_sub(1)]).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst:e}");
}

#[test]
fn warm_start_reaches_the_same_fixed_point() {
    let p = params(-0.2, 1e5, 600);
    let ws = Workspace::for_params(&p).unwrap();
    let cold = solve_with(&p, ws.clone(), None).unwrap();
    let seed = solve_with(&params(-0.15, 1e5, 600), ws.clone(), None).unwrap();
    let warm = solve_with(&p, ws, Some(seed.g.values())).unwrap();
    assert!(warm.iterations < cold.iterations);
    assert!(sup_diff(warm.g.values(), cold.g.values()) < 1e-8);
}

#[test]
fn damping_keeps_the_fixed_point() {
    let mut p = params(-0.3, 1e5, 600);
    let plain = solve_boundary(&p, None).unwrap();
    p.damping = 0.4;
    let damped = solve_boundary(&p, None).unwrap();
    assert!(damped.converged);
    assert!(sup_diff(plain.g.values(), damped.g.values()) < 1e-7);
}

#[test]
fn rejects_non_normalised_input() {
    let p = params(-0.1, 1e3, 50);
    let ws = Workspace::for_params(&p).unwrap();
    let mut g = admissible(&ws, 1.0, 0.0, 1.0);
    g[0] = 0.9;
    let s = Sampled1D::linear(ws.grid.clone(), g).unwrap();
    assert!(apply_T(&s, &p).is_err());
}

fn contraction_ws() -> Arc<Workspace> {
    Workspace::for_params(&params(-0.1, 1e5, 400)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // For λ < 0 the map pushes G above the free propagator; see the decisions notes.
    #[test]
    fn master_map_preserves_the_cone(
        lambda in -1.0f64..0.0,
        s in 0.6f64..1.0,
        c in 0.0f64..0.5,
        w in 0.5f64..50.0,
    ) {
        let ws = contraction_ws();
        let g = admissible(&ws, s, c, w);
        let tg = ws.apply_t(&g, lambda).unwrap();
        prop_assert_eq!(tg[0], 1.0);
        for (v, b) in tg.iter().zip(ws.grid.nodes()) {
            prop_assert!(*v > 0.0);
            prop_assert!(*v >= (1.0 / (1.0 + b)) * (1.0 - 1e-14));
        }
    }

    #[test]
    fn master_map_contracts(
        s1 in 0.85f64..1.0, s2 in 0.85f64..1.0,
        c1 in 0.0f64..0.3, c2 in 0.0f64..0.3,
    ) {
        let ws = contraction_ws();
        let (g1, g2) = (admissible(&ws, s1, c1, 5.0), admissible(&ws, s2, c2, 5.0));
        let d = sup_diff(&g1, &g2);
        prop_assume!(d > 1e-6);
        let t1 = ws.apply_t(&g1, -0.1).unwrap();
        let t2 = ws.apply_t(&g2, -0.1).unwrap();
        let q = sup_diff(&t1, &t2) / d;
        prop_assert!(q < 1.0, "contraction ratio {}", q);
    }
}

#[test]
fn free_map_is_exact_for_any_input() {
    let ws = contraction_ws();
    let g = admissible(&ws, 0.9, 0.2, 3.0);
    let tg = ws.apply_t(&g, 0.0).unwrap();
    for (v, b) in tg.iter().zip(ws.grid.nodes()) {
        assert_eq!(*v, 1.0 / (1.0 + b));
    }
}
