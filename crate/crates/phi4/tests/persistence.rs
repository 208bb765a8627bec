use phi4::snapshot::{from_json, to_json, SolutionSnapshot, INTEGRITY_TOL};
use phi4::{load_solution, save_solution, solve_boundary, Error, ModelParams};

#[test]
fn default_configuration_round_trip() {
    let sol = solve_boundary(&ModelParams::default(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("default.json");
    save_solution(&sol, &path).unwrap();
    let back = load_solution(&path).unwrap();
    assert_eq!(back.g.values(), sol.g.values());
    assert_eq!(back.h.values(), sol.h.values());
    assert_eq!(back.hg.values(), sol.hg.values());
    assert_eq!((back.y, back.lambda_eff), (sol.y, sol.lambda_eff));
    assert!((back.recompute_residual().unwrap() - sol.residual).abs() <= INTEGRITY_TOL);
    // saving the restored solution again gives the same document up to the timestamp
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.contains("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip(to_json(&back).unwrap()),
        strip(to_json(&sol).unwrap())
    );
}

#[test]
fn stored_diagnostics_are_checked() {
    let p = ModelParams {
        lambda: -0.2,
        cutoff: 1e4,
        n: 300,
        ..Default::default()
    };
    let sol = solve_boundary(&p, None).unwrap();
    let mut snap = SolutionSnapshot::from_solution(&sol);
    snap.residual += 1e-6;
    assert!(matches!(snap.restore(), Err(Error::Integrity(_))));
    let mut snap = SolutionSnapshot::from_solution(&sol);
    snap.lambda_eff += 1e-6;
    assert!(matches!(snap.restore(), Err(Error::Integrity(_))));
    let mut snap = SolutionSnapshot::from_solution(&sol);
    snap.nodes[3] *= 1.0 + 1e-9;
    assert!(matches!(snap.restore(), Err(Error::Integrity(_))));
    assert!(matches!(from_json("{}"), Err(Error::Integrity(_))));
}
