use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use phi4::correlators::planar_npoint_moyal;
use phi4::schwinger::{bessel_reference_2pt, log_spaced, schwinger_profile};
use phi4::stieltjes::{widder_report, Which};
use phi4::sweep::{fit_critical, linspace, run_sweep, SweepMode};
use phi4::twopoint::two_point_field;
use phi4::{load_solution, save_solution, solve_boundary, BoundarySolution, ModelParams};

mod output;
use output::CsvOut;

#[derive(Parser)]
#[command(name = "phi4", version, about = "Planar quartic matrix model solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the boundary function G_{a0}
    Solve {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// CSV with columns a,G_a0,aH_G,h
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Full matrix 2-point function on a decimated grid
    Twopoint {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value_t = 100)]
        decimate: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coupling-constant sweep
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        lambda_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda_max: f64,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
        /// Fit 1+Y = A max(0, λ-λc)^α and print the result
        #[arg(long)]
        fit_critical: bool,
        /// Independent parallel solves instead of continuation
        #[arg(long)]
        cold: bool,
    },
    /// Widder criteria L_{k,t} and integrated densities
    Widder {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_enum)]
        which: WhichArg,
        #[arg(long)]
        k_max: usize,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        t_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Position-space 2-point function on log-spaced separations
    Schwinger {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        r_min: f64,
        #[arg(long)]
        r_max: f64,
        #[arg(long)]
        r_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Planar N-point function at continuous indices
    Npoint {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e7)]
    cutoff: f64,
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, default_value_t = phi4::grid::DEFAULT_X1)]
    x1: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    /// Permit λ > 0 (results are flagged experimental)
    #[arg(long)]
    allow_positive: bool,
}

impl SolverArgs {
    fn params(&self, lambda: f64) -> ModelParams {
        ModelParams {
            lambda,
            cutoff: self.cutoff,
            n: self.points,
            x1: self.x1,
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            allow_positive: self.allow_positive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Boundary,
    Diagonal,
}

/// Raised after all outputs are written when the solver stopped early.
#[derive(Debug)]
struct NotConverged(String);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NotConverged {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use phi4::Error as E;
    if err.is::<NotConverged>() {
        return 3;
    }
    match err.downcast_ref::<phi4::Error>() {
        Some(E::InvalidArgument(_) | E::Domain(_) | E::MissingDerivative(_))
        | Some(E::MissingProvider(_) | E::SizeLimit(_)) => 2,
        Some(E::NumericFailure(_) | E::DegenerateDenominator(_) | E::FitFailure(_)) => 3,
        Some(E::Io(_) | E::VersionMismatch { .. } | E::Integrity(_)) => 4,
        None if err.is::<std::io::Error>() || err.is::<csv::Error>() => 4,
        None => 1,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| phi4::Error::InvalidArgument(format!("THREADS={v} is not an integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<BoundarySolution> {
    Ok(load_solution(path)?)
}

fn solve(
    solver: &SolverArgs,
    lambda: f64,
    out: Option<&Path>,
    snapshot: Option<&Path>,
) -> anyhow::Result<()> {
    if out.is_none() && snapshot.is_none() {
        return Err(phi4::Error::InvalidArgument(
            "nothing to write: give --out and/or --snapshot".into(),
        )
        .into());
    }
    let sol = solve_boundary(&solver.params(lambda), None)?;
    eprintln!(
        "1+Y = {:.10}  lambda_eff = {:.10}  residual = {:.3e}  iterations = {}{}",
        1.0 + sol.y,
        sol.lambda_eff,
        sol.residual,
        sol.iterations,
        if sol.experimental {
            "  (experimental)"
        } else {
            ""
        }
    );
    if let Some(path) = out {
        let mut w = CsvOut::create(path, &["a", "G_a0", "aH_G", "h"])?;
        let q = sol.grid().nodes();
        for i in 0..q.len() {
            let ah = if i == 0 {
                0.0
            } else {
                q[i] * sol.hg.values()[i]
            };
            w.row(&[q[i], sol.g.values()[i], ah, sol.h.values()[i]])?;
        }
        w.finish()?;
    }
    if let Some(path) = snapshot {
        save_solution(&sol, path)?;
    }
    if !sol.converged {
        bail!(NotConverged(format!(
            "no convergence after {} iterations (residual {:.3e})",
            sol.iterations, sol.residual
        )));
    }
    Ok(())
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Solve {
            solver,
            lambda,
            out,
            snapshot,
        } => solve(&solver, lambda, out.as_deref(), snapshot.as_deref()),
        Command::Twopoint {
            snapshot,
            decimate,
            out,
        } => {
            let sol = load(&snapshot)?;
            let field = two_point_field(&sol, decimate)?;
            eprintln!("max asymmetry {:.4}", field.max_asymmetry);
            let mut w = CsvOut::create(&out, &["a", "b", "G_ab"])?;
            for (i, a) in field.a_nodes.iter().enumerate() {
                for (j, b) in field.b_nodes.iter().enumerate() {
                    w.row(&[*a, *b, field.values[i][j]])?;
                }
            }
            w.finish()
        }
        Command::Sweep {
            lambda_min,
            lambda_max,
            steps,
            solver,
            out,
            fit_critical: fit,
            cold,
        } => {
            let lambdas = linspace(lambda_min, lambda_max, steps)?;
            let mode = if cold {
                SweepMode::Cold
            } else {
                SweepMode::Continuation
            };
            let run = run_sweep(&solver.params(lambdas[0]), &lambdas, mode)?;
            let mut w = CsvOut::create(
                &out,
                &[
                    "lambda",
                    "Y",
                    "lambda_eff",
                    "max_asymmetry",
                    "iterations",
                    "converged",
                ],
            )?;
            for r in &run.records {
                w.record(&[
                    output::float(r.lambda),
                    output::float(r.y),
                    output::float(r.lambda_eff),
                    output::float(r.max_asymmetry),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                ])?;
            }
            w.finish()?;
            let failed = run.records.iter().filter(|r| !r.converged).count();
            if failed > 0 {
                eprintln!("{failed} of {} solves did not converge", run.records.len());
            }
            if fit {
                let f = fit_critical(&run.records)?;
                println!(
                    "lambda_c = {:.6}  A = {:.6}  alpha = {:.6}  fit_residual = {:.3e}  window = [{}, {}]",
                    f.lambda_c, f.a, f.alpha, f.fit_residual, f.window.0, f.window.1
                );
                match f.raw_zero {
                    Some(z) => println!("1+Y first reaches 0 at lambda = {z:.6}"),
                    None => println!("1+Y stays positive on the sweep"),
                }
            }
            Ok(())
        }
        Command::Widder {
            snapshot,
            which,
            k_max,
            t_max,
            t_points,
            out,
        } => {
            if t_points == 0 || !(t_max > 0.0) {
                return Err(
                    phi4::Error::InvalidArgument("need t_max > 0 and t_points ≥ 1".into()).into(),
                );
            }
            let sol = load(&snapshot)?;
            let which = match which {
                WhichArg::Boundary => Which::Boundary,
                WhichArg::Diagonal => Which::Diagonal,
            };
            let t: Vec<f64> = (1..=t_points)
                .map(|i| t_max * i as f64 / t_points as f64)
                .collect();
            let rep = widder_report(&sol, which, k_max, &t)?;
            eprintln!(
                "verdict {:?}  mass gap estimate {:.4}",
                rep.verdict, rep.mass_gap_estimate
            );
            let mut w = CsvOut::create(&out, &["k", "t", "L_kt", "rho_k"])?;
            for (ki, k) in rep.k_list.iter().enumerate() {
                for (ti, t) in rep.t_nodes.iter().enumerate() {
                    w.record(&[
                        k.to_string(),
                        output::float(*t),
                        output::float(rep.l_table[ki][ti]),
                        output::float(rep.rho_table[ki][ti]),
                    ])?;
                }
            }
            w.finish()
        }
        Command::Schwinger {
            snapshot,
            r_min,
            r_max,
            r_points,
            out,
        } => {
            let rs = log_spaced(r_min, r_max, r_points)?;
            let sol = load(&snapshot)?;
            let field = two_point_field(&sol, 100.min(sol.grid().n()))?;
            let prof = schwinger_profile(&sol, &field, &rs)?;
            let mut w = CsvOut::create(&out, &["r", "S_r", "reference_r"])?;
            for (r, s) in rs.iter().zip(&prof.values) {
                w.row(&[*r, *s, bessel_reference_2pt(*r, sol.lambda())?])?;
            }
            w.finish()
        }
        Command::Npoint {
            snapshot,
            indices,
            out,
        } => {
            let sol = load(&snapshot)?;
            let field = two_point_field(&sol, 100.min(sol.grid().n()))?;
            let v = planar_npoint_moyal(&sol, &field, &indices)?;
            let joined: Vec<String> = indices.iter().map(|x| output::float(*x)).collect();
            let mut w = CsvOut::create(&out, &["N", "indices", "G_N"])?;
            w.record(&[
                indices.len().to_string(),
                joined.join(" "),
                output::float(v),
            ])?;
            w.finish()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(cli.cmd));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
