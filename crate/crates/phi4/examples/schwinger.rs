use phi4::schwinger::{bessel_reference_2pt, log_spaced, schwinger_profile};
use phi4::twopoint::two_point_field;
use phi4::{solve_boundary, ModelParams};

fn main() -> phi4::Result<()> {
    let lambda: f64 = std::env::args().nth(1).map_or(-0.1, |s| s.parse().unwrap());
    let sol = solve_boundary(&ModelParams::default().with_lambda(lambda), None)?;
    let field = two_point_field(&sol, 100)?;
    let rs = log_spaced(0.05, 10.0, 25)?;
    let t = std::time::Instant::now();
    let prof = schwinger_profile(&sol, &field, &rs)?;
    for (r, s) in rs.iter().zip(&prof.values) {
        println!(
            "{r:10.4} {s:14.6e} {:14.6e}",
            bessel_reference_2pt(*r, lambda)?
        );
    }
    println!("small-r slope {:.4}", prof.log_slope(0.05, 0.2)?);
    println!("decay rate {:.4}", prof.decay_rate(5.0, 10.0)?);
    println!("{:.2?}", t.elapsed());
    Ok(())
}
