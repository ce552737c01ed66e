// Geometric programs: a plain GP, then a ratio of posynomials solved by
// single condensation.
//
// `cargo run --example gp_condensation`

use noma_ee::gp::{
    log_rate_approx, solve_condensation, solve_gp, CondensationOptions, Constraint, GpOptions, GpProblem, Monomial,
    Objective, Posynomial, SeriesTerms,
};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    // minimize q1 + q2 subject to 1 / (q1 q2) <= 1
    let obj = Posynomial::new(vec![Monomial::var(1.0, 2, 0), Monomial::var(1.0, 2, 1)])?;
    let prob = GpProblem::new(2, Objective::Posynomial(obj))
        .constrain(Constraint::Posynomial(Monomial::new(1.0, vec![-1.0, -1.0]).into()));
    let sol = solve_gp(&prob, None, &GpOptions::default())?;
    println!("GP: q = {:.6?}, objective {:.6}", sol.q, sol.objective);

    // minimize (q1 + q2 + 1) / (q1 + q2^2) over the box [0.1, 10]^2
    let num = Posynomial::new(vec![
        Monomial::var(1.0, 2, 0),
        Monomial::var(1.0, 2, 1),
        Monomial::constant(1.0, 2),
    ])?;
    let den = Posynomial::new(vec![Monomial::var(1.0, 2, 0), Monomial::sparse(1.0, 2, &[(1, 2.0)])])?;
    let prob = GpProblem::new(2, Objective::Ratio { num, den })
        .with_bounds(0, 0.1, 10.0)
        .with_bounds(1, 0.1, 10.0);
    let res = solve_condensation(&prob, &[1.0, 1.0], &CondensationOptions::default())?;
    println!(
        "ratio: q = {:.4?}, objective {:.6}, {} outer iterations, converged {}",
        res.q, res.objective, res.iterations, res.converged
    );
    let mut trace = Vec::new();
    res.write_trace_csv(&mut trace)?;
    print!("{}", String::from_utf8(trace)?);

    for x in [0.5, 1.0, 3.0] {
        println!(
            "ln(1 + {x}) = {:.4}; one term {:.4}, two terms {:.4}",
            f64::ln_1p(x),
            log_rate_approx(x, SeriesTerms::One),
            log_rate_approx(x, SeriesTerms::Two)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
