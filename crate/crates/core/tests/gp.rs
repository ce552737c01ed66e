use noma_ee::gp::{
    condense, log_rate_approx, solve_condensation, solve_gp, CondensationOptions, Constraint,
    GpError, GpOptions, GpProblem, Monomial, Objective, Posynomial, SeriesTerms,
};
use proptest::prelude::*;

fn posy(terms: Vec<Monomial>) -> Posynomial {
    Posynomial::new(terms).unwrap()
}

fn naive_eval(p: &Posynomial, q: &[f64]) -> f64 {
    let mut total = 0.0;
    for t in p.terms() {
        let mut v = t.coeff;
        for (i, a) in t.exponents.iter().enumerate() {
            v *= q[i].powf(*a);
        }
        total += v;
    }
    total
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

#[test]
fn minimize_q_with_lower_bound() {
    let prob = GpProblem::new(1, Objective::Posynomial(Monomial::var(1.0, 1, 0).into()))
        .constrain(Constraint::Posynomial(Monomial::new(1.0, vec![-1.0]).into()));
    let sol = solve_gp(&prob, None, &GpOptions::default()).unwrap();
    assert!((sol.q[0] - 1.0).abs() < 1e-6, "{:?}", sol.q);
    assert!((sol.objective - 1.0).abs() < 1e-6);
}

#[test]
fn symmetric_sum_under_product_bound() {
    let obj = posy(vec![Monomial::var(1.0, 2, 0), Monomial::var(1.0, 2, 1)]);
    let prob = GpProblem::new(2, Objective::Posynomial(obj))
        .constrain(Constraint::Posynomial(Monomial::new(1.0, vec![-1.0, -1.0]).into()));
    let sol = solve_gp(&prob, None, &GpOptions::default()).unwrap();
    assert!((sol.q[0] - 1.0).abs() < 1e-5 && (sol.q[1] - 1.0).abs() < 1e-5);
    assert!((sol.objective - 2.0).abs() < 1e-6);
    assert!(sol.gap < 1e-8);
}

#[test]
fn product_objective_matches_grid() {
    // min q1 q2  s.t. 1/(q1 q2^2) <= 1, q1 <= 2
    let prob = GpProblem::new(2, Objective::Posynomial(Monomial::new(1.0, vec![1.0, 1.0]).into()))
        .constrain(Constraint::Posynomial(Monomial::new(1.0, vec![-1.0, -2.0]).into()))
        .constrain(Constraint::Posynomial(Monomial::var(0.5, 2, 0).into()))
        .with_bounds(0, 1e-3, 1e3)
        .with_bounds(1, 1e-3, 1e3);
    let sol = solve_gp(&prob, None, &GpOptions::default()).unwrap();

    // q1 on a log grid over its box (endpoints included), q2 on a fine
    // uniform grid wide enough to contain every binding value
    let mut best = f64::INFINITY;
    for q1 in log_grid(1e-3, 2.0, 300) {
        for j in 0..=40_000 {
            let q2 = 0.5 + j as f64 * 1e-3;
            if 1.0 / (q1 * q2 * q2) <= 1.0 {
                best = best.min(q1 * q2);
                break;
            }
        }
    }
    assert!((sol.objective - best).abs() / best < 1e-3, "{} vs {best}", sol.objective);
}

#[test]
fn infeasible_problem_is_reported() {
    // q <= 1 and 2/q <= 1 cannot both hold
    let prob = GpProblem::new(1, Objective::Posynomial(Monomial::var(1.0, 1, 0).into()))
        .constrain(Constraint::Posynomial(Monomial::var(1.0, 1, 0).into()))
        .constrain(Constraint::Posynomial(Monomial::new(2.0, vec![-1.0]).into()))
        .with_bounds(0, 1e-6, 1e6);
    let err = solve_gp(&prob, None, &GpOptions::default()).unwrap_err();
    assert!(matches!(err, GpError::Infeasible { .. }), "{err:?}");
}

#[test]
fn monomial_equality_is_respected() {
    // min q1 + q2 s.t. q1 q2 = 4  ->  (2, 2)
    let obj = posy(vec![Monomial::var(1.0, 2, 0), Monomial::var(1.0, 2, 1)]);
    let prob = GpProblem::new(2, Objective::Posynomial(obj))
        .constrain(Constraint::MonomialEq(Monomial::new(0.25, vec![1.0, 1.0])))
        .with_bounds(0, 1e-4, 1e4)
        .with_bounds(1, 1e-4, 1e4);
    let sol = solve_gp(&prob, Some(&[1.0, 1.0]), &GpOptions::default()).unwrap();
    assert!((sol.q[0] - 2.0).abs() < 1e-5 && (sol.q[1] - 2.0).abs() < 1e-5, "{:?}", sol.q);
}

#[test]
fn ratio_with_monomial_denominator_converges_at_once() {
    let num = posy(vec![Monomial::var(1.0, 1, 0), Monomial::new(1.0, vec![-1.0])]);
    let den: Posynomial = Monomial::new(2.0, vec![0.0]).into();
    let prob = GpProblem::new(1, Objective::Ratio { num, den }).with_bounds(0, 0.01, 100.0);
    let res = solve_condensation(&prob, &[3.0], &CondensationOptions::default()).unwrap();
    assert!(res.converged);
    // the first solve lands on the optimum; the second only confirms it
    assert!(res.iterations <= 2, "{}", res.iterations);
    assert!((res.q[0] - 1.0).abs() < 1e-4);
    assert!((res.objective - 1.0).abs() < 1e-8);
}

#[test]
fn ratio_objective_matches_grid() {
    // (q1 + q2) / (q1 q2)^{1/2} over [0.1, 10]^2
    let num = posy(vec![Monomial::var(1.0, 2, 0), Monomial::var(1.0, 2, 1)]);
    let den: Posynomial = Monomial::new(1.0, vec![0.5, 0.5]).into();
    let prob = GpProblem::new(2, Objective::Ratio { num, den })
        .with_bounds(0, 0.1, 10.0)
        .with_bounds(1, 0.1, 10.0);
    let res = solve_condensation(&prob, &[0.5, 4.0], &CondensationOptions::default()).unwrap();
    let grid = log_grid(0.1, 10.0, 401);
    let mut best = f64::INFINITY;
    for a in &grid {
        for b in &grid {
            best = best.min((a + b) / (a * b).sqrt());
        }
    }
    assert!((res.objective - best).abs() / best < 1e-3);
}

#[test]
fn condensation_history_is_monotone_and_csv_dumps() {
    // (1 + q) / (q + q^2) style ratio: genuinely needs several condensations
    let num = posy(vec![Monomial::constant(1.0, 1), Monomial::new(1.0, vec![2.0])]);
    let den = posy(vec![Monomial::var(1.0, 1, 0), Monomial::constant(0.5, 1)]);
    let prob = GpProblem::new(1, Objective::Ratio { num, den }).with_bounds(0, 1e-3, 1e3);
    let res = solve_condensation(&prob, &[20.0], &CondensationOptions::default()).unwrap();
    assert!(res.iterations > 1);
    for w in res.history.windows(2) {
        assert!(w[1].condensed_objective <= w[0].condensed_objective * (1.0 + 1e-9));
        assert!(w[1].objective <= w[0].objective * (1.0 + 1e-9));
    }
    let start = prob.objective_value(&[20.0]).unwrap();
    assert!(res.objective <= start);
    let mut buf = Vec::new();
    res.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("iteration,objective,condensed_objective,step_norm"));
    assert_eq!(text.lines().count(), res.history.len() + 1);
}

#[test]
fn ratio_constraint_is_condensed() {
    // min q s.t. 2 / (q + 1) <= 1  ->  q = 1
    let prob = GpProblem::new(1, Objective::Posynomial(Monomial::var(1.0, 1, 0).into()))
        .constrain(Constraint::Ratio {
            num: Monomial::constant(2.0, 1).into(),
            den: posy(vec![Monomial::var(1.0, 1, 0), Monomial::constant(1.0, 1)]),
        })
        .with_bounds(0, 1e-3, 1e3);
    let res = solve_condensation(&prob, &[5.0], &CondensationOptions::default()).unwrap();
    assert!(res.converged);
    assert!((res.q[0] - 1.0).abs() < 1e-3, "{:?}", res.q);
}

#[test]
fn series_is_increasing_and_two_terms_are_tighter() {
    let mut prev = (0.0, 0.0);
    for i in 1..=3000 {
        let x = i as f64 * 1e-3;
        let one = log_rate_approx(x, SeriesTerms::One);
        let two = log_rate_approx(x, SeriesTerms::Two);
        assert!(one > prev.0 && two > prev.1);
        let truth = x.ln_1p();
        assert!(truth - two < truth - one);
        assert!(two <= truth && one <= truth);
        prev = (one, two);
    }
}

fn arb_posynomial(dim: usize, max_terms: usize) -> impl Strategy<Value = Posynomial> {
    prop::collection::vec(
        (0.05f64..20.0, prop::collection::vec(-2.0f64..2.0, dim)),
        1..=max_terms,
    )
    .prop_map(|terms| {
        Posynomial::new(terms.into_iter().map(|(c, e)| Monomial::new(c, e)).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_matches_naive_sum(
        p in arb_posynomial(3, 5),
        q in prop::collection::vec(0.05f64..20.0, 3),
    ) {
        let v = p.evaluate(&q).unwrap();
        let naive = naive_eval(&p, &q);
        prop_assert!((v - naive).abs() <= 1e-12 * naive.abs());
        prop_assert!(v > 0.0);
    }

    #[test]
    fn condensation_is_tight_and_underestimates(
        p in arb_posynomial(3, 5),
        q0 in prop::collection::vec(0.05f64..20.0, 3),
        pts in prop::collection::vec(prop::collection::vec(0.01f64..100.0, 3), 50),
    ) {
        let m = condense(&p, &q0).unwrap();
        let at = p.evaluate(&q0).unwrap();
        prop_assert!((m.evaluate(&q0) - at).abs() <= 1e-12 * at);
        for q in &pts {
            prop_assert!(m.evaluate(q) <= p.evaluate(q).unwrap() * (1.0 + 1e-12));
        }
        // gradients agree at the expansion point
        let gp = p.gradient(&q0).unwrap();
        let gm = Posynomial::from_monomial(m).gradient(&q0).unwrap();
        for (a, b) in gp.iter().zip(&gm) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn product_agrees_with_pointwise_product(
        a in arb_posynomial(2, 3),
        b in arb_posynomial(2, 3),
        q in prop::collection::vec(0.1f64..10.0, 2),
    ) {
        let prod = &a * &b;
        let lhs = prod.evaluate(&q).unwrap();
        let rhs = a.evaluate(&q).unwrap() * b.evaluate(&q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }
}
