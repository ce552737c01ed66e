use noma_ee::channel::Scenario;
use noma_ee::gp::SeriesTerms;
use noma_ee::noma::{ftpa_split, slots_ee, total_ee, Assignment, PowerAllocation};
use noma_ee::power::{
    baseline_full_power, greedy_eem_allocate, joint_gp_allocate, min_rate_floors, per_sc_gp_allocate,
    solve_subchannel_ee, PowerOptions, SubchannelEeProblem,
};
use proptest::prelude::*;

fn single(h: f64, p_c: f64, cap: f64) -> SubchannelEeProblem {
    SubchannelEeProblem {
        sc: 0,
        users: vec![0],
        snr: vec![h],
        gamma: vec![1.0],
        sinr_gap: 1.0,
        p_c,
        p_cap: cap,
        p_init: cap,
    }
}

/// Best value of `f` over `points` log-spaced samples of `(lo, hi]`.
fn log_scan(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=points {
        let p = lo * (hi / lo).powf(i as f64 / points as f64);
        let v = f(p);
        if v > best.1 {
            best = (p, v);
        }
    }
    best
}

fn ee_single(h: f64, p_c: f64, p: f64) -> f64 {
    (h * p).ln_1p() / std::f64::consts::LN_2 / (p_c + p)
}

#[test]
fn singleton_matches_uniform_scan() {
    let prob = single(1.0, 1.0, 10.0);
    let sol = solve_subchannel_ee(&prob, &PowerOptions::default()).unwrap();
    // uniform scan of (0, 10] at step 1e-4
    let mut best = 0.0f64;
    for i in 1..=100_000 {
        best = best.max(ee_single(1.0, 1.0, i as f64 * 1e-4));
    }
    assert!((sol.ee - best).abs() <= 1e-4 * best, "{} vs {best}", sol.ee);
    // stationary point of ln(1+p)/(1+p) is p = e - 1
    assert!((sol.p - (std::f64::consts::E - 1.0)).abs() < 1e-3, "{}", sol.p);
}

#[test]
fn tiny_cap_gives_tiny_power() {
    let prob = single(1.0, 1.0, 1e-9);
    let sol = solve_subchannel_ee(&prob, &PowerOptions::default()).unwrap();
    assert!(sol.p <= 1e-9 * (1.0 + 1e-12));
    assert!(sol.ee < 1e-8);
}

#[test]
fn optimum_power_grows_with_circuit_power() {
    let mut last = 0.0;
    for p_c in [0.25, 1.0, 1.5, 2.0, 3.0, 4.5] {
        let prob = SubchannelEeProblem {
            sc: 0,
            users: vec![0, 1],
            snr: vec![3e6, 2e4],
            gamma: vec![0.3, 0.7],
            sinr_gap: 0.1229,
            p_c,
            p_cap: 200.0,
            p_init: 10.0,
        };
        let sol = solve_subchannel_ee(&prob, &PowerOptions::default()).unwrap();
        assert!(sol.p >= last, "p* fell from {last} to {} at p_c = {p_c}", sol.p);
        last = sol.p;
    }
}

#[test]
fn fixed_series_alone_is_biased_at_high_snr() {
    // the zero-centred series saturates; refinement recovers the optimum
    let prob = single(1e5, 1.5, 100.0);
    let plain = PowerOptions {
        refine: false,
        ..PowerOptions::default()
    };
    let rough = solve_subchannel_ee(&prob, &plain).unwrap();
    let refined = solve_subchannel_ee(&prob, &PowerOptions::default()).unwrap();
    let (_, best) = log_scan(1e-9, 100.0, 200_000, |p| ee_single(1e5, 1.5, p));
    assert!(rough.ee < 0.9 * best);
    assert!((refined.ee - best).abs() <= 1e-4 * best);
}

#[test]
fn two_term_series_also_converges() {
    let prob = single(50.0, 1.0, 10.0);
    let opts = PowerOptions {
        log_terms: SeriesTerms::Two,
        ..PowerOptions::default()
    };
    let sol = solve_subchannel_ee(&prob, &opts).unwrap();
    let (_, best) = log_scan(1e-9, 10.0, 200_000, |p| ee_single(50.0, 1.0, p));
    assert!((sol.ee - best).abs() <= 1e-4 * best);
}

fn arb_problem() -> impl Strategy<Value = SubchannelEeProblem> {
    (
        prop::collection::vec(-1.0f64..7.0, 1..=4),
        -1.0f64..0.0,
        0.1f64..5.0,
        -2.0f64..2.0,
        prop::bool::ANY,
    )
        .prop_map(|(mut logs, alpha, p_c, log_cap, gapped)| {
            logs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let snr: Vec<f64> = logs.iter().map(|l| 10f64.powf(*l)).collect();
            let w: Vec<f64> = snr.iter().map(|h| (h / snr[0]).powf(alpha)).collect();
            let s: f64 = w.iter().sum();
            let cap = 10f64.powf(log_cap);
            SubchannelEeProblem {
                sc: 0,
                users: (0..snr.len()).collect(),
                gamma: w.iter().map(|v| v / s).collect(),
                snr,
                sinr_gap: if gapped { 0.1229 } else { 1.0 },
                p_c,
                p_cap: cap,
                p_init: cap * 0.3,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn subchannel_solve_matches_scan(prob in arb_problem()) {
        let sol = solve_subchannel_ee(&prob, &PowerOptions::default()).unwrap();
        let (_, best) = log_scan(prob.p_cap * 1e-10, prob.p_cap, 100_000, |p| prob.ee(p));
        prop_assert!(sol.p <= prob.p_cap * (1.0 + 1e-12));
        prop_assert!(sol.ee >= best * (1.0 - 1e-4), "{} vs {}", sol.ee, best);
        prop_assert!(sol.ee >= prob.ee(prob.p_init) && sol.ee >= prob.ee(prob.p_cap));
    }
}

fn scen(gains: Vec<Vec<f64>>, k: usize, p_max: f64, p_c: f64) -> Scenario {
    Scenario::from_gains(gains, k, p_max, p_c).unwrap()
}

#[test]
fn per_sc_single_member_matches_scan() {
    let s = scen(vec![vec![4.0]], 1, 50.0, 1.0);
    let out = per_sc_gp_allocate(0, &[0], 20.0, &s, &PowerOptions::default());
    assert!(!out.fallback);
    let (_, best) = log_scan(1e-9, 20.0, 200_000, |p| ee_single(4.0, 1.0, p));
    assert!((out.ee - best).abs() <= 1e-4 * best, "{} vs {best}", out.ee);
}

#[test]
fn per_sc_beats_ftpa_at_same_total() {
    let s = scen(vec![vec![900.0], vec![12.0]], 2, 100.0, 1.0);
    let out = per_sc_gp_allocate(0, &[0, 1], 10.0, &s, &PowerOptions::default());
    let total: f64 = out.powers.iter().map(|(_, p)| p).sum();
    let ftpa = slots_ee(&s, 0, &ftpa_split(0, &[0, 1], total, &s));
    assert!(out.ee >= ftpa * (1.0 - 1e-9), "{} < {ftpa}", out.ee);
}

#[test]
fn per_sc_without_gap_reaches_equal_split_optimum() {
    // with order constraints and no SINR gap the best split of any total is
    // the equal one, so the optimum is a one-variable problem
    let s = scen(vec![vec![5e3], vec![40.0], vec![2.0]], 3, 100.0, 1.5);
    let out = per_sc_gp_allocate(0, &[0, 1, 2], 100.0, &s, &PowerOptions::default());
    let equal = SubchannelEeProblem {
        sc: 0,
        users: vec![0, 1, 2],
        snr: vec![5e3, 40.0, 2.0],
        gamma: vec![1.0 / 3.0; 3],
        sinr_gap: 1.0,
        p_c: 1.5,
        p_cap: 100.0,
        p_init: 1.0,
    };
    let (_, best) = log_scan(1e-9, 100.0, 200_000, |p| equal.ee(p));
    assert!((out.ee - best).abs() <= 1e-4 * best, "{} vs {best}", out.ee);
}

#[test]
fn per_sc_chain_respects_order() {
    let s = scen(vec![vec![50.0], vec![8.0], vec![0.5]], 3, 30.0, 1.0);
    let out = per_sc_gp_allocate(0, &[0, 1, 2], 10.0, &s, &PowerOptions::default());
    let p = |m: usize| out.powers.iter().find(|(u, _)| *u == m).unwrap().1;
    assert!(p(0) <= p(1) * (1.0 + 1e-9) && p(1) <= p(2) * (1.0 + 1e-9));
    assert!(p(0) + p(1) + p(2) <= 10.0 * (1.0 + 1e-9));
}

#[test]
fn joint_single_slot_matches_scan() {
    let s = scen(vec![vec![1.0]], 1, 1e3, 1.0);
    let asg = Assignment::from_members(1, &[vec![0]]);
    let out = joint_gp_allocate(&asg, &s, &PowerOptions::default()).unwrap();
    let (_, best) = log_scan(1e-9, 1e3, 200_000, |p| ee_single(1.0, 1.0, p));
    assert!((out.ee - best).abs() <= 1e-3 * best);
}

#[test]
fn joint_with_vanishing_budget() {
    let s = scen(vec![vec![1.0]], 1, 1e-9, 1.0);
    let asg = Assignment::from_members(1, &[vec![0]]);
    let out = joint_gp_allocate(&asg, &s, &PowerOptions::default()).unwrap();
    assert!(out.allocation.total() <= 1e-9 * (1.0 + 1e-6));
    assert!(out.ee < 1e-8);
}

#[test]
fn joint_symmetric_subchannels_get_equal_power() {
    let s = scen(vec![vec![30.0, 0.1], vec![0.1, 30.0]], 1, 100.0, 1.0);
    let asg = Assignment::from_members(2, &[vec![0], vec![1]]);
    let out = joint_gp_allocate(&asg, &s, &PowerOptions::default()).unwrap();
    let (a, b) = (out.allocation.sc_total(0), out.allocation.sc_total(1));
    assert!((a - b).abs() <= 1e-4 * a, "{a} vs {b}");
}

#[test]
fn joint_binding_budget_matches_split_scan() {
    // the optima alone are near 0.45 W and 0.9 W; a budget of 0.8 W binds
    let s = scen(vec![vec![40.0, 1e-6], vec![1e-6, 5.0]], 1, 0.8, 1.0);
    let asg = Assignment::from_members(2, &[vec![0], vec![1]]);
    let out = joint_gp_allocate(&asg, &s, &PowerOptions::default()).unwrap();
    assert!(!out.decomposed);
    assert!(out.allocation.total() <= 0.8 * (1.0 + 1e-6));
    let mut best = 0.0f64;
    for i in 0..=20_000 {
        let p1 = 0.8 * i as f64 / 20_000.0;
        best = best.max(ee_single(40.0, 1.0, p1) + ee_single(5.0, 1.0, 0.8 - p1));
    }
    assert!((out.ee - best).abs() <= 1e-3 * best, "{} vs {best}", out.ee);
}

#[test]
fn floors_are_honoured() {
    let mut s = scen(vec![vec![2.0], vec![0.5]], 2, 100.0, 1.0);
    s.min_rates = vec![0.0, 1.0];
    let asg = Assignment::from_members(2, &[vec![0, 1]]);
    let floors = min_rate_floors(&asg, &s);
    // gamma_1 = 0.5^-0.4 / (2^-0.4 + 0.5^-0.4); SINR_1 = 1 at the floor
    let g1 = 0.5f64.powf(-0.4) / (2f64.powf(-0.4) + 0.5f64.powf(-0.4));
    let expect = 1.0 / (0.5 * (g1 - (1.0 - g1)));
    assert!((floors[0] - expect).abs() < 1e-9 * expect, "{} vs {expect}", floors[0]);
    let out = joint_gp_allocate(&asg, &s, &PowerOptions::default()).unwrap();
    assert!(out.allocation.sc_total(0) >= floors[0] * (1.0 - 1e-6));
}

#[test]
fn unreachable_rate_is_a_solver_error() {
    // the weak user's SINR saturates below 2^3 - 1
    let mut s = scen(vec![vec![2.0], vec![0.5]], 2, 100.0, 1.0);
    s.min_rates = vec![0.0, 3.0];
    let asg = Assignment::from_members(2, &[vec![0, 1]]);
    assert_eq!(min_rate_floors(&asg, &s)[0], 100.0);
    let err = joint_gp_allocate(&asg, &s, &PowerOptions::default()).unwrap_err();
    assert_eq!(err.kind(), "solver");
}

#[test]
fn baseline_spends_the_budget() {
    let s = scen(vec![vec![1.0, 2.0], vec![3.0, 0.5], vec![0.7, 0.9]], 2, 40.0, 1.0);
    let asg = Assignment::from_members(3, &[vec![0, 1], vec![2]]);
    let a = baseline_full_power(&asg, &s);
    assert!((a.total() - 40.0).abs() < 1e-9);
    let one = scen(vec![vec![1.0]], 1, 7.0, 1.0);
    let a = baseline_full_power(&Assignment::from_members(1, &[vec![0]]), &one);
    assert_eq!(a.power(0, 0), 7.0);
}

#[test]
fn greedy_uncapped_returns_optima() {
    let s = scen(vec![vec![10.0, 0.2], vec![0.3, 60.0]], 1, 100.0, 1.0);
    let asg = Assignment::from_members(2, &[vec![0], vec![1]]);
    let opts = PowerOptions::default();
    let a = greedy_eem_allocate(&asg, &s, 1.0, &opts).unwrap();
    let b = greedy_eem_allocate(&asg, &s, 0.01, &opts).unwrap();
    assert!(!a.capped);
    assert_eq!(a.allocation, b.allocation);
    for n in 0..2 {
        let prob = SubchannelEeProblem::ftpa(n, &[n], &s, 100.0);
        let sol = solve_subchannel_ee(&prob, &opts).unwrap();
        assert_eq!(a.totals[n], sol.p);
    }
}

#[test]
fn greedy_capped_matches_exhaustive_split() {
    let s = scen(vec![vec![40.0, 1e-6], vec![1e-6, 5.0]], 1, 0.8, 1.0);
    let asg = Assignment::from_members(2, &[vec![0], vec![1]]);
    let delta = 0.2;
    let out = greedy_eem_allocate(&asg, &s, delta, &PowerOptions::default()).unwrap();
    assert!(out.capped && !out.exhausted_early);
    let eem = out.eem.as_ref().unwrap();
    assert_eq!(eem.rows(), 5);
    assert_eq!(eem.cols(), 2);
    assert!((out.totals.iter().sum::<f64>() - 0.8).abs() <= delta);
    let ee = total_ee(&asg, &out.allocation, &s);
    let mut best = 0.0f64;
    for a in 0..=4 {
        let p1 = a as f64 * delta;
        let mut alloc = PowerAllocation::new(2);
        alloc.set_subchannel(0, vec![(0, p1)]);
        alloc.set_subchannel(1, vec![(1, 0.8 - p1)]);
        best = best.max(total_ee(&asg, &alloc, &s));
    }
    let granularity = eem.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(ee >= best - granularity, "{ee} vs {best} (step {granularity})");
}
