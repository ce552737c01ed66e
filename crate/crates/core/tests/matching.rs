use noma_ee::channel::Scenario;
use noma_ee::matching::{
    build_preferences, evaluate_strategy, find_blocking_pair, run_matching, MatchEvent, MatchingOptions, RateModel,
    StrategyKind,
};
use noma_ee::noma::{ftpa_split, slots_rate, Assignment};
use noma_ee::power::PowerOptions;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scen(gains: Vec<Vec<f64>>, k: usize, p_max: f64) -> Scenario {
    Scenario::from_gains(gains, k, p_max, 1.0).unwrap()
}

fn random_scen(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> Scenario {
    let gains = (0..m)
        .map(|_| (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect())
        .collect();
    scen(gains, k, n as f64 * 10.0)
}

fn ftpa() -> MatchingOptions {
    MatchingOptions::new(RateModel::Ftpa)
}

#[test]
fn preferences_follow_gains() {
    let s = scen(vec![vec![3.0, 1.0, 2.0]], 1, 3.0);
    assert_eq!(build_preferences(&s).lists[0], vec![0, 2, 1]);
    let flat = scen(vec![vec![1.0; 4]], 1, 4.0);
    assert_eq!(build_preferences(&flat).lists[0], vec![0, 1, 2, 3]);
}

#[test]
fn addition_to_empty_subchannel() {
    let s = scen(vec![vec![3.0]], 1, 2.0);
    let asg = Assignment::new(1, 1);
    let r = evaluate_strategy(0, 0, StrategyKind::Addition, &asg, &s, &RateModel::Ftpa).unwrap();
    assert!((r - 7f64.log2()).abs() < 1e-12);
}

#[test]
fn appendix_a_addition_changes_sign() {
    // members {0, 1} with g = 0.4141, 6.2512 and p_n = 50; user 2 sweeps
    let (mut up, mut down) = (false, false);
    for i in 0..=400 {
        let g3 = 10f64.powf(-2.0 + 4.0 * i as f64 / 400.0);
        let s = scen(vec![vec![0.4141], vec![6.2512], vec![g3]], 3, 50.0);
        let asg = Assignment::from_members(3, &[vec![0, 1]]);
        let before = slots_rate(&s, 0, &ftpa_split(0, &[0, 1], 50.0, &s));
        let after = evaluate_strategy(0, 2, StrategyKind::Addition, &asg, &s, &RateModel::Ftpa).unwrap();
        up |= after > before;
        down |= after < before;
    }
    assert!(up && down);
}

#[test]
fn substituting_the_weak_user_helps() {
    // g1 > g3 > g2: replacing user 2 by user 3 raises the rate
    let s = scen(vec![vec![5.0], vec![0.2], vec![1.5]], 2, 20.0);
    let asg = Assignment::from_members(3, &[vec![0, 1]]);
    let before = slots_rate(&s, 0, &ftpa_split(0, &[0, 1], 20.0, &s));
    let after = evaluate_strategy(0, 2, StrategyKind::Substitution { outgoing: 1 }, &asg, &s, &RateModel::Ftpa).unwrap();
    assert!(after > before);
}

#[test]
fn lone_user_is_matched() {
    let out = run_matching(&scen(vec![vec![0.3]], 1, 1.0), &ftpa());
    assert!(out.assignment.contains(0, 0));
}

#[test]
fn single_slot_goes_to_the_better_user() {
    let s = scen(vec![vec![0.5], vec![4.0]], 1, 1.0);
    let out = run_matching(&s, &ftpa());
    // enumerate both single-member matchings
    let r = |m: usize| slots_rate(&s, 0, &[(m, 1.0)]);
    let winner = if r(0) > r(1) { 0 } else { 1 };
    assert_eq!(out.assignment.members(0).iter().copied().collect::<Vec<_>>(), vec![winner]);
}

#[test]
fn random_small_instance_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let s = random_scen(&mut rng, 4, 2, 2);
        let out = run_matching(&s, &ftpa());
        assert_eq!(find_blocking_pair(&out.assignment, &s, &ftpa()), None);
    }
}

#[test]
fn quota_limits_users_to_one_subchannel() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_scen(&mut rng, 6, 4, 2);
    let out = run_matching(&s, &ftpa().with_quota(1));
    for m in 0..6 {
        assert!(out.assignment.subchannels_of(m).len() <= 1);
    }
}

#[test]
fn gp_scored_matching_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = random_scen(&mut rng, 5, 3, 2);
    let opts = MatchingOptions::new(RateModel::Gp(PowerOptions::default()));
    let out = run_matching(&s, &opts);
    assert_eq!(out.failed_evaluations, 0);
    out.assignment.validate(2).unwrap();
    assert!(out.assignment.cardinality() > 0);
}

/// Replays the event log and checks the loop's invariants.
fn check_trace(s: &Scenario, out: &noma_ee::matching::MatchingOutcome, opts: &MatchingOptions) -> Result<(), TestCaseError> {
    let (m, n) = (s.num_users, s.num_subchannels);
    let mut asg = Assignment::new(m, n);
    let mut proposed = std::collections::BTreeSet::new();
    let mut total = 0.0;
    let mut rates = vec![0.0; n];
    for e in &out.events {
        match e {
            MatchEvent::Proposed { user, sc } => {
                prop_assert!(!asg.is_rejected(*user, *sc), "rejected pair re-proposed");
                prop_assert!(proposed.insert((*user, *sc)), "pair proposed twice");
            }
            MatchEvent::Rejected { user, sc } => asg.reject(*user, *sc),
            MatchEvent::Executed { strategy, previous_rate } => {
                prop_assert!(strategy.rate > *previous_rate, "non-improving step");
                if let StrategyKind::Substitution { outgoing } = strategy.kind {
                    prop_assert_eq!(asg.members(strategy.sc).len(), s.max_users_per_sc);
                    asg.reject(outgoing, strategy.sc);
                    prop_assert!(!asg.subchannels_of(outgoing).contains(&strategy.sc));
                } else {
                    prop_assert!(asg.members(strategy.sc).len() < s.max_users_per_sc);
                }
                asg.insert(strategy.incoming, strategy.sc);
                prop_assert!(asg.members(strategy.sc).len() <= s.max_users_per_sc);
                let new_total = total - rates[strategy.sc] + strategy.rate;
                prop_assert!(new_total > total);
                total = new_total;
                rates[strategy.sc] = strategy.rate;
            }
        }
    }
    prop_assert_eq!(&asg, &out.assignment);
    prop_assert!(out.passes <= m * n);
    let _ = opts;
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matching_invariants_hold(seed in any::<u64>(), m in 1usize..=8, n in 1usize..=4, k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scen(&mut rng, m, n, k);
        let opts = ftpa();
        let out = run_matching(&s, &opts);
        out.assignment.validate(k).unwrap();
        check_trace(&s, &out, &opts)?;
    }
}
