use noma_ee::channel::{
    compose_gains, db_to_linear, dbw_to_w, draw_fading, draw_gains, draw_shadowing, generate_scenario, linear_to_db,
    place_users, sinr_gap, CellConfig, LinkBudget, Position, Scenario,
};
use noma_ee::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn single_user_lands_on_the_annulus() {
    let cfg = CellConfig::default();
    for seed in 0..200 {
        let p = place_users(&cfg, 1, &mut rng(seed)).unwrap();
        assert_eq!(p.len(), 1);
        assert!((50.0..=500.0).contains(&p[0].norm()), "{:?}", p[0]);
    }
}

#[test]
fn placement_is_deterministic_and_spaced() {
    let cfg = CellConfig::default();
    let a = place_users(&cfg, 2, &mut rng(9)).unwrap();
    let b = place_users(&cfg, 2, &mut rng(9)).unwrap();
    assert_eq!(a, b);
    assert!(a[0].distance(&a[1]) >= 40.0);
    let more = place_users(&cfg, 30, &mut rng(9)).unwrap();
    assert_eq!(&more[..2], &a[..]);
}

#[test]
fn placement_is_uniform_by_area() {
    let cfg = CellConfig::default();
    let split = ((50.0f64.powi(2) + 500.0f64.powi(2)) / 2.0).sqrt();
    let n = 20_000;
    let inner = (0..n)
        .filter(|&s| place_users(&cfg, 1, &mut rng(s)).unwrap()[0].norm() < split)
        .count();
    let frac = inner as f64 / n as f64;
    // binomial standard error is about 0.0035
    assert!((frac - 0.5).abs() < 0.015, "{frac}");
}

#[test]
fn impossible_spacing_fails() {
    let cfg = CellConfig {
        radius_m: 60.0,
        min_user_user_dist_m: 130.0,
        ..CellConfig::default()
    };
    assert!(matches!(
        place_users(&cfg, 2, &mut rng(1)),
        Err(Error::PlacementInfeasible { user: 1, .. })
    ));
}

#[test]
fn invalid_cells_are_rejected() {
    let cases = [
        CellConfig { radius_m: 40.0, ..CellConfig::default() },
        CellConfig { min_user_bs_dist_m: 0.0, ..CellConfig::default() },
        CellConfig { shadow_variance: 0.0, ..CellConfig::default() },
        CellConfig { rayleigh_variance: -1.0, ..CellConfig::default() },
    ];
    for c in cases {
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
    }
    let c = CellConfig { ber: 0.3, ..CellConfig::default() };
    assert!(matches!(c.validate(), Err(Error::BerOutOfRange(_))));
}

#[test]
fn gap_values() {
    let want = -1.5 / (5e-6f64).ln();
    assert!((sinr_gap(1e-6).unwrap() - want).abs() < 1e-15);
    assert!((want - 0.1229).abs() < 1e-4);
    assert!((sinr_gap(1e-3).unwrap() - -1.5 / (5e-3f64).ln()).abs() < 1e-15);
}

#[test]
fn reference_user_sees_reference_snr() {
    let cfg = CellConfig::default();
    let pos = [Position { x: cfg.ref_dist_m, y: 0.0 }];
    // shadowing at its median, fading at its mean
    let g = compose_gains(&cfg, &pos, &[1.0], &[vec![cfg.rayleigh_variance]]);
    let snr_db = linear_to_db(g[0][0] / cfg.noise_power_w());
    assert!((snr_db - 28.0).abs() < 1.0, "{snr_db}");
}

#[test]
fn fading_mean_matches_variance() {
    let cfg = CellConfig::default();
    let h = draw_fading(&cfg, 1000, 100, &mut rng(4));
    let mean = h.iter().flatten().sum::<f64>() / 1e5;
    assert!((mean / 4.3 - 1.0).abs() < 0.02, "{mean}");
}

#[test]
fn shadowing_spread_matches_variance() {
    let cfg = CellConfig::default();
    let s = draw_shadowing(&cfg, 50_000, &mut rng(8));
    let db: Vec<f64> = s.iter().map(|&x| linear_to_db(x)).collect();
    let mean = db.iter().sum::<f64>() / db.len() as f64;
    let var = db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (db.len() - 1) as f64;
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((var / 3.76 - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn shadowing_is_per_user_and_fading_per_slot() {
    let cfg = CellConfig::default();
    let pos = vec![Position { x: 100.0, y: 100.0 }; 2];
    let gains = draw_gains(&cfg, &pos, 8, &mut rng(2)).unwrap();
    let mut r = rng(2);
    let shadow = draw_shadowing(&cfg, 2, &mut r);
    let fading = draw_fading(&cfg, 2, 8, &mut r);
    assert_eq!(gains, compose_gains(&cfg, &pos, &shadow, &fading));
    for m in 0..2 {
        let ratios: Vec<f64> = (0..8).map(|n| gains[m][n] / fading[m][n]).collect();
        assert!(ratios.iter().all(|x| (x / ratios[0] - 1.0).abs() < 1e-12));
    }
    assert_ne!(fading[0], fading[1]);
    assert!(fading[0].windows(2).all(|w| w[0] != w[1]));
}

#[test]
fn fading_is_uncorrelated_across_subchannels() {
    let cfg = CellConfig::default();
    let h = draw_fading(&cfg, 20_000, 2, &mut rng(6));
    let (a, b): (Vec<f64>, Vec<f64>) = h.iter().map(|r| (r[0], r[1])).unzip();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    let corr = cov / (4.3 * 4.3);
    assert!(corr.abs() < 0.03, "{corr}");
}

#[test]
fn scenario_units_and_determinism() {
    let cfg = CellConfig::default();
    let b = LinkBudget::default();
    let s = generate_scenario(&cfg, 12, &b, 77).unwrap();
    assert_eq!(s, generate_scenario(&cfg, 12, &b, 77).unwrap());
    assert_ne!(s, generate_scenario(&cfg, 12, &b, 78).unwrap());
    assert_eq!(s, CellConfig { seed: 77, ..cfg.clone() }.scenario(12, &b).unwrap());
    assert!((s.p_max - 199.526_231_496_887_96).abs() < 1e-9);
    assert!((s.p_c - 10f64.powf(0.175)).abs() < 1e-12);
    assert!((s.p_c - 1.496).abs() < 1e-3);
    assert!((s.sinr_gap - sinr_gap(1e-6).unwrap()).abs() < 1e-15);
    assert_eq!((s.num_users, s.num_subchannels, s.max_users_per_sc), (12, 20, 4));
    let ideal = generate_scenario(&cfg, 12, &LinkBudget { apply_gap: false, ..b }, 77).unwrap();
    assert_eq!(ideal.sinr_gap, 1.0);
    assert_eq!(ideal.gains, s.gains);
    assert_eq!(dbw_to_w(0.0), 1.0);
    assert!((db_to_linear(30.0) - 1000.0).abs() < 1e-9);
}

#[test]
fn scenario_toml_round_trip() {
    let s = generate_scenario(&CellConfig::default(), 3, &LinkBudget { num_subchannels: 2, ..LinkBudget::default() }, 1)
        .unwrap();
    let text = s.to_toml();
    assert_eq!(Scenario::from_toml(&text).unwrap(), s);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    s.save(&path).unwrap();
    assert_eq!(Scenario::load(&path).unwrap(), s);
    assert!(Scenario::from_toml(&format!("extra = 1\n{text}")).is_err());
    let bad = text.replace("sinr_gap = ", "sinr_gap = 2.0\n#");
    assert!(matches!(Scenario::from_toml(&bad), Err(Error::InvalidScenario(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_scenarios_are_valid(seed in any::<u64>(), users in 1usize..30, n in 1usize..6) {
        let cfg = CellConfig::default();
        let pos = place_users(&cfg, users, &mut rng(seed)).unwrap();
        for (i, p) in pos.iter().enumerate() {
            prop_assert!(p.norm() >= 50.0 && p.norm() <= 500.0);
            for q in &pos[..i] {
                prop_assert!(p.distance(q) >= 40.0);
            }
        }
        let s = generate_scenario(&cfg, users, &LinkBudget { num_subchannels: n, ..LinkBudget::default() }, seed).unwrap();
        prop_assert!(s.gains.iter().flatten().all(|g| *g > 0.0 && g.is_finite()));
        prop_assert!(s.noise.iter().all(|x| *x > 0.0));
    }
}
