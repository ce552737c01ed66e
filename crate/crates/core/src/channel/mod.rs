//! Random cell layouts and channel gains.
//!
//! Users are dropped uniformly on an annulus around the base station with a
//! minimum spacing. A user's gain on subchannel `n` is
//! `PL(d) * S * |h_n|^2`: distance pathloss, log-normal shadowing shared by
//! all of the user's subchannels, and an exponential (Rayleigh power) term
//! drawn independently per subchannel.

mod scenario;

pub use scenario::Scenario;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rejection-sampling attempts allowed per user before giving up.
pub const PLACEMENT_ATTEMPTS: usize = 100_000;

const PLACEMENT_STREAM: u64 = 1;
const SHADOW_STREAM: u64 = 2;
const FADING_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    pub radius_m: f64,
    pub min_user_bs_dist_m: f64,
    pub min_user_user_dist_m: f64,
    pub ref_dist_m: f64,
    /// Mean SNR (unit power, unit noise) of a user at `ref_dist_m`.
    pub ref_snr_db: f64,
    pub pathloss_exponent: f64,
    /// Variance of the shadowing in dB.
    pub shadow_variance: f64,
    /// Mean of `|h|^2`.
    pub rayleigh_variance: f64,
    pub bandwidth_per_sc_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub ber: f64,
    /// Seed of [`CellConfig::scenario`]. Experiments derive their own
    /// per-trial seeds instead.
    pub seed: u64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            radius_m: 500.0,
            min_user_bs_dist_m: 50.0,
            min_user_user_dist_m: 40.0,
            ref_dist_m: 1000.0,
            ref_snr_db: 28.0,
            pathloss_exponent: 3.76,
            shadow_variance: 3.76,
            rayleigh_variance: 4.3,
            bandwidth_per_sc_hz: 200e3,
            noise_psd_dbm_hz: -174.0,
            ber: 1e-6,
            seed: 0,
        }
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.min_user_bs_dist_m > 0.0 && self.radius_m > self.min_user_bs_dist_m) {
            return bad("need radius_m > min_user_bs_dist_m > 0");
        }
        if !(self.min_user_user_dist_m >= 0.0) {
            return bad("min_user_user_dist_m must be non-negative");
        }
        if !(self.ref_dist_m > 0.0 && self.bandwidth_per_sc_hz > 0.0) {
            return bad("ref_dist_m and bandwidth_per_sc_hz must be positive");
        }
        if !(self.shadow_variance > 0.0 && self.rayleigh_variance > 0.0) {
            return bad("variances must be positive");
        }
        if !self.pathloss_exponent.is_finite() || !self.ref_snr_db.is_finite() {
            return bad("pathloss_exponent and ref_snr_db must be finite");
        }
        sinr_gap(self.ber)?;
        Ok(())
    }

    /// One scenario drawn from `self.seed`.
    pub fn scenario(&self, users: usize, budget: &LinkBudget) -> Result<Scenario> {
        generate_scenario(self, users, budget, self.seed)
    }

    /// Thermal noise power per subchannel in watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_w(self.noise_psd_dbm_hz) * self.bandwidth_per_sc_hz
    }

    /// Distance-dependent part of the gain. Scaled so that a user at the
    /// reference distance sees a mean SNR of `ref_snr_db` (the fading mean
    /// is divided out, shadowing is 0 dB in the median).
    pub fn pathloss(&self, distance_m: f64) -> f64 {
        db_to_linear(self.ref_snr_db) * (distance_m / self.ref_dist_m).powf(-self.pathloss_exponent)
            * self.noise_power_w()
            / self.rayleigh_variance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// dBW to watts.
pub fn dbw_to_w(dbw: f64) -> f64 {
    db_to_linear(dbw)
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// SNR gap `-1.5 / ln(5 ber)` of an uncoded QAM link at the target bit
/// error rate.
pub fn sinr_gap(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.2) {
        return Err(Error::BerOutOfRange(ber));
    }
    Ok(-1.5 / (5.0 * ber).ln())
}

/// Independent generator for (`base`, `stream`, `index`).
pub(crate) fn substream(base: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream((stream << 32) ^ index);
    rng
}

/// Drops `m` users uniformly (by area) on the annulus
/// `[min_user_bs_dist_m, radius_m]`, each at least `min_user_user_dist_m`
/// from every earlier user.
///
/// Each user draws from its own stream derived from one value of `rng`, so
/// the first `m` users do not change when more users are requested.
pub fn place_users<R: RngCore + ?Sized>(cfg: &CellConfig, m: usize, rng: &mut R) -> Result<Vec<Position>> {
    cfg.validate()?;
    let base = rng.next_u64();
    let (r0, r1) = (cfg.min_user_bs_dist_m, cfg.radius_m);
    let mut placed: Vec<Position> = Vec::with_capacity(m);
    for user in 0..m {
        let mut stream = substream(base, PLACEMENT_STREAM, user as u64);
        let mut accepted = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let r = stream.random_range(r0 * r0..=r1 * r1).sqrt();
            let theta = stream.random_range(0.0..std::f64::consts::TAU);
            let p = Position {
                x: r * theta.cos(),
                y: r * theta.sin(),
            };
            if placed
                .iter()
                .all(|q| q.distance(&p) >= cfg.min_user_user_dist_m)
            {
                accepted = Some(p);
                break;
            }
        }
        match accepted {
            Some(p) => placed.push(p),
            None => {
                return Err(Error::PlacementInfeasible {
                    user,
                    attempts: PLACEMENT_ATTEMPTS,
                })
            }
        }
    }
    Ok(placed)
}

/// Per-user shadowing factors (linear), one per position.
pub fn draw_shadowing<R: RngCore + ?Sized>(cfg: &CellConfig, users: usize, rng: &mut R) -> Vec<f64> {
    let base = rng.next_u64();
    let normal = Normal::new(0.0, cfg.shadow_variance.sqrt()).expect("validated variance");
    (0..users)
        .map(|m| db_to_linear(normal.sample(&mut substream(base, SHADOW_STREAM, m as u64))))
        .collect()
}

/// `M x N` matrix of `|h|^2` draws with mean `rayleigh_variance`.
pub fn draw_fading<R: RngCore + ?Sized>(cfg: &CellConfig, users: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let base = rng.next_u64();
    let exp = Exp::new(1.0 / cfg.rayleigh_variance).expect("validated variance");
    (0..users)
        .map(|m| {
            let mut s = substream(base, FADING_STREAM, m as u64);
            (0..n).map(|_| exp.sample(&mut s)).collect()
        })
        .collect()
}

/// Channel power gains `g[m][n]` for the given positions.
pub fn draw_gains<R: RngCore + ?Sized>(
    cfg: &CellConfig,
    positions: &[Position],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if positions.is_empty() || n == 0 {
        return Err(Error::InvalidConfig(
            "draw_gains needs at least one user and one subchannel".into(),
        ));
    }
    let shadow = draw_shadowing(cfg, positions.len(), rng);
    let fading = draw_fading(cfg, positions.len(), n, rng);
    Ok(compose_gains(cfg, positions, &shadow, &fading))
}

/// `PL(d_m) * shadow[m] * fading[m][n]`, floored at the smallest positive
/// normal float so every gain stays strictly positive.
pub fn compose_gains(cfg: &CellConfig, positions: &[Position], shadow: &[f64], fading: &[Vec<f64>]) -> Vec<Vec<f64>> {
    positions
        .iter()
        .zip(shadow)
        .zip(fading)
        .map(|((pos, s), row)| {
            let pl = cfg.pathloss(pos.norm());
            row.iter().map(|h| (pl * s * h).max(f64::MIN_POSITIVE)).collect()
        })
        .collect()
}

/// System-level parameters that are not drawn at random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub num_subchannels: usize,
    pub max_users_per_sc: usize,
    pub p_max_dbw: f64,
    pub p_c_dbw: f64,
    pub ftpa_alpha: f64,
    /// Use `sinr_gap(ber)`; otherwise rates are gap-free.
    pub apply_gap: bool,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            num_subchannels: 20,
            max_users_per_sc: 4,
            p_max_dbw: 23.0,
            p_c_dbw: 1.75,
            ftpa_alpha: -0.4,
            apply_gap: true,
        }
    }
}

/// Draws a complete scenario: placement, shadowing and fading all come
/// from `seed`.
pub fn generate_scenario(cfg: &CellConfig, users: usize, budget: &LinkBudget, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = place_users(cfg, users, &mut rng)?;
    let gains = draw_gains(cfg, &positions, budget.num_subchannels, &mut rng)?;
    let sinr_gap = if budget.apply_gap { sinr_gap(cfg.ber)? } else { 1.0 };
    let scen = Scenario {
        num_users: users,
        num_subchannels: budget.num_subchannels,
        max_users_per_sc: budget.max_users_per_sc,
        gains,
        noise: vec![cfg.noise_power_w(); budget.num_subchannels],
        p_max: dbw_to_w(budget.p_max_dbw),
        p_c: dbw_to_w(budget.p_c_dbw),
        sinr_gap,
        ftpa_alpha: budget.ftpa_alpha,
        min_rates: vec![0.0; users],
    };
    scen.validate()?;
    Ok(scen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_at_reference_ber() {
        let g = sinr_gap(1e-6).unwrap();
        assert!((g - 0.122_93).abs() < 1e-4, "{g}");
        let g3 = sinr_gap(1e-3).unwrap();
        assert!((g3 - 0.2831).abs() < 1e-4, "{g3}");
    }

    #[test]
    fn gap_vanishes_at_its_root() {
        let ber = (-1.5f64).exp() / 5.0;
        assert!((sinr_gap(ber).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_domain() {
        assert!(matches!(sinr_gap(0.2), Err(Error::BerOutOfRange(_))));
        assert!(matches!(sinr_gap(0.0), Err(Error::BerOutOfRange(_))));
    }

    #[test]
    fn reference_distance_snr() {
        let cfg = CellConfig::default();
        // shadowing at its 0 dB median, fading at its mean
        let g = cfg.pathloss(cfg.ref_dist_m) * cfg.rayleigh_variance;
        let snr_db = linear_to_db(g / cfg.noise_power_w());
        assert!((snr_db - 28.0).abs() < 1.0, "{snr_db}");
    }

    #[test]
    fn empty_placement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(place_users(&CellConfig::default(), 0, &mut rng).unwrap().is_empty());
    }
}
