//! Monte-Carlo experiments: sweep a parameter, draw paired channel
//! realisations, run every scheme on each, aggregate and write tables.

mod oracle;
mod output;
pub mod stats;

pub use oracle::{brute_force_oracle, OracleOptions, OracleResult};
pub use output::{emit_figures_data, histogram_summaries, write_aggregates_csv, write_trials_csv, HistogramSummary};

use std::collections::HashMap;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_scenario, CellConfig, LinkBudget, Scenario};
use crate::error::{Error, Result};
use crate::gp::SeriesTerms;
use crate::matching::{run_matching, MatchingOptions, MatchingOutcome, RateModel};
use crate::noma::{total_ee, total_rate, Assignment, PowerAllocation};
use crate::power::{baseline_full_power, greedy_eem_allocate, joint_gp_allocate, PowerOptions, PowerScheme};

/// A complete resource allocation pipeline: a matching followed by a power
/// allocator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Many-to-many matching scored by FTPA, full power.
    Scheme1,
    /// One subchannel per user, joint GP.
    Scheme2,
    /// Many-to-many matching scored by FTPA, joint GP.
    Scheme3,
    /// Many-to-many matching scored by the subchannel GP, joint GP.
    Scheme4,
    /// Many-to-many matching scored by the subchannel GP, greedy EEM.
    Scheme5,
    /// One subchannel per user, full power.
    Baseline,
}

/// How users are matched to subchannels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchingKind {
    ManyToManyFtpa,
    ManyToManyGp,
    OneToMany,
}

impl MatchingKind {
    pub fn options(self) -> MatchingOptions {
        match self {
            MatchingKind::ManyToManyFtpa => MatchingOptions::new(RateModel::Ftpa),
            MatchingKind::ManyToManyGp => MatchingOptions::new(RateModel::gp()),
            MatchingKind::OneToMany => MatchingOptions::new(RateModel::Ftpa).with_quota(1),
        }
    }
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Scheme1,
        Scheme::Scheme2,
        Scheme::Scheme3,
        Scheme::Scheme4,
        Scheme::Scheme5,
        Scheme::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Scheme1 => "scheme1",
            Scheme::Scheme2 => "scheme2",
            Scheme::Scheme3 => "scheme3",
            Scheme::Scheme4 => "scheme4",
            Scheme::Scheme5 => "scheme5",
            Scheme::Baseline => "baseline",
        }
    }

    pub fn matching(self) -> MatchingKind {
        match self {
            Scheme::Scheme1 | Scheme::Scheme3 => MatchingKind::ManyToManyFtpa,
            Scheme::Scheme4 | Scheme::Scheme5 => MatchingKind::ManyToManyGp,
            Scheme::Scheme2 | Scheme::Baseline => MatchingKind::OneToMany,
        }
    }

    pub fn power(self) -> PowerScheme {
        match self {
            Scheme::Scheme1 | Scheme::Baseline => PowerScheme::FullPower,
            Scheme::Scheme2 | Scheme::Scheme3 | Scheme::Scheme4 => PowerScheme::JointGp,
            Scheme::Scheme5 => PowerScheme::GreedyEem,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// The swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Users(Vec<usize>),
    PMaxDbw(Vec<f64>),
    PcDbw(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Users,
    PMaxDbw,
    PcDbw,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Users => "users",
            SweepKind::PMaxDbw => "p_max_dbw",
            SweepKind::PcDbw => "p_c_dbw",
        }
    }
}

impl Sweep {
    pub fn kind(&self) -> SweepKind {
        match self {
            Sweep::Users(_) => SweepKind::Users,
            Sweep::PMaxDbw(_) => SweepKind::PMaxDbw,
            Sweep::PcDbw(_) => SweepKind::PcDbw,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Users(v) => v.iter().map(|&m| m as f64).collect(),
            Sweep::PMaxDbw(v) | Sweep::PcDbw(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cell: CellConfig,
    pub sweep: Sweep,
    /// Users when the sweep is over something else.
    pub users: usize,
    pub subchannels: usize,
    pub max_users_per_sc: usize,
    pub p_max_dbw: f64,
    pub p_c_dbw: f64,
    pub ftpa_alpha: f64,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    /// Power step of the greedy allocator in watts; `p_max / 100` if unset.
    pub delta_w: Option<f64>,
    /// Series terms in the first GP stage, 1 or 2.
    pub log_terms: u8,
    /// Gap-free rates.
    pub ideal: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cell: CellConfig::default(),
            sweep: Sweep::Users(vec![10, 20, 30, 40, 50]),
            users: 40,
            subchannels: 20,
            max_users_per_sc: 4,
            p_max_dbw: 23.0,
            p_c_dbw: 1.75,
            ftpa_alpha: -0.4,
            schemes: Scheme::ALL.to_vec(),
            trials: 200,
            seed: 1,
            delta_w: None,
            log_terms: 1,
            ideal: false,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.cell.validate()?;
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected".into());
        }
        if self.subchannels == 0 || self.max_users_per_sc == 0 {
            return bad("subchannels and max_users_per_sc must be positive".into());
        }
        if !(self.log_terms == 1 || self.log_terms == 2) {
            return bad(format!("log_terms must be 1 or 2, got {}", self.log_terms));
        }
        if let Some(d) = self.delta_w {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta_w must be positive, got {d}"));
            }
        }
        if !(self.ftpa_alpha <= 0.0) {
            return bad(format!("ftpa_alpha must be <= 0, got {}", self.ftpa_alpha));
        }
        let values = self.sweep.values();
        if values.is_empty() {
            return bad("sweep has no values".into());
        }
        match &self.sweep {
            Sweep::Users(v) if v.contains(&0) => return bad("user counts must be positive".into()),
            Sweep::PMaxDbw(v) | Sweep::PcDbw(v) if v.iter().any(|x| !x.is_finite()) => {
                return bad("sweep values must be finite".into())
            }
            _ => {}
        }
        if self.sweep.kind() != SweepKind::Users && self.users == 0 {
            return bad("users must be positive".into());
        }
        if !self.p_max_dbw.is_finite() || !self.p_c_dbw.is_finite() {
            return bad("p_max_dbw and p_c_dbw must be finite".into());
        }
        Ok(())
    }

    pub fn power_options(&self) -> PowerOptions {
        PowerOptions {
            log_terms: if self.log_terms == 2 { SeriesTerms::Two } else { SeriesTerms::One },
            ..PowerOptions::default()
        }
    }

    /// User count and link budget at one sweep value.
    pub fn point(&self, value: f64) -> (usize, LinkBudget) {
        let mut budget = LinkBudget {
            num_subchannels: self.subchannels,
            max_users_per_sc: self.max_users_per_sc,
            p_max_dbw: self.p_max_dbw,
            p_c_dbw: self.p_c_dbw,
            ftpa_alpha: self.ftpa_alpha,
            apply_gap: !self.ideal,
        };
        let mut users = self.users;
        match self.sweep.kind() {
            SweepKind::Users => users = value as usize,
            SweepKind::PMaxDbw => budget.p_max_dbw = value,
            SweepKind::PcDbw => budget.p_c_dbw = value,
        }
        (users, budget)
    }

    /// Channel draw shared by all schemes at `(value, trial)`.
    pub fn scenario(&self, value: f64, trial: usize) -> Result<Scenario> {
        let (users, budget) = self.point(value);
        generate_scenario(&self.cell, users, &budget, trial_seed(self.seed, self.sweep.kind(), trial))
    }
}

/// Seed of one trial, derived from the base seed, the sweep kind and the
/// trial index. It does not depend on the sweep value, so trial `t` sees the
/// same channel draw at every point of a sweep (placement and fading are
/// prefix-stable in the user count).
pub fn trial_seed(base: u64, kind: SweepKind, trial: usize) -> u64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base.to_le_bytes());
    key[8..16].copy_from_slice(&(kind as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(trial as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key).next_u64()
}

/// Hash of everything a scheme sees in a scenario.
pub fn scenario_hash(scen: &Scenario) -> u64 {
    let mut h = DefaultHasher::new();
    (scen.num_users, scen.num_subchannels, scen.max_users_per_sc).hash(&mut h);
    for v in [scen.p_max, scen.p_c, scen.sinr_gap, scen.ftpa_alpha] {
        v.to_bits().hash(&mut h);
    }
    for v in scen.gains.iter().flatten().chain(&scen.noise).chain(&scen.min_rates) {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub sweep: SweepKind,
    pub value: f64,
    pub trial: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub scenario_hash: u64,
    /// bits/s/Hz per watt.
    pub total_ee: f64,
    pub total_power_w: f64,
    /// bits/s/Hz.
    pub total_throughput: f64,
    /// `per_sc_users[k]`: subchannels with `k` users.
    pub per_sc_users: Vec<usize>,
    /// `per_user_scs[j]`: users holding `j` subchannels.
    pub per_user_scs: Vec<usize>,
    pub cardinality: usize,
    pub matching_passes: usize,
    pub solver_iterations: usize,
    /// Error tag when the scheme failed on this trial.
    pub error: Option<String>,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Occupancy histograms of an assignment.
pub fn histograms(asg: &Assignment, k: usize) -> (Vec<usize>, Vec<usize>) {
    let mut per_sc = vec![0; k + 1];
    for n in 0..asg.num_subchannels() {
        per_sc[asg.members(n).len().min(k)] += 1;
    }
    let mut per_user = vec![0; asg.num_subchannels() + 1];
    for m in 0..asg.num_users() {
        per_user[asg.subchannels_of(m).len()] += 1;
    }
    (per_sc, per_user)
}

/// Result of one scheme on one scenario.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub assignment: Assignment,
    pub allocation: PowerAllocation,
    pub matching_passes: usize,
    pub solver_iterations: usize,
}

/// Runs the power stage of `scheme` on a finished matching.
pub fn allocate(
    scheme: Scheme,
    matching: &MatchingOutcome,
    scen: &Scenario,
    opts: &PowerOptions,
    delta: f64,
) -> Result<SchemeRun> {
    let asg = &matching.assignment;
    let (allocation, solver_iterations) = match scheme.power() {
        PowerScheme::FullPower => (baseline_full_power(asg, scen), 0),
        PowerScheme::JointGp => {
            let out = joint_gp_allocate(asg, scen, opts)?;
            (out.allocation, out.gp_solves)
        }
        PowerScheme::GreedyEem => {
            let out = greedy_eem_allocate(asg, scen, delta, opts)?;
            (out.allocation, out.gp_solves)
        }
    };
    Ok(SchemeRun {
        assignment: asg.clone(),
        allocation,
        matching_passes: matching.passes,
        solver_iterations,
    })
}

/// Runs several schemes on one scenario, sharing matchings between schemes
/// that use the same one.
pub fn run_schemes(
    schemes: &[Scheme],
    scen: &Scenario,
    opts: &PowerOptions,
    delta: f64,
) -> Vec<(Scheme, Result<SchemeRun>)> {
    let mut matchings: HashMap<MatchingKind, MatchingOutcome> = HashMap::new();
    schemes
        .iter()
        .map(|&scheme| {
            let matching = matchings
                .entry(scheme.matching())
                .or_insert_with(|| run_matching(scen, &scheme.matching().options()));
            (scheme, allocate(scheme, matching, scen, opts, delta))
        })
        .collect()
}

/// All configured schemes on the trial `(value, trial)`.
pub fn run_trial(cfg: &ExperimentConfig, value: f64, trial: usize) -> Vec<TrialResult> {
    let kind = cfg.sweep.kind();
    let seed = trial_seed(cfg.seed, kind, trial);
    let blank = |scheme: Scheme, hash: u64, error: &Error| TrialResult {
        sweep: kind,
        value,
        trial,
        scheme,
        seed,
        scenario_hash: hash,
        total_ee: f64::NAN,
        total_power_w: f64::NAN,
        total_throughput: f64::NAN,
        per_sc_users: Vec::new(),
        per_user_scs: Vec::new(),
        cardinality: 0,
        matching_passes: 0,
        solver_iterations: 0,
        error: Some(error.kind().to_string()),
    };
    let scen = match cfg.scenario(value, trial) {
        Ok(s) => s,
        Err(e) => return cfg.schemes.iter().map(|&s| blank(s, 0, &e)).collect(),
    };
    let hash = scenario_hash(&scen);
    let delta = cfg.delta_w.unwrap_or(scen.p_max / 100.0);
    run_schemes(&cfg.schemes, &scen, &cfg.power_options(), delta)
        .into_iter()
        .map(|(scheme, run)| match run {
            Ok(run) => {
                let (per_sc_users, per_user_scs) = histograms(&run.assignment, scen.max_users_per_sc);
                TrialResult {
                    sweep: kind,
                    value,
                    trial,
                    scheme,
                    seed,
                    scenario_hash: hash,
                    total_ee: total_ee(&run.assignment, &run.allocation, &scen),
                    total_power_w: run.allocation.total(),
                    total_throughput: total_rate(&run.assignment, &run.allocation, &scen),
                    per_sc_users,
                    per_user_scs,
                    cardinality: run.assignment.cardinality(),
                    matching_passes: run.matching_passes,
                    solver_iterations: run.solver_iterations,
                    error: None,
                }
            }
            Err(e) => blank(scheme, hash, &e),
        })
        .collect()
}

/// Mean, median and spread of one metric at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: stats::mean(xs),
            median: stats::median(xs),
            std: stats::std_dev(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub sweep: SweepKind,
    pub value: f64,
    pub scheme: Scheme,
    /// Trials that completed.
    pub trials: usize,
    pub failures: usize,
    pub ee: Summary,
    pub power: Summary,
    pub throughput: Summary,
}

/// Groups trial rows by (sweep, value, scheme) and summarizes the
/// successful ones. Output is sorted.
pub fn aggregate(results: &[TrialResult]) -> Vec<Aggregate> {
    let mut groups: Vec<((SweepKind, u64, Scheme), Vec<&TrialResult>)> = Vec::new();
    for r in results {
        let key = (r.sweep, r.value.to_bits(), r.scheme);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut out: Vec<Aggregate> = groups
        .into_iter()
        .map(|((sweep, value, scheme), rows)| {
            let ok: Vec<&TrialResult> = rows.iter().copied().filter(|r| !r.failed()).collect();
            let col = |f: fn(&TrialResult) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
            Aggregate {
                sweep,
                value: f64::from_bits(value),
                scheme,
                trials: ok.len(),
                failures: rows.len() - ok.len(),
                ee: Summary::of(&col(|r| r.total_ee)),
                power: Summary::of(&col(|r| r.total_power_w)),
                throughput: Summary::of(&col(|r| r.total_throughput)),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.sweep, a.scheme)
            .cmp(&(b.sweep, b.scheme))
            .then(a.value.total_cmp(&b.value))
    });
    out
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    /// Sorted by sweep value, trial, scheme.
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResults {
    /// Successful rows of `scheme` at `value`, by trial.
    pub fn rows(&self, scheme: Scheme, value: f64) -> Vec<&TrialResult> {
        self.trials
            .iter()
            .filter(|r| r.scheme == scheme && r.value == value && !r.failed())
            .collect()
    }

    pub fn aggregate_at(&self, scheme: Scheme, value: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.scheme == scheme && a.value == value)
    }

    /// Writes `trials.csv`, `aggregates.csv` and the figure tables.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![dir.join("trials.csv"), dir.join("aggregates.csv")];
        write_trials_csv(&self.trials, &files[0])?;
        write_aggregates_csv(&self.aggregates, &files[1])?;
        files.extend(emit_figures_data(&self.trials, dir)?);
        Ok(files)
    }
}

/// Largest share of failed scheme runs tolerated before a run is aborted.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Runs every (sweep value, trial) pair on the rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let values = cfg.sweep.values();
    let work: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..cfg.trials).map(move |t| (v, t)))
        .collect();
    let mut trials: Vec<TrialResult> = work
        .par_iter()
        .flat_map_iter(|&(v, t)| run_trial(cfg, values[v], t))
        .collect();
    let position = |x: f64| values.iter().position(|v| *v == x).unwrap_or(usize::MAX);
    trials.sort_by(|a, b| {
        (position(a.value), a.trial, a.scheme).cmp(&(position(b.value), b.trial, b.scheme))
    });
    let failed: Vec<&TrialResult> = trials.iter().filter(|r| r.failed()).collect();
    if failed.len() as f64 > MAX_FAILURE_RATE * trials.len() as f64 {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            total: trials.len(),
            first: failed[0].error.clone().unwrap_or_default(),
        });
    }
    let aggregates = aggregate(&trials);
    Ok(ExperimentResults {
        config: cfg.clone(),
        trials,
        aggregates,
    })
}
