//! Per-trial and aggregate CSV tables, figure data and occupancy
//! histograms.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{aggregate, Aggregate, Scheme, SweepKind, TrialResult};
use crate::error::{Error, Result};

pub const TRIAL_COLUMNS: [&str; 15] = [
    "sweep",
    "value",
    "trial",
    "scheme",
    "seed",
    "scenario_hash",
    "total_ee",
    "total_power_w",
    "total_throughput",
    "cardinality",
    "matching_passes",
    "solver_iterations",
    "per_sc_users",
    "per_user_scs",
    "error",
];

pub const AGGREGATE_COLUMNS: [&str; 14] = [
    "sweep",
    "value",
    "scheme",
    "trials",
    "failures",
    "ee_mean",
    "ee_median",
    "ee_std",
    "power_mean",
    "power_median",
    "power_std",
    "throughput_mean",
    "throughput_median",
    "throughput_std",
];

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn join(h: &[usize]) -> String {
    h.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per (sweep value, trial, scheme). Histograms are `;`-joined
/// counts indexed from zero.
pub fn write_trials_csv(trials: &[TrialResult], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    rows(
        path,
        &TRIAL_COLUMNS,
        trials.iter().map(|r| {
            vec![
                r.sweep.name().to_string(),
                r.value.to_string(),
                r.trial.to_string(),
                r.scheme.to_string(),
                r.seed.to_string(),
                r.scenario_hash.to_string(),
                r.total_ee.to_string(),
                r.total_power_w.to_string(),
                r.total_throughput.to_string(),
                r.cardinality.to_string(),
                r.matching_passes.to_string(),
                r.solver_iterations.to_string(),
                join(&r.per_sc_users),
                join(&r.per_user_scs),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_aggregates_csv(aggs: &[Aggregate], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    rows(
        path,
        &AGGREGATE_COLUMNS,
        aggs.iter().map(|a| {
            let mut r = vec![
                a.sweep.name().to_string(),
                a.value.to_string(),
                a.scheme.to_string(),
                a.trials.to_string(),
                a.failures.to_string(),
            ];
            for s in [a.ee, a.power, a.throughput] {
                r.extend([s.mean, s.median, s.std].map(|v| v.to_string()));
            }
            r
        }),
    )
}

/// Summed occupancy histograms over the successful trials of one
/// (sweep value, scheme).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSummary {
    pub sweep: SweepKind,
    pub value: f64,
    pub scheme: Scheme,
    pub trials: usize,
    /// `per_sc_users[k]`: subchannels with `k` users, summed over trials.
    pub per_sc_users: Vec<usize>,
    /// `per_user_scs[j]`: users holding `j` subchannels, summed over trials.
    pub per_user_scs: Vec<usize>,
    /// Matched (user, subchannel) pairs, summed over trials.
    pub total_pairs: usize,
}

fn add_into(acc: &mut Vec<usize>, h: &[usize]) {
    if acc.len() < h.len() {
        acc.resize(h.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(h) {
        *a += b;
    }
}

pub fn histogram_summaries(trials: &[TrialResult]) -> Vec<HistogramSummary> {
    let mut out: Vec<HistogramSummary> = Vec::new();
    for r in trials.iter().filter(|r| !r.failed()) {
        let idx = match out
            .iter()
            .position(|h| h.sweep == r.sweep && h.value == r.value && h.scheme == r.scheme)
        {
            Some(i) => i,
            None => {
                out.push(HistogramSummary {
                    sweep: r.sweep,
                    value: r.value,
                    scheme: r.scheme,
                    trials: 0,
                    per_sc_users: Vec::new(),
                    per_user_scs: Vec::new(),
                    total_pairs: 0,
                });
                out.len() - 1
            }
        };
        let h = &mut out[idx];
        h.trials += 1;
        add_into(&mut h.per_sc_users, &r.per_sc_users);
        add_into(&mut h.per_user_scs, &r.per_user_scs);
        h.total_pairs += r.cardinality;
    }
    out.sort_by(|a, b| (a.sweep, a.scheme).cmp(&(b.sweep, b.scheme)).then(a.value.total_cmp(&b.value)));
    out
}

const FIGURE_TABLES: [(&str, SweepKind, Metric); 7] = [
    ("ee_vs_users.csv", SweepKind::Users, Metric::Ee),
    ("power_vs_users.csv", SweepKind::Users, Metric::Power),
    ("throughput_vs_users.csv", SweepKind::Users, Metric::Throughput),
    ("ee_vs_pmax.csv", SweepKind::PMaxDbw, Metric::Ee),
    ("power_vs_pmax.csv", SweepKind::PMaxDbw, Metric::Power),
    ("ee_vs_pc.csv", SweepKind::PcDbw, Metric::Ee),
    ("power_vs_pc.csv", SweepKind::PcDbw, Metric::Power),
];

#[derive(Debug, Clone, Copy)]
enum Metric {
    Ee,
    Power,
    Throughput,
}

/// Writes the seven figure tables and `sc_user_histograms.json` into
/// `out_dir`. Tables whose sweep is absent from `trials` get a header
/// only. Columns: sweep parameter, `scheme`, `mean`, `median`, `std`,
/// `std_err`, `trials`, `failures`.
pub fn emit_figures_data(trials: &[TrialResult], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let aggs = aggregate(trials);
    let mut files = Vec::new();
    for (name, kind, metric) in FIGURE_TABLES {
        let path = dir.join(name);
        let header = [kind.name(), "scheme", "mean", "median", "std", "std_err", "trials", "failures"];
        let data = aggs.iter().filter(|a| a.sweep == kind).map(|a| {
            let s = match metric {
                Metric::Ee => a.ee,
                Metric::Power => a.power,
                Metric::Throughput => a.throughput,
            };
            let se = s.std / (a.trials as f64).sqrt();
            vec![
                a.value.to_string(),
                a.scheme.to_string(),
                s.mean.to_string(),
                s.median.to_string(),
                s.std.to_string(),
                se.to_string(),
                a.trials.to_string(),
                a.failures.to_string(),
            ]
        });
        rows(&path, &header, data)?;
        files.push(path);
    }
    let path = dir.join("sc_user_histograms.json");
    let json = serde_json::to_string_pretty(&histogram_summaries(trials)).expect("histograms serialize");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(files)
}
