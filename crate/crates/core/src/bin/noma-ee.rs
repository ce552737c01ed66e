use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use noma_ee::harness::{run_experiment, ExperimentConfig, Scheme, Sweep, SweepKind};
use noma_ee::Error;

/// Monte-Carlo comparison of NOMA resource allocation schemes.
#[derive(Debug, Parser)]
#[command(name = "noma-ee", version)]
struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Schemes to run: scheme1..scheme5, baseline.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    /// User counts; more than one sweeps over them.
    #[arg(long, value_delimiter = ',')]
    users: Vec<usize>,
    #[arg(long)]
    subchannels: Option<usize>,
    /// Most users per subchannel.
    #[arg(long)]
    k: Option<usize>,
    /// Total power budget in dBW; more than one value sweeps over them.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pmax_dbw: Vec<f64>,
    /// Circuit power per subchannel in dBW; more than one value sweeps.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pc_dbw: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Greedy power step in watts.
    #[arg(long)]
    delta: Option<f64>,
    /// Series terms in the first GP stage.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    log_terms: Option<u8>,
    /// Disable the SINR gap.
    #[arg(long)]
    ideal: bool,
    /// Directory for the CSV and JSON outputs.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply<T: Copy>(
    cfg: &mut ExperimentConfig,
    kind: SweepKind,
    values: &[T],
    fixed: fn(&mut ExperimentConfig, T),
    sweep: fn(Vec<T>) -> Sweep,
) -> bool {
    match values {
        [] => false,
        [v] => {
            fixed(cfg, *v);
            if cfg.sweep.kind() == kind {
                cfg.sweep = sweep(vec![*v]);
            }
            false
        }
        many => {
            cfg.sweep = sweep(many.to_vec());
            true
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let swept = [
        apply(&mut cfg, SweepKind::Users, &cli.users, |c, v| c.users = v, Sweep::Users),
        apply(&mut cfg, SweepKind::PMaxDbw, &cli.pmax_dbw, |c, v| c.p_max_dbw = v, Sweep::PMaxDbw),
        apply(&mut cfg, SweepKind::PcDbw, &cli.pc_dbw, |c, v| c.p_c_dbw = v, Sweep::PcDbw),
    ];
    if swept.iter().filter(|&&s| s).count() > 1 {
        return Err(Error::InvalidConfig("only one parameter can take a list of values".into()));
    }
    if !cli.scheme.is_empty() {
        cfg.schemes = cli.scheme.iter().map(|s| s.parse::<Scheme>()).collect::<Result<_, _>>()?;
    }
    if let Some(n) = cli.subchannels {
        cfg.subchannels = n;
    }
    if let Some(k) = cli.k {
        cfg.max_users_per_sc = k;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.delta.is_some() {
        cfg.delta_w = cli.delta;
    }
    if let Some(l) = cli.log_terms {
        cfg.log_terms = l;
    }
    cfg.ideal |= cli.ideal;
    if cli.out.is_some() {
        cfg.out_dir = cli.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 2),
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => return fail(e.kind(), e.to_string(), 2),
    };
    let results = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(e.kind(), e.to_string(), 1),
    };
    let files = match &cfg.out_dir {
        Some(dir) => match results.write(dir) {
            Ok(f) => f,
            Err(e) => return fail(e.kind(), e.to_string(), 1),
        },
        None => Vec::new(),
    };
    let failures = results.trials.iter().filter(|r| r.failed()).count();
    let summary = serde_json::json!({
        "rows": results.trials.len(),
        "failures": failures,
        "files": files,
        "aggregates": results.aggregates,
    });
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    ExitCode::SUCCESS
}
