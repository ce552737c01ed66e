// A small Monte-Carlo sweep over the number of users, written to CSV.
//
// `cargo run --example experiment [out_dir]`

use noma_ee::harness::{run_experiment, ExperimentConfig, Scheme, Sweep};

pub fn run(out: Option<std::path::PathBuf>) -> noma_ee::Result<()> {
    let cfg = ExperimentConfig {
        sweep: Sweep::Users(vec![6, 12]),
        subchannels: 4,
        max_users_per_sc: 3,
        schemes: vec![Scheme::Scheme1, Scheme::Scheme3, Scheme::Scheme5, Scheme::Baseline],
        trials: 3,
        seed: 5,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    println!("{}", cfg.to_toml());

    let res = run_experiment(&cfg)?;
    for a in &res.aggregates {
        println!(
            "M = {:>2} {:>8}: EE {:8.3} ± {:6.3}, power {:7.3} W",
            a.value, a.scheme, a.ee.mean, a.ee.std, a.power.mean
        );
    }
    let dir = out.unwrap_or_else(|| std::env::temp_dir().join("noma_ee_experiment"));
    for f in res.write(&dir)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noma_ee::Result<()> {
    run(std::env::args_os().nth(1).map(Into::into))
}
