// Drop users in the cell, draw their channels and save the scenario.
//
// `cargo run --example channel_scenario`

use noma_ee::channel::{generate_scenario, linear_to_db, CellConfig, LinkBudget, Scenario};

pub fn run() -> noma_ee::Result<()> {
    let cell = CellConfig::default();
    let budget = LinkBudget::default();
    let scen = generate_scenario(&cell, 8, &budget, 42)?;

    println!(
        "{} users, {} subchannels, K = {}, p_max = {:.1} W, p_c = {:.3} W, gap = {:.4}",
        scen.num_users, scen.num_subchannels, scen.max_users_per_sc, scen.p_max, scen.p_c, scen.sinr_gap
    );
    for m in 0..scen.num_users {
        let snr: Vec<f64> = (0..scen.num_subchannels).map(|n| linear_to_db(scen.snr(m, n))).collect();
        let best = snr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = snr.iter().sum::<f64>() / snr.len() as f64;
        println!("user {m}: mean SNR {mean:5.1} dB, best subchannel {best:5.1} dB");
    }

    let path = std::env::temp_dir().join("noma_ee_scenario.toml");
    scen.save(&path)?;
    assert_eq!(Scenario::load(&path)?, scen);
    println!("saved to {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> noma_ee::Result<()> {
    run()
}
