// Brute-force reference on a tiny instance against every scheme.
//
// `cargo run --example oracle`

use noma_ee::channel::{generate_scenario, CellConfig, LinkBudget};
use noma_ee::harness::{brute_force_oracle, run_schemes, OracleOptions};
use noma_ee::noma::total_ee;
use noma_ee::power::PowerOptions;

pub fn run() -> noma_ee::Result<()> {
    let budget = LinkBudget {
        num_subchannels: 2,
        max_users_per_sc: 2,
        ..LinkBudget::default()
    };
    let scen = generate_scenario(&CellConfig::default(), 3, &budget, 11)?;
    let best = brute_force_oracle(&scen, &OracleOptions::default())?;
    println!("oracle EE {:.4}", best.ee);
    for n in 0..2 {
        println!("  subchannel {n}: {:?}", best.allocation.subchannel(n));
    }
    for (scheme, run) in run_schemes(&noma_ee::harness::Scheme::ALL, &scen, &PowerOptions::default(), scen.p_max / 100.0) {
        let run = run?;
        let ee = total_ee(&run.assignment, &run.allocation, &scen);
        println!("{scheme:>8}: EE {ee:.4} ({:.1}% of oracle)", 100.0 * ee / best.ee);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noma_ee::Result<()> {
    run()
}
