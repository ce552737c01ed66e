// Many-to-many user/subchannel matching with FTPA and GP scoring, and the
// one-to-many variant with one subchannel per user.
//
// `cargo run --example matching`

use noma_ee::channel::{generate_scenario, CellConfig, LinkBudget};
use noma_ee::matching::{find_blocking_pair, run_matching, MatchEvent, MatchingOptions, RateModel};

pub fn run() -> noma_ee::Result<()> {
    let budget = LinkBudget {
        num_subchannels: 4,
        max_users_per_sc: 3,
        ..LinkBudget::default()
    };
    let scen = generate_scenario(&CellConfig::default(), 10, &budget, 7)?;

    for (name, opts) in [
        ("many-to-many, FTPA scoring", MatchingOptions::new(RateModel::Ftpa)),
        ("many-to-many, GP scoring", MatchingOptions::new(RateModel::gp())),
        ("one-to-many", MatchingOptions::new(RateModel::Ftpa).with_quota(1)),
    ] {
        let out = run_matching(&scen, &opts);
        let asg = &out.assignment;
        let executed = out.events.iter().filter(|e| matches!(e, MatchEvent::Executed { .. })).count();
        println!(
            "{name}: {} passes, {} proposals, {executed} executed, {} rejections",
            out.passes,
            out.proposals,
            asg.rejections().len()
        );
        for n in 0..scen.num_subchannels {
            println!("  subchannel {n}: users {:?}", asg.members(n));
        }
        match find_blocking_pair(asg, &scen, &opts) {
            None => println!("  no blocking pair"),
            Some((m, n)) => println!("  user {m} and subchannel {n} would both gain"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noma_ee::Result<()> {
    run()
}
