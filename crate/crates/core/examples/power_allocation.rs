// Power loading on a fixed matching: full power, joint GP, greedy
// marginal-efficiency steps, and the one-variable subchannel problem.
//
// `cargo run --example power_allocation`

use noma_ee::channel::{generate_scenario, CellConfig, LinkBudget};
use noma_ee::matching::{run_matching, MatchingOptions, RateModel};
use noma_ee::noma::{total_ee, total_rate};
use noma_ee::power::{
    baseline_full_power, greedy_eem_allocate, joint_gp_allocate, solve_subchannel_ee, PowerOptions, SubchannelEeProblem,
};

pub fn run() -> noma_ee::Result<()> {
    let budget = LinkBudget {
        num_subchannels: 6,
        max_users_per_sc: 3,
        ..LinkBudget::default()
    };
    let scen = generate_scenario(&CellConfig::default(), 12, &budget, 3)?;
    let asg = run_matching(&scen, &MatchingOptions::new(RateModel::Ftpa)).assignment;
    let opts = PowerOptions::default();

    let full = baseline_full_power(&asg, &scen);
    let joint = joint_gp_allocate(&asg, &scen, &opts)?;
    let greedy = greedy_eem_allocate(&asg, &scen, scen.p_max / 100.0, &opts)?;
    for (name, alloc) in [("full power", &full), ("joint GP", &joint.allocation), ("greedy", &greedy.allocation)] {
        println!(
            "{name:>10}: {:8.3} W, rate {:7.3} bit/s/Hz, EE {:8.3} bit/s/Hz/W",
            alloc.total(),
            total_rate(&asg, alloc, &scen),
            total_ee(&asg, alloc, &scen)
        );
    }

    let members: Vec<usize> = asg.members(0).iter().copied().collect();
    let prob = SubchannelEeProblem::ftpa(0, &members, &scen, scen.p_max);
    let sol = solve_subchannel_ee(&prob, &opts)?;
    println!(
        "subchannel 0 with users {members:?}: best total {:.4} W, EE {:.3} ({:?})",
        sol.p, sol.ee, sol.method
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> noma_ee::Result<()> {
    run()
}
