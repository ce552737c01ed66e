// SIC decoding, SINR, rates and energy efficiency on a hand-made
// two-subchannel instance.
//
// `cargo run --example noma_rates`

use noma_ee::channel::Scenario;
use noma_ee::noma::{decoding_order, ftpa_split, sinr, subchannel_ee, subchannel_rate, total_ee, Assignment, PowerAllocation};

pub fn run() -> noma_ee::Result<()> {
    // gains already divided by the noise power
    let gains = vec![vec![0.4141, 2.0], vec![6.2512, 0.5], vec![1.5, 3.0]];
    let scen = Scenario::from_gains(gains, 3, 50.0, 1.0)?;
    let asg = Assignment::from_members(3, &[vec![0, 1, 2], vec![0, 2]]);

    let mut powers = PowerAllocation::new(2);
    for n in 0..2 {
        let members: Vec<usize> = asg.members(n).iter().copied().collect();
        powers.set_subchannel(n, ftpa_split(n, &members, scen.equal_share(), &scen));
    }
    powers.validate(&asg, scen.p_max, 1e-9)?;

    for n in 0..2 {
        println!("subchannel {n}, decoding order {:?}", decoding_order(&scen, n, asg.members(n).iter().copied()));
        for &m in asg.members(n) {
            println!("  user {m}: p = {:.3} W, SINR = {:.3}", powers.power(m, n), sinr(n, m, &powers, &asg, &scen)?);
        }
        println!(
            "  rate {:.3} bit/s/Hz, EE {:.4} bit/s/Hz/W",
            subchannel_rate(n, &asg, &powers, &scen),
            subchannel_ee(n, &asg, &powers, &scen)
        );
    }
    println!("total EE {:.4}", total_ee(&asg, &powers, &scen));
    Ok(())
}

#[allow(dead_code)]
fn main() -> noma_ee::Result<()> {
    run()
}
