use crate::channel::Scenario;
use crate::noma::{ftpa_split, Assignment, PowerAllocation};

/// Spends the whole budget: `p_max` is shared equally among the occupied
/// subchannels and split by FTPA within each.
pub fn baseline_full_power(asg: &Assignment, scen: &Scenario) -> PowerAllocation {
    let occupied: Vec<usize> = (0..scen.num_subchannels).filter(|&n| !asg.members(n).is_empty()).collect();
    let mut out = PowerAllocation::new(scen.num_subchannels);
    if occupied.is_empty() {
        return out;
    }
    let share = scen.p_max / occupied.len() as f64;
    for n in occupied {
        let members: Vec<usize> = asg.members(n).iter().copied().collect();
        out.set_subchannel(n, ftpa_split(n, &members, share, scen));
    }
    out
}
