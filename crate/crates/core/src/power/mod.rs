//! Power loading: GP-based allocators (joint and per subchannel), the
//! one-variable subchannel solve behind the greedy EEM scheme, and the
//! full-power baseline.
//!
//! Every GP allocator runs in two stages. The first is the classical
//! route: each `ln(1 + SINR)` is replaced by its truncated series at zero,
//! the resulting ratio problem is solved by single condensation. At the
//! SINRs of a realistic cell (tens of dB) that series saturates, so a
//! second stage re-expands the one-term series around the current SINR
//! and repeats: the re-centred term matches `ln(1 + x)` up to second order
//! at the expansion point, and each step is again a GP with condensed
//! denominators. Steps are only accepted when the exact energy
//! efficiency improves. Setting [`PowerOptions::refine`] to `false` keeps
//! just the first stage.
//!
//! All reported rates and efficiencies use the exact logarithm.

mod baseline;
mod blocks;
mod greedy;
mod sca;
mod subchannel;

pub use baseline::baseline_full_power;
pub use blocks::{joint_gp_allocate, per_sc_gp_allocate, per_sc_gp_split, JointOutcome, SubchannelAllocation};
pub use greedy::{greedy_eem_allocate, EemMatrix, GreedyOutcome};
pub use subchannel::{solve_subchannel_ee, SolveMethod, SubchannelEeProblem, SubchannelSolution};

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::gp::{CondensationOptions, SeriesTerms};
use crate::noma::{ftpa_weights, Assignment};

/// Solver settings shared by the GP allocators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Series terms used in the first (fixed-expansion) stage.
    pub log_terms: SeriesTerms,
    /// Run the fixed-expansion stage. Without it the refinement starts
    /// straight from the initial point.
    pub fixed_stage: bool,
    /// Run the re-centred refinement stage.
    pub refine: bool,
    /// Outer loop of the first stage; `eps` also stops the refinement.
    pub condensation: CondensationOptions,
    pub max_refine: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            log_terms: SeriesTerms::One,
            fixed_stage: true,
            refine: true,
            condensation: CondensationOptions::default(),
            max_refine: 40,
        }
    }
}

impl PowerOptions {
    /// Cheaper settings for scoring many hypothetical memberships: the
    /// refinement starts directly from the best initial point and stops on
    /// a coarse step.
    pub fn screening() -> Self {
        let mut o = Self::default();
        o.fixed_stage = false;
        o.condensation.eps = 1e-2;
        o
    }
}

/// Which allocator a scheme uses after matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerScheme {
    JointGp,
    GreedyEem,
    FullPower,
}

/// Per-subchannel power floors implied by the scenario's minimum rates.
///
/// A user's requirement is spread evenly over its subchannels; on each, the
/// floor is the smallest subchannel total whose FTPA split meets it. Floors
/// that cannot be met by any power are set to `p_max`, which leaves the
/// joint problem infeasible and surfaces as a solver error.
pub fn min_rate_floors(asg: &Assignment, scen: &Scenario) -> Vec<f64> {
    let mut floors = vec![0.0; scen.num_subchannels];
    for m in 0..scen.num_users {
        let need = scen.min_rate(m);
        let scs = asg.subchannels_of(m);
        if need <= 0.0 || scs.is_empty() {
            continue;
        }
        let target = (need / scs.len() as f64).exp2() - 1.0;
        for &n in scs {
            let members: Vec<usize> = asg.members(n).iter().copied().collect();
            let gains: Vec<f64> = members.iter().map(|&i| scen.gains[i][n]).collect();
            let w = ftpa_weights(&gains, scen.ftpa_alpha);
            let own = members.iter().position(|&i| i == m).expect("member of its subchannel");
            let above: f64 = members
                .iter()
                .zip(&w)
                .filter(|(&i, _)| i != m && crate::noma::is_stronger(scen, n, i, m))
                .map(|(_, g)| g)
                .sum();
            let h = scen.snr(m, n);
            // gap h w p / (1 + h above p) = target, solved for p
            let slope = scen.sinr_gap * w[own] - target * above;
            let p = if slope > 0.0 { target / (h * slope) } else { f64::INFINITY };
            floors[n] = f64::max(floors[n], p.min(scen.p_max));
        }
    }
    floors
}
