//! Many-to-many user/subchannel matching with addition and substitution
//! strategies.
//!
//! Users propose to subchannels in descending order of their gain. A
//! subchannel accepts a proposal only if some strategy (adding the user,
//! or swapping it for a current member when full) strictly raises its sum
//! rate, evaluated with the subchannel total fixed at `p_max / N`. Rejected
//! pairs, and members swapped out, are never proposed again, so the loop
//! ends after at most `M * N` proposals.

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::noma::{ftpa_split, slots_rate, Assignment};
use crate::power::{per_sc_gp_split, PowerOptions};

/// How a hypothetical membership is scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateModel {
    /// FTPA split of `p_max / N`.
    Ftpa,
    /// Per-subchannel GP split of `p_max / N`.
    Gp(PowerOptions),
}

impl RateModel {
    /// GP scoring with [`PowerOptions::screening`].
    pub fn gp() -> Self {
        RateModel::Gp(PowerOptions::screening())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingOptions {
    pub rate_model: RateModel,
    /// Most subchannels a user may hold; `None` means no limit.
    pub quota: Option<usize>,
    /// Relative rate gain a strategy needs to count as an improvement.
    pub min_gain: f64,
}

impl MatchingOptions {
    pub fn new(rate_model: RateModel) -> Self {
        Self {
            rate_model,
            quota: None,
            min_gain: 1e-9,
        }
    }

    pub fn with_quota(mut self, quota: usize) -> Self {
        self.quota = Some(quota);
        self
    }

    fn improves(&self, candidate: f64, previous: f64) -> bool {
        candidate - previous > self.min_gain * previous.max(1.0)
    }
}

/// Per-user subchannel preference lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceState {
    /// `lists[m]`: subchannels by descending gain, ties to the lower index.
    pub lists: Vec<Vec<usize>>,
}

pub fn build_preferences(scen: &Scenario) -> PreferenceState {
    let lists = scen
        .gains
        .iter()
        .map(|row| {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).expect("finite gains").then(a.cmp(&b)));
            order
        })
        .collect();
    PreferenceState { lists }
}

impl PreferenceState {
    /// Best subchannel `m` does not hold and was not rejected from.
    pub fn next_candidate(&self, m: usize, asg: &Assignment) -> Option<usize> {
        self.lists[m]
            .iter()
            .copied()
            .find(|&n| !asg.contains(m, n) && !asg.is_rejected(m, n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    Addition,
    Substitution { outgoing: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub sc: usize,
    pub incoming: usize,
    pub kind: StrategyKind,
    /// Subchannel sum rate under the strategy, bits/s/Hz.
    pub rate: f64,
}

/// Membership of `sc` after applying `kind` for `incoming`, by user index.
fn members_after(asg: &Assignment, sc: usize, incoming: usize, kind: StrategyKind) -> Vec<usize> {
    let mut v: Vec<usize> = asg
        .members(sc)
        .iter()
        .copied()
        .filter(|&u| kind != StrategyKind::Substitution { outgoing: u })
        .collect();
    v.push(incoming);
    v.sort_unstable();
    v
}

/// Sum rate of `members` on `sc` at subchannel total `p_max / N`; `None`
/// when the GP could not be solved.
pub fn membership_rate(scen: &Scenario, sc: usize, members: &[usize], model: &RateModel) -> Option<f64> {
    if members.is_empty() {
        return Some(0.0);
    }
    let p_n = scen.equal_share();
    match model {
        RateModel::Ftpa => Some(slots_rate(scen, sc, &ftpa_split(sc, members, p_n, scen))),
        RateModel::Gp(opts) => {
            let out = per_sc_gp_split(sc, members, p_n, scen, opts);
            (!out.fallback).then_some(out.rate)
        }
    }
}

/// Rate `Γ_s` of subchannel `sc` if `incoming` joined it by `kind`.
/// Does not touch `asg`.
pub fn evaluate_strategy(
    sc: usize,
    incoming: usize,
    kind: StrategyKind,
    asg: &Assignment,
    scen: &Scenario,
    model: &RateModel,
) -> Option<f64> {
    membership_rate(scen, sc, &members_after(asg, sc, incoming, kind), model)
}

/// All strategies open to `m` on `sc`: one addition if there is room,
/// otherwise one substitution per current member (ascending).
pub fn candidate_strategies(asg: &Assignment, sc: usize, k: usize) -> Vec<StrategyKind> {
    if asg.members(sc).len() < k {
        vec![StrategyKind::Addition]
    } else {
        asg.members(sc)
            .iter()
            .map(|&outgoing| StrategyKind::Substitution { outgoing })
            .collect()
    }
}

/// Trace of the matching loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MatchEvent {
    Proposed { user: usize, sc: usize },
    Executed { strategy: Strategy, previous_rate: f64 },
    Rejected { user: usize, sc: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingOutcome {
    pub assignment: Assignment,
    /// Passes in which at least one user proposed.
    pub passes: usize,
    pub proposals: usize,
    /// Strategy evaluations that failed and were scored as non-improving.
    pub failed_evaluations: usize,
    pub events: Vec<MatchEvent>,
}

/// Runs the matching to completion.
pub fn run_matching(scen: &Scenario, opts: &MatchingOptions) -> MatchingOutcome {
    let prefs = build_preferences(scen);
    let mut asg = Assignment::new(scen.num_users, scen.num_subchannels);
    let mut current = vec![0.0; scen.num_subchannels];
    let mut events = Vec::new();
    let (mut passes, mut proposals, mut failed) = (0, 0, 0);
    loop {
        let mut proposed = false;
        for m in 0..scen.num_users {
            if opts.quota.is_some_and(|q| asg.subchannels_of(m).len() >= q) {
                continue;
            }
            let Some(n) = prefs.next_candidate(m, &asg) else {
                continue;
            };
            proposed = true;
            proposals += 1;
            events.push(MatchEvent::Proposed { user: m, sc: n });
            let previous = current[n];
            let mut best: Option<Strategy> = None;
            for kind in candidate_strategies(&asg, n, scen.max_users_per_sc) {
                let Some(rate) = evaluate_strategy(n, m, kind, &asg, scen, &opts.rate_model) else {
                    failed += 1;
                    continue;
                };
                if opts.improves(rate, previous) && best.is_none_or(|b| rate > b.rate) {
                    best = Some(Strategy {
                        sc: n,
                        incoming: m,
                        kind,
                        rate,
                    });
                }
            }
            match best {
                None => {
                    asg.reject(m, n);
                    events.push(MatchEvent::Rejected { user: m, sc: n });
                }
                Some(s) => {
                    if let StrategyKind::Substitution { outgoing } = s.kind {
                        asg.reject(outgoing, n);
                    }
                    asg.insert(m, n);
                    current[n] = s.rate;
                    events.push(MatchEvent::Executed {
                        strategy: s,
                        previous_rate: previous,
                    });
                }
            }
        }
        if !proposed {
            break;
        }
        passes += 1;
    }
    MatchingOutcome {
        assignment: asg,
        passes,
        proposals,
        failed_evaluations: failed,
        events,
    }
}

/// First unmatched pair `(m, n)` (by user, then subchannel) for which some
/// strategy would strictly raise subchannel `n`'s rate, or `None` if the
/// matching is pairwise stable. Rejected pairs are included.
pub fn find_blocking_pair(asg: &Assignment, scen: &Scenario, opts: &MatchingOptions) -> Option<(usize, usize)> {
    let current: Vec<Option<f64>> = (0..scen.num_subchannels)
        .map(|n| {
            let members: Vec<usize> = asg.members(n).iter().copied().collect();
            membership_rate(scen, n, &members, &opts.rate_model)
        })
        .collect();
    for m in 0..scen.num_users {
        if opts.quota.is_some_and(|q| asg.subchannels_of(m).len() >= q) {
            continue;
        }
        for n in 0..scen.num_subchannels {
            if asg.contains(m, n) {
                continue;
            }
            let Some(previous) = current[n] else { continue };
            let blocking = candidate_strategies(asg, n, scen.max_users_per_sc).into_iter().any(|kind| {
                evaluate_strategy(n, m, kind, asg, scen, &opts.rate_model).is_some_and(|r| opts.improves(r, previous))
            });
            if blocking {
                return Some((m, n));
            }
        }
    }
    None
}
