//! Greedy fine-grained allocation over an energy-efficiency rate matrix.

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::noma::{ftpa_split, Assignment, PowerAllocation};

use super::subchannel::{solve_subchannel_ee, SolveMethod, SubchannelEeProblem};
use super::PowerOptions;

/// Marginal efficiency of raising each subchannel to each power level.
///
/// Row `a` (zero-based) corresponds to level `(a + 1) * delta`, except the
/// last row which is `p_max`. Row 0 holds `EE_n(delta)`, later rows
/// `EE_n(level_a) - EE_n(level_{a-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct EemMatrix {
    pub delta: f64,
    pub levels: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub marked: Vec<Vec<bool>>,
}

impl EemMatrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// `floor(p_max / delta) + 1` levels.
    pub fn levels_for(p_max: f64, delta: f64) -> Vec<f64> {
        let steps = (p_max / delta * (1.0 + 1e-12)).floor() as usize;
        let mut levels: Vec<f64> = (1..=steps).map(|a| a as f64 * delta).collect();
        levels.push(p_max);
        levels
    }

    /// Builds the matrix from per-subchannel efficiency curves.
    pub fn build(p_max: f64, delta: f64, mut ee: impl FnMut(usize, f64) -> f64, cols: usize) -> Self {
        let levels = Self::levels_for(p_max, delta);
        let mut values = vec![vec![0.0; cols]; levels.len()];
        for n in 0..cols {
            let mut prev = 0.0;
            for (a, &level) in levels.iter().enumerate() {
                let v = ee(n, level);
                values[a][n] = v - prev;
                prev = v;
            }
        }
        let marked = vec![vec![false; cols]; levels.len()];
        Self {
            delta,
            levels,
            values,
            marked,
        }
    }

    /// Highest positive unmarked cell.
    fn best_cell(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (a, row) in self.values.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                if !self.marked[a][n] && v > 0.0 && best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((a, n, v));
                }
            }
        }
        best.map(|(a, n, _)| (a, n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub allocation: PowerAllocation,
    /// Subchannel totals `p_n`.
    pub totals: Vec<f64>,
    /// Unconstrained optima `p_n*` from the first phase.
    pub optima: Vec<f64>,
    /// The optima did not fit the budget and the matrix phase ran.
    pub capped: bool,
    /// The matrix ran out of positive cells before the budget was spent.
    pub exhausted_early: bool,
    /// Subchannel solves that fell back to bisection.
    pub bisections: usize,
    pub gp_solves: usize,
    pub eem: Option<EemMatrix>,
}

/// Greedy allocation with FTPA splits inside subchannels.
///
/// Phase one maximizes each subchannel's efficiency under cap `p_max`. If
/// the optima fit the budget they are used as they are. Otherwise the
/// matrix phase hands out power levels in order of marginal efficiency
/// until the budget is spent. A subchannel's efficiency rises up to its
/// optimum and falls after, so its best value under cap `c` is the value at
/// `min(c, p_n*)`.
pub fn greedy_eem_allocate(asg: &Assignment, scen: &Scenario, delta: f64, opts: &PowerOptions) -> Result<GreedyOutcome> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    let n_sc = scen.num_subchannels;
    let mut problems = Vec::with_capacity(n_sc);
    let mut optima = vec![0.0; n_sc];
    let mut bisections = 0;
    let mut gp_solves = 0;
    for n in 0..n_sc {
        let members: Vec<usize> = asg.members(n).iter().copied().collect();
        if members.is_empty() {
            problems.push(None);
            continue;
        }
        let prob = SubchannelEeProblem::ftpa(n, &members, scen, scen.p_max);
        let sol = solve_subchannel_ee(&prob, opts)?;
        bisections += usize::from(sol.method == SolveMethod::Bisection);
        gp_solves += sol.gp_solves;
        optima[n] = sol.p;
        problems.push(Some(prob));
    }

    let mut totals = optima.clone();
    let mut capped = false;
    let mut exhausted_early = false;
    let mut eem = None;
    if optima.iter().sum::<f64>() > scen.p_max {
        capped = true;
        let mut m = EemMatrix::build(
            scen.p_max,
            delta,
            |n, level| problems[n].as_ref().map_or(0.0, |p| p.ee(level.min(optima[n]))),
            n_sc,
        );
        totals = vec![0.0; n_sc];
        loop {
            let spent: f64 = totals.iter().sum();
            if spent >= scen.p_max * (1.0 - 1e-12) {
                break;
            }
            let Some((a, n)) = m.best_cell() else {
                exhausted_early = true;
                break;
            };
            m.marked[a][n] = true;
            totals[n] = totals[n].max(m.levels[a]);
            let over = totals.iter().sum::<f64>() - scen.p_max;
            if over > 0.0 {
                totals[n] -= over;
            }
        }
        eem = Some(m);
    }

    let mut allocation = PowerAllocation::new(n_sc);
    for (n, prob) in problems.iter().enumerate() {
        if let Some(prob) = prob {
            allocation.set_subchannel(n, ftpa_split(n, &prob.users, totals[n], scen));
        }
    }
    Ok(GreedyOutcome {
        allocation,
        totals,
        optima,
        capped,
        exhausted_early,
        bisections,
        gp_solves,
        eem,
    })
}
