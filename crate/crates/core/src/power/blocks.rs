//! GP allocators over one or several subchannels, each with its own
//! power split (no FTPA constraint).
//!
//! Variables per subchannel block with `K` members (strongest first): the
//! powers `p_1..p_K`, one auxiliary per member (the series lower bound on
//! its rate) and the block's efficiency epigraph `t`. Inside a block the
//! power order is reversed to the gain order, `p_k <= p_{k+1}`, so SIC stays
//! valid for any solver output.

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::gp::{Constraint, GpError, GpProblem, Monomial, Objective, Posynomial, SeriesTerms};
use crate::noma::{decoding_order, ftpa_split, slots_ee, slots_rate, Assignment, PowerAllocation};

use super::sca::{self, ScaModel};
use super::{min_rate_floors, PowerOptions, SubchannelEeProblem};

/// Powers chosen for one subchannel.
#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelAllocation {
    pub powers: Vec<(usize, f64)>,
    /// Exact sum rate, bits/s/Hz.
    pub rate: f64,
    /// Exact energy efficiency, bits/s/Hz per watt.
    pub ee: f64,
    /// Set when the GP failed and an FTPA split was used instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub allocation: PowerAllocation,
    /// Exact total energy efficiency, bits/s/Hz per watt.
    pub ee: f64,
    /// True when independent per-subchannel optima already fit the budget.
    pub decomposed: bool,
    pub gp_solves: usize,
}

#[derive(Debug, Clone)]
struct Block {
    sc: usize,
    users: Vec<usize>,
    h: Vec<f64>,
    floor: f64,
    cap: f64,
}

struct BlockModel {
    blocks: Vec<Block>,
    gap: f64,
    p_c: f64,
    /// Shared budget over all blocks; `None` leaves each block to its cap.
    budget: Option<f64>,
    /// Charge each block its cap instead of its actual power, which turns
    /// the efficiency objective into the sum rate.
    fixed_total: bool,
    base: Vec<usize>,
    pbase: Vec<usize>,
    dim: usize,
}

impl BlockModel {
    fn new(blocks: Vec<Block>, scen: &Scenario, budget: Option<f64>) -> Self {
        let mut base = Vec::new();
        let mut pbase = Vec::new();
        let (mut dim, mut np) = (0, 0);
        for b in &blocks {
            base.push(dim);
            pbase.push(np);
            dim += 2 * b.users.len() + 1;
            np += b.users.len();
        }
        Self {
            blocks,
            gap: scen.sinr_gap,
            p_c: scen.p_c,
            budget,
            fixed_total: false,
            base,
            pbase,
            dim,
        }
    }

    fn p(&self, b: usize, k: usize) -> usize {
        self.base[b] + k
    }

    fn aux(&self, b: usize, k: usize) -> usize {
        self.base[b] + self.blocks[b].users.len() + k
    }

    fn t(&self, b: usize) -> usize {
        self.base[b] + 2 * self.blocks[b].users.len()
    }

    fn mono(&self, coeff: f64, entries: &[(usize, f64)]) -> Monomial {
        Monomial::sparse(coeff, self.dim, entries)
    }

    fn block_powers<'a>(&self, powers: &'a [f64], b: usize) -> &'a [f64] {
        &powers[self.pbase[b]..self.pbase[b] + self.blocks[b].users.len()]
    }

    /// Per-member gap-scaled SINR at `p` (block order).
    fn sinrs(&self, b: usize, p: &[f64]) -> Vec<f64> {
        let h = &self.blocks[b].h;
        let mut above = 0.0;
        p.iter()
            .zip(h)
            .map(|(pk, hk)| {
                let x = self.gap * hk * pk / (1.0 + hk * above);
                above += pk;
                x
            })
            .collect()
    }

    /// Power charged to block `b` at its powers `p`.
    fn charged(&self, b: usize, p: &[f64]) -> f64 {
        self.p_c
            + if self.fixed_total {
                self.blocks[b].cap
            } else {
                p.iter().sum::<f64>()
            }
    }

    /// `t (p_c + sum p)` scaled by `scale`.
    fn cost_terms(&self, b: usize, scale: f64) -> Vec<Monomial> {
        let t = self.t(b);
        if self.fixed_total {
            return vec![self.mono((self.p_c + self.blocks[b].cap) * scale, &[(t, 1.0)])];
        }
        let mut terms: Vec<Monomial> = (0..self.blocks[b].users.len())
            .map(|k| self.mono(scale, &[(t, 1.0), (self.p(b, k), 1.0)]))
            .collect();
        if self.p_c > 0.0 {
            terms.push(self.mono(self.p_c * scale, &[(t, 1.0)]));
        }
        terms
    }

    /// Objective, bounds, power-sum and ordering constraints.
    fn skeleton(&self) -> std::result::Result<GpProblem, GpError> {
        let objective = if self.blocks.len() == 1 {
            Objective::Posynomial(self.mono(1.0, &[(self.t(0), -1.0)]).into())
        } else {
            Objective::Ratio {
                num: Monomial::constant(1.0, self.dim).into(),
                den: Posynomial::new((0..self.blocks.len()).map(|b| self.mono(1.0, &[(self.t(b), 1.0)])).collect())?,
            }
        };
        let mut prob = GpProblem::new(self.dim, objective);
        for (b, block) in self.blocks.iter().enumerate() {
            let upper = self.budget.unwrap_or(block.cap);
            let sum = || -> std::result::Result<Posynomial, GpError> {
                Posynomial::new((0..block.users.len()).map(|k| self.mono(1.0, &[(self.p(b, k), 1.0)])).collect())
            };
            for k in 0..block.users.len() {
                prob = prob.with_bounds(self.p(b, k), upper * 1e-12, upper);
                if k + 1 < block.users.len() {
                    prob.push(Constraint::Posynomial(
                        self.mono(1.0, &[(self.p(b, k), 1.0), (self.p(b, k + 1), -1.0)]).into(),
                    ));
                }
            }
            if self.budget.is_none() && block.users.len() > 1 {
                prob.push(Constraint::Posynomial(sum()?.scale(1.0 / block.cap)));
            }
            if block.floor > 0.0 {
                prob.push(Constraint::Ratio {
                    num: Monomial::constant(block.floor, self.dim).into(),
                    den: sum()?,
                });
            }
        }
        if let Some(budget) = self.budget {
            let all: Vec<Monomial> = (0..self.blocks.len())
                .flat_map(|b| (0..self.blocks[b].users.len()).map(move |k| (b, k)))
                .map(|(b, k)| self.mono(1.0 / budget, &[(self.p(b, k), 1.0)]))
                .collect();
            prob.push(Constraint::Posynomial(Posynomial::new(all)?));
        }
        Ok(prob)
    }

    fn start_powers(&self, powers: &[f64]) -> Vec<f64> {
        let mut q = vec![1.0; self.dim];
        for b in 0..self.blocks.len() {
            for (k, p) in self.block_powers(powers, b).iter().enumerate() {
                q[self.p(b, k)] = *p;
            }
        }
        q
    }
}

impl ScaModel for BlockModel {
    fn fixed_problem(&self, terms: SeriesTerms) -> std::result::Result<GpProblem, GpError> {
        let mut prob = self.skeleton()?;
        for (b, block) in self.blocks.iter().enumerate() {
            for k in 0..block.users.len() {
                let (y, pk) = (self.aux(b, k), self.p(b, k));
                prob = prob.with_bounds(y, 1e-30, 1.0);
                // y (2 + 2 h I + gap h p_k) / (gap h p_k) <= 1
                let gh = self.gap * block.h[k];
                let mut t = vec![
                    self.mono(2.0 / gh, &[(y, 1.0), (pk, -1.0)]),
                    self.mono(1.0, &[(y, 1.0)]),
                ];
                for i in 0..k {
                    t.push(self.mono(2.0 / self.gap, &[(y, 1.0), (pk, -1.0), (self.p(b, i), 1.0)]));
                }
                prob.push(Constraint::Posynomial(Posynomial::new(t)?));
            }
            let mut approx: Vec<Monomial> = (0..block.users.len())
                .map(|k| self.mono(2.0, &[(self.aux(b, k), 1.0)]))
                .collect();
            if terms == SeriesTerms::Two {
                approx.extend((0..block.users.len()).map(|k| self.mono(2.0 / 3.0, &[(self.aux(b, k), 3.0)])));
            }
            prob.push(Constraint::Ratio {
                num: Posynomial::new(self.cost_terms(b, 1.0))?,
                den: Posynomial::new(approx)?,
            });
        }
        Ok(prob)
    }

    fn fixed_start(&self, powers: &[f64], terms: SeriesTerms) -> Vec<f64> {
        let mut q = self.start_powers(powers);
        for b in 0..self.blocks.len() {
            let p = self.block_powers(powers, b);
            let mut approx = 0.0;
            for (k, x) in self.sinrs(b, p).into_iter().enumerate() {
                let y = 0.9 * x / (2.0 + x);
                q[self.aux(b, k)] = y;
                approx += match terms {
                    SeriesTerms::One => 2.0 * y,
                    SeriesTerms::Two => 2.0 * y + 2.0 / 3.0 * y * y * y,
                };
            }
            q[self.t(b)] = 0.9 * approx / self.charged(b, p);
        }
        q
    }

    fn recentred(&self, powers: &[f64]) -> std::result::Result<(GpProblem, Vec<f64>), GpError> {
        let mut prob = self.skeleton()?;
        let mut q = self.start_powers(powers);
        for (b, block) in self.blocks.iter().enumerate() {
            let p = self.block_powers(powers, b);
            let x0 = self.sinrs(b, p);
            let rate: f64 = x0.iter().map(|x| x.ln_1p()).sum();
            let budget = rate + 2.0 * block.users.len() as f64;
            for k in 0..block.users.len() {
                let (u, pk, h) = (self.aux(b, k), self.p(b, k), block.h[k]);
                // u ((2 + x0)(1 + h I) + gap h p_k) >= 4 (1 + x0)(1 + h I)
                let c = 4.0 * (1.0 + x0[k]);
                let mut num = vec![Monomial::constant(c, self.dim)];
                let mut den = vec![
                    self.mono(2.0 + x0[k], &[(u, 1.0)]),
                    self.mono(self.gap * h, &[(u, 1.0), (pk, 1.0)]),
                ];
                for i in 0..k {
                    num.push(self.mono(c * h, &[(self.p(b, i), 1.0)]));
                    den.push(self.mono((2.0 + x0[k]) * h, &[(u, 1.0), (self.p(b, i), 1.0)]));
                }
                prob.push(Constraint::Ratio {
                    num: Posynomial::new(num)?,
                    den: Posynomial::new(den)?,
                });
                q[u] = 2.0 + 1e-3 * rate / block.users.len() as f64;
            }
            // t (p_c + sum p) + sum u <= sum_k (ln(1 + x0_k) + 2)
            let mut cost = self.cost_terms(b, 1.0 / budget);
            cost.extend((0..block.users.len()).map(|k| self.mono(1.0 / budget, &[(self.aux(b, k), 1.0)])));
            prob.push(Constraint::Posynomial(Posynomial::new(cost)?));
            let used: f64 = (0..block.users.len()).map(|k| q[self.aux(b, k)]).sum();
            q[self.t(b)] = 0.999 * (budget - used) / self.charged(b, p);
        }
        Ok((prob, q))
    }

    fn powers(&self, q: &[f64]) -> Vec<f64> {
        (0..self.blocks.len())
            .flat_map(|b| (0..self.blocks[b].users.len()).map(move |k| (b, k)))
            .map(|(b, k)| q[self.p(b, k)])
            .collect()
    }

    fn objective(&self, powers: &[f64]) -> f64 {
        (0..self.blocks.len())
            .map(|b| {
                let p = self.block_powers(powers, b);
                let rate: f64 = self.sinrs(b, p).iter().map(|x| x.ln_1p()).sum();
                rate / self.charged(b, p)
            })
            .sum()
    }
}

impl Block {
    /// `total` pulled strictly inside `(floor, cap)`.
    fn interior(&self, total: f64) -> f64 {
        let margin = 1e-3 * (self.cap - self.floor);
        total.clamp(self.floor + margin, self.cap - margin)
    }
}

fn block(scen: &Scenario, sc: usize, members: &[usize], cap: f64, floor: f64) -> Block {
    let users = decoding_order(scen, sc, members.iter().copied());
    Block {
        sc,
        h: users.iter().map(|&m| scen.snr(m, sc)).collect(),
        users,
        floor,
        cap,
    }
}

/// FTPA split of `total`, listed strongest first.
fn ftpa_start(scen: &Scenario, b: &Block, total: f64) -> Vec<f64> {
    ftpa_split(b.sc, &b.users, total, scen).into_iter().map(|(_, p)| p).collect()
}

/// Near-equal split of `total`, kept strictly ordered so the GP starts in
/// the interior.
fn near_equal(k: usize, total: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..k).map(|i| 1.0 - 1e-3 * (k - 1 - i) as f64).collect();
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| total * w / sum).collect()
}

/// Best total for an equal split of block `b`.
fn equal_split_optimum(scen: &Scenario, b: &Block) -> f64 {
    let k = b.users.len();
    SubchannelEeProblem {
        sc: b.sc,
        users: b.users.clone(),
        snr: b.h.clone(),
        gamma: vec![1.0 / k as f64; k],
        sinr_gap: scen.sinr_gap,
        p_c: scen.p_c,
        p_cap: b.cap,
        p_init: b.cap,
    }
    .bisect()
}

/// Optimized slots of one block and the GP solves spent.
type BlockResult = std::result::Result<(Vec<(usize, f64)>, usize), GpError>;

/// Solves one block on its own. With `fixed_total` the block is charged
/// its full cap, so the GP maximizes the sum rate of a split of the cap.
fn solve_block(scen: &Scenario, b: Block, opts: &PowerOptions, fixed_total: bool) -> BlockResult {
    let (ftpa_total, equal_total) = if fixed_total {
        (b.cap, b.cap)
    } else {
        (scen.equal_share(), equal_split_optimum(scen, &b))
    };
    let ftpa = ftpa_start(scen, &b, b.interior(ftpa_total));
    let equal = near_equal(b.users.len(), b.interior(equal_total));
    let users = b.users.clone();
    let mut model = BlockModel::new(vec![b], scen, None);
    model.fixed_total = fixed_total;
    let start = if model.objective(&equal) > model.objective(&ftpa) { equal } else { ftpa };
    let out = sca::optimize(&model, &start, opts)?;
    Ok((users.into_iter().zip(out.powers).collect(), out.gp_solves))
}

fn single_block(
    sc: usize,
    members: &[usize],
    p_cap: f64,
    scen: &Scenario,
    opts: &PowerOptions,
    fixed_total: bool,
) -> SubchannelAllocation {
    if members.is_empty() {
        return SubchannelAllocation {
            powers: Vec::new(),
            rate: 0.0,
            ee: 0.0,
            fallback: false,
        };
    }
    let b = block(scen, sc, members, p_cap, 0.0);
    let (powers, fallback) = match solve_block(scen, b, opts, fixed_total) {
        Ok((p, _)) => (p, false),
        Err(_) => {
            let total = if fixed_total { p_cap } else { p_cap.min(scen.equal_share()) };
            (ftpa_split(sc, members, total, scen), true)
        }
    };
    SubchannelAllocation {
        rate: slots_rate(scen, sc, &powers),
        ee: slots_ee(scen, sc, &powers),
        powers,
        fallback,
    }
}

/// Energy-efficient powers for one subchannel with total at most `p_cap`.
///
/// If the GP fails the FTPA split of `min(p_cap, p_max / N)` is returned
/// with `fallback` set.
pub fn per_sc_gp_allocate(
    sc: usize,
    members: &[usize],
    p_cap: f64,
    scen: &Scenario,
    opts: &PowerOptions,
) -> SubchannelAllocation {
    single_block(sc, members, p_cap, scen, opts, false)
}

/// Split of a fixed subchannel total `p_n` by the same GP. The efficiency
/// denominator is then constant, so the GP maximizes the sum rate.
///
/// If the GP fails the FTPA split of `p_n` is returned with `fallback` set.
pub fn per_sc_gp_split(
    sc: usize,
    members: &[usize],
    p_n: f64,
    scen: &Scenario,
    opts: &PowerOptions,
) -> SubchannelAllocation {
    single_block(sc, members, p_n, scen, opts, true)
}

fn allocation_of(scen: &Scenario, slots: Vec<(usize, Vec<(usize, f64)>)>) -> PowerAllocation {
    let mut a = PowerAllocation::new(scen.num_subchannels);
    for (n, s) in slots {
        a.set_subchannel(n, s);
    }
    a
}

fn allocation_ee(scen: &Scenario, a: &PowerAllocation) -> f64 {
    (0..scen.num_subchannels).map(|n| slots_ee(scen, n, a.subchannel(n))).sum()
}

/// Joint allocation over all matched slots under the total budget `p_max`,
/// with per-subchannel floors from the users' minimum rates.
///
/// Each subchannel is first optimized on its own with cap `p_max`; when
/// those optima fit the budget together they solve the joint problem
/// exactly. Otherwise the coupled GP is solved from the scaled-down
/// per-subchannel optima. The FTPA equal-split point is kept as a
/// candidate, so the result is never worse than it.
pub fn joint_gp_allocate(asg: &Assignment, scen: &Scenario, opts: &PowerOptions) -> Result<JointOutcome> {
    let floors = min_rate_floors(asg, scen);
    let occupied: Vec<usize> = (0..scen.num_subchannels).filter(|&n| !asg.members(n).is_empty()).collect();
    let blocks: Vec<Block> = occupied
        .iter()
        .map(|&n| {
            let members: Vec<usize> = asg.members(n).iter().copied().collect();
            block(scen, n, &members, scen.p_max, floors[n])
        })
        .collect();

    let mut best: Option<(PowerAllocation, f64, bool)> = None;
    let mut consider = |a: PowerAllocation, decomposed: bool| {
        let ee = allocation_ee(scen, &a);
        if best.as_ref().is_none_or(|(_, e, _)| ee > *e) {
            best = Some((a, ee, decomposed));
        }
    };

    // FTPA equal split, when it honours the floors
    let share = scen.equal_share();
    if occupied.iter().all(|&n| floors[n] <= share) {
        consider(
            allocation_of(scen, blocks.iter().map(|b| (b.sc, ftpa_split(b.sc, &b.users, share, scen))).collect()),
            false,
        );
    }

    let mut separate = Vec::new();
    let mut failure = None;
    let mut gp_solves = 0;
    for b in &blocks {
        match solve_block(scen, b.clone(), opts, false) {
            Ok((p, solves)) => {
                gp_solves += solves;
                separate.push((b.sc, p));
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let separate_total: f64 = separate.iter().flat_map(|(_, s)| s.iter().map(|(_, p)| p)).sum();
    if failure.is_none() && separate_total <= scen.p_max * (1.0 + 1e-9) {
        consider(allocation_of(scen, separate), true);
    } else {
        let start: Vec<f64> = if failure.is_none() {
            let shrink = 0.99 * scen.p_max / separate_total;
            separate.iter().flat_map(|(_, s)| s.iter().map(move |(_, p)| p * shrink)).collect()
        } else {
            blocks.iter().flat_map(|b| ftpa_start(scen, b, b.interior(share * 0.99))).collect()
        };
        let users: Vec<(usize, usize)> = blocks.iter().flat_map(|b| b.users.iter().map(move |&m| (b.sc, m))).collect();
        let model = BlockModel::new(blocks.clone(), scen, Some(scen.p_max));
        match sca::optimize(&model, &start, opts) {
            Ok(out) => {
                gp_solves += out.gp_solves;
                let mut slots: Vec<(usize, Vec<(usize, f64)>)> = occupied.iter().map(|&n| (n, Vec::new())).collect();
                for ((n, m), p) in users.iter().zip(out.powers) {
                    let i = occupied.iter().position(|o| o == n).expect("occupied subchannel");
                    slots[i].1.push((*m, p));
                }
                consider(allocation_of(scen, slots), false);
            }
            Err(e) => {
                return Err(Error::Solver {
                    source: e,
                    last_feasible: best.map(|(a, _, _)| flatten(&a)),
                })
            }
        }
    }

    let (allocation, ee, decomposed) = best.unwrap_or_else(|| (PowerAllocation::new(scen.num_subchannels), 0.0, true));
    Ok(JointOutcome {
        allocation,
        ee,
        decomposed,
        gp_solves,
    })
}

fn flatten(a: &PowerAllocation) -> Vec<(usize, usize, f64)> {
    (0..a.num_subchannels())
        .flat_map(|n| a.subchannel(n).iter().map(move |&(m, p)| (m, n, p)))
        .collect()
}
