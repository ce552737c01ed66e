//! Exhaustive search over assignments and gridded powers for tiny
//! scenarios.

use std::f64::consts::LN_2;

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::noma::{decoding_order, total_ee, Assignment, PowerAllocation};

pub const MAX_USERS: usize = 4;
pub const MAX_SUBCHANNELS: usize = 3;
pub const MAX_PER_SC: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Grid points per slot, geometric from `p_max * min_fraction` to `p_max`.
    pub points: usize,
    pub min_fraction: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            points: 300,
            min_fraction: 1e-6,
        }
    }
}

impl OracleOptions {
    pub fn grid(&self, p_max: f64) -> Vec<f64> {
        let n = self.points.max(2);
        let lo = (p_max * self.min_fraction).ln();
        let step = (p_max.ln() - lo) / (n - 1) as f64;
        let mut g: Vec<f64> = (0..n).map(|i| (lo + step * i as f64).exp()).collect();
        g[n - 1] = p_max;
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub allocation: PowerAllocation,
    pub ee: f64,
}

/// One operating point of a subchannel: up to two `(user, power)` slots.
#[derive(Debug, Clone, Copy)]
struct Point {
    total: f64,
    ee: f64,
    slots: [Option<(usize, f64)>; 2],
}

impl Point {
    fn slots(&self) -> Vec<(usize, f64)> {
        self.slots.iter().flatten().copied().collect()
    }
}

/// Keeps the points no other point beats with less or equal power.
fn pareto(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.total.total_cmp(&b.total).then(b.ee.total_cmp(&a.ee)));
    let mut best = f64::NEG_INFINITY;
    pts.retain(|p| {
        let keep = p.ee > best;
        best = best.max(p.ee);
        keep
    });
    pts
}

fn subchannel_front(scen: &Scenario, n: usize, grid: &[f64]) -> Vec<Point> {
    let (gap, pc) = (scen.sinr_gap, scen.p_c);
    let mut pts = vec![Point {
        total: 0.0,
        ee: 0.0,
        slots: [None, None],
    }];
    for m in 0..scen.num_users {
        let h = gap * scen.snr(m, n);
        pts.extend(grid.iter().map(|&p| Point {
            total: p,
            ee: (h * p).ln_1p() / LN_2 / (pc + p),
            slots: [Some((m, p)), None],
        }));
    }
    if scen.max_users_per_sc >= 2 {
        for a in 0..scen.num_users {
            for b in a + 1..scen.num_users {
                let order = decoding_order(scen, n, [a, b]);
                let (s, w) = (order[0], order[1]);
                let (hs, hw) = (gap * scen.snr(s, n), scen.snr(w, n));
                // The stronger user never gets more power than the weaker one.
                for (i, &ps) in grid.iter().enumerate() {
                    let rs = (hs * ps).ln_1p();
                    let iw = 1.0 + hw * ps;
                    for &pw in &grid[i..] {
                        let total = ps + pw;
                        if total > scen.p_max {
                            break;
                        }
                        let r = rs + (gap * hw * pw / iw).ln_1p();
                        pts.push(Point {
                            total,
                            ee: r / LN_2 / (pc + total),
                            slots: [Some((s, ps)), Some((w, pw))],
                        });
                    }
                }
                pts = pareto(pts);
            }
        }
    }
    pareto(pts)
}

/// Best combinations of two fronts with total power at most `cap`.
fn merge(a: &[(f64, f64, Vec<usize>)], b: &[Point], cap: f64) -> Vec<(f64, f64, Vec<usize>)> {
    let mut out = Vec::new();
    for (ta, ea, path) in a {
        for (j, pb) in b.iter().enumerate() {
            let total = ta + pb.total;
            if total > cap * (1.0 + 1e-12) {
                break;
            }
            let mut p = path.clone();
            p.push(j);
            out.push((total, ea + pb.ee, p));
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.total_cmp(&x.1)));
    let mut best = f64::NEG_INFINITY;
    out.retain(|x| {
        let keep = x.1 > best;
        best = best.max(x.1);
        keep
    });
    out
}

/// Global optimum of total energy efficiency over every assignment with at
/// most `K` users per subchannel and every gridded power split with the
/// stronger user at no more power than the weaker one and total at most
/// `p_max`.
///
/// Limited to `M <= 4`, `N <= 3`, `K <= 2` and zero minimum rates.
pub fn brute_force_oracle(scen: &Scenario, opts: &OracleOptions) -> Result<OracleResult> {
    let (m, n, k) = (scen.num_users, scen.num_subchannels, scen.max_users_per_sc);
    if m > MAX_USERS || n > MAX_SUBCHANNELS || k > MAX_PER_SC || m == 0 || n == 0 || k == 0 {
        return Err(Error::OracleScale { m, n, k });
    }
    if scen.min_rates.iter().any(|&r| r > 0.0) {
        return Err(Error::InvalidScenario("the oracle needs zero minimum rates".into()));
    }
    let grid = opts.grid(scen.p_max);
    let fronts: Vec<Vec<Point>> = (0..n).map(|sc| subchannel_front(scen, sc, &grid)).collect();
    let mut acc = vec![(0.0, 0.0, Vec::new())];
    for f in &fronts {
        acc = merge(&acc, f, scen.p_max);
    }
    let (_, _, path) = acc
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("the empty assignment is always feasible");
    let mut members = vec![Vec::new(); n];
    let mut allocation = PowerAllocation::new(n);
    for (sc, &j) in path.iter().enumerate() {
        let slots = fronts[sc][j].slots();
        members[sc] = slots.iter().map(|&(u, _)| u).collect();
        allocation.set_subchannel(sc, slots);
    }
    let assignment = Assignment::from_members(m, &members);
    let ee = total_ee(&assignment, &allocation, scen);
    Ok(OracleResult {
        assignment,
        allocation,
        ee,
    })
}
