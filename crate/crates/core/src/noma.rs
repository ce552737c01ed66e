//! NOMA link arithmetic: decoding order, interference sets, SINR, rates,
//! energy efficiency and FTPA power splitting.
//!
//! On subchannel `n`, user `m` is interfered by every co-scheduled user
//! with a strictly larger gain (ties go to the lower user index). Rates are
//! `log2(1 + gap * SINR)` where `gap` is [`Scenario::sinr_gap`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};

/// User/subchannel matching state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    users_per_sc: Vec<BTreeSet<usize>>,
    scs_per_user: Vec<BTreeSet<usize>>,
    rejections: BTreeSet<(usize, usize)>,
}

impl Assignment {
    pub fn new(num_users: usize, num_subchannels: usize) -> Self {
        Self {
            users_per_sc: vec![BTreeSet::new(); num_subchannels],
            scs_per_user: vec![BTreeSet::new(); num_users],
            rejections: BTreeSet::new(),
        }
    }

    /// Builds an assignment from per-subchannel member lists.
    pub fn from_members(num_users: usize, members: &[Vec<usize>]) -> Self {
        let mut a = Self::new(num_users, members.len());
        for (n, users) in members.iter().enumerate() {
            for &m in users {
                a.insert(m, n);
            }
        }
        a
    }

    pub fn num_users(&self) -> usize {
        self.scs_per_user.len()
    }

    pub fn num_subchannels(&self) -> usize {
        self.users_per_sc.len()
    }

    pub fn members(&self, n: usize) -> &BTreeSet<usize> {
        &self.users_per_sc[n]
    }

    pub fn subchannels_of(&self, m: usize) -> &BTreeSet<usize> {
        &self.scs_per_user[m]
    }

    pub fn contains(&self, m: usize, n: usize) -> bool {
        self.users_per_sc[n].contains(&m)
    }

    pub fn insert(&mut self, m: usize, n: usize) {
        debug_assert!(!self.is_rejected(m, n), "inserting rejected pair ({m}, {n})");
        self.users_per_sc[n].insert(m);
        self.scs_per_user[m].insert(n);
    }

    pub fn remove(&mut self, m: usize, n: usize) -> bool {
        self.scs_per_user[m].remove(&n);
        self.users_per_sc[n].remove(&m)
    }

    /// Marks `(m, n)` as permanently rejected, unmatching it if needed.
    pub fn reject(&mut self, m: usize, n: usize) {
        self.remove(m, n);
        self.rejections.insert((m, n));
    }

    pub fn is_rejected(&self, m: usize, n: usize) -> bool {
        self.rejections.contains(&(m, n))
    }

    pub fn rejections(&self) -> &BTreeSet<(usize, usize)> {
        &self.rejections
    }

    /// Number of matched (user, subchannel) pairs.
    pub fn cardinality(&self) -> usize {
        self.users_per_sc.iter().map(BTreeSet::len).sum()
    }

    pub fn occupied_subchannels(&self) -> usize {
        self.users_per_sc.iter().filter(|s| !s.is_empty()).count()
    }

    /// Checks symmetry of the two views, the capacity `k` and that no
    /// rejected pair is matched.
    pub fn validate(&self, k: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        for (n, users) in self.users_per_sc.iter().enumerate() {
            if users.len() > k {
                return bad(format!("subchannel {n} holds {} users (K = {k})", users.len()));
            }
            for &m in users {
                if !self.scs_per_user[m].contains(&n) {
                    return bad(format!("pair ({m}, {n}) missing from user view"));
                }
                if self.rejections.contains(&(m, n)) {
                    return bad(format!("rejected pair ({m}, {n}) is matched"));
                }
            }
        }
        for (m, scs) in self.scs_per_user.iter().enumerate() {
            for &n in scs {
                if !self.users_per_sc[n].contains(&m) {
                    return bad(format!("pair ({m}, {n}) missing from subchannel view"));
                }
            }
        }
        Ok(())
    }
}

/// Transmit powers on matched slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// `slots[n]`: `(user, power)` pairs on subchannel `n`, by user index.
    slots: Vec<Vec<(usize, f64)>>,
}

impl PowerAllocation {
    pub fn new(num_subchannels: usize) -> Self {
        Self {
            slots: vec![Vec::new(); num_subchannels],
        }
    }

    pub fn num_subchannels(&self) -> usize {
        self.slots.len()
    }

    /// Replaces the powers of subchannel `n`.
    pub fn set_subchannel(&mut self, n: usize, mut powers: Vec<(usize, f64)>) {
        powers.sort_by_key(|(m, _)| *m);
        self.slots[n] = powers;
    }

    pub fn subchannel(&self, n: usize) -> &[(usize, f64)] {
        &self.slots[n]
    }

    /// `p[m][n]`, zero on unassigned slots.
    pub fn power(&self, m: usize, n: usize) -> f64 {
        self.slots[n]
            .iter()
            .find(|(u, _)| *u == m)
            .map_or(0.0, |(_, p)| *p)
    }

    /// `p_n`, the total on subchannel `n`.
    pub fn sc_total(&self, n: usize) -> f64 {
        self.slots[n].iter().map(|(_, p)| p).sum()
    }

    pub fn per_sc_total(&self) -> Vec<f64> {
        (0..self.slots.len()).map(|n| self.sc_total(n)).collect()
    }

    pub fn total(&self) -> f64 {
        self.slots.iter().flatten().map(|(_, p)| p).sum()
    }

    /// Non-negativity, support inside `asg`, and `total <= p_max (1 + tol)`.
    pub fn validate(&self, asg: &Assignment, p_max: f64, tol: f64) -> Result<()> {
        for (n, slot) in self.slots.iter().enumerate() {
            for &(m, p) in slot {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::InvalidScenario(format!("power p[{m}][{n}] = {p}")));
                }
                if p > 0.0 && !asg.contains(m, n) {
                    return Err(Error::NotAssigned { user: m, sc: n });
                }
            }
        }
        let total = self.total();
        if total > p_max * (1.0 + tol) {
            return Err(Error::InvalidScenario(format!(
                "total power {total} exceeds budget {p_max}"
            )));
        }
        Ok(())
    }
}

/// True when user `a` decodes after `b` on subchannel `n`, i.e. `a` is
/// the "stronger" of the two (larger gain, ties to the lower index).
#[inline]
pub fn is_stronger(scen: &Scenario, n: usize, a: usize, b: usize) -> bool {
    let (ga, gb) = (scen.gains[a][n], scen.gains[b][n]);
    ga > gb || (ga == gb && a < b)
}

/// `users` sorted strongest first.
pub fn decoding_order(scen: &Scenario, n: usize, users: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = users.into_iter().collect();
    v.sort_by(|&a, &b| {
        scen.gains[b][n]
            .partial_cmp(&scen.gains[a][n])
            .expect("gains are finite")
            .then(a.cmp(&b))
    });
    v
}

/// Co-users of `user` on `sc` that interfere with it.
pub fn interference_set(sc: usize, user: usize, asg: &Assignment, scen: &Scenario) -> Result<Vec<usize>> {
    if !asg.contains(user, sc) {
        return Err(Error::NotAssigned { user, sc });
    }
    Ok(asg
        .members(sc)
        .iter()
        .copied()
        .filter(|&i| i != user && is_stronger(scen, sc, i, user))
        .collect())
}

/// Gap-free SINR of `user` on `sc`.
pub fn sinr(sc: usize, user: usize, powers: &PowerAllocation, asg: &Assignment, scen: &Scenario) -> Result<f64> {
    let interferers = interference_set(sc, user, asg, scen)?;
    let g = scen.gains[user][sc];
    let interference: f64 = interferers.iter().map(|&i| powers.power(i, sc) * g).sum();
    Ok(powers.power(user, sc) * g / (scen.noise[sc] + interference))
}

/// Sum rate (bits/s/Hz, with the scenario's SINR gap) of `slots` sharing
/// subchannel `n`.
pub fn slots_rate(scen: &Scenario, n: usize, slots: &[(usize, f64)]) -> f64 {
    let mut rate = 0.0;
    for &(m, p) in slots {
        if p <= 0.0 {
            continue;
        }
        let h = scen.snr(m, n);
        let interference: f64 = slots
            .iter()
            .filter(|&&(i, _)| i != m && is_stronger(scen, n, i, m))
            .map(|&(_, q)| q)
            .sum();
        rate += (scen.sinr_gap * p * h / (1.0 + h * interference)).ln_1p();
    }
    rate / std::f64::consts::LN_2
}

/// `R_n`, the sum rate of subchannel `sc`.
pub fn subchannel_rate(sc: usize, asg: &Assignment, powers: &PowerAllocation, scen: &Scenario) -> f64 {
    let slots: Vec<(usize, f64)> = asg
        .members(sc)
        .iter()
        .map(|&m| (m, powers.power(m, sc)))
        .collect();
    slots_rate(scen, sc, &slots)
}

/// `E_n = R_n / (p_c + p_n)`; zero when the subchannel carries nothing.
pub fn subchannel_ee(sc: usize, asg: &Assignment, powers: &PowerAllocation, scen: &Scenario) -> f64 {
    let rate = subchannel_rate(sc, asg, powers, scen);
    if rate == 0.0 {
        return 0.0;
    }
    let p: f64 = asg.members(sc).iter().map(|&m| powers.power(m, sc)).sum();
    rate / (scen.p_c + p)
}

/// Energy efficiency of a set of slots on one subchannel.
pub fn slots_ee(scen: &Scenario, n: usize, slots: &[(usize, f64)]) -> f64 {
    let rate = slots_rate(scen, n, slots);
    if rate == 0.0 {
        return 0.0;
    }
    rate / (scen.p_c + slots.iter().map(|(_, p)| p).sum::<f64>())
}

/// System objective `sum_n E_n`.
pub fn total_ee(asg: &Assignment, powers: &PowerAllocation, scen: &Scenario) -> f64 {
    (0..scen.num_subchannels)
        .map(|n| subchannel_ee(n, asg, powers, scen))
        .sum()
}

/// `sum_n R_n`.
pub fn total_rate(asg: &Assignment, powers: &PowerAllocation, scen: &Scenario) -> f64 {
    (0..scen.num_subchannels)
        .map(|n| subchannel_rate(n, asg, powers, scen))
        .sum()
}

/// FTPA fractions `g_m^alpha / sum_i g_i^alpha` for `gains`.
pub fn ftpa_weights(gains: &[f64], alpha: f64) -> Vec<f64> {
    // normalise by the largest gain first to keep g^alpha in range
    let gmax = gains.iter().copied().fold(0.0, f64::max);
    let w: Vec<f64> = gains.iter().map(|g| (g / gmax).powf(alpha)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Splits `p_n` among `members` of subchannel `sc` by FTPA with the
/// scenario's `ftpa_alpha`. Returned in the order of `members`.
pub fn ftpa_split(sc: usize, members: &[usize], p_n: f64, scen: &Scenario) -> Vec<(usize, f64)> {
    let gains: Vec<f64> = members.iter().map(|&m| scen.gains[m][sc]).collect();
    ftpa_weights(&gains, scen.ftpa_alpha)
        .into_iter()
        .zip(members)
        .map(|(w, &m)| (m, w * p_n))
        .collect()
}
