//! Energy efficiency of one subchannel as a function of its total power,
//! with the intra-subchannel split fixed.
//!
//! With fractions `gamma` and normalised gains `h` (strongest first), user
//! `m` sees `SINR_m = a_m p / (1 + b_m p)` where `a_m = gap h_m gamma_m` and
//! `b_m = h_m * sum_{i<m} gamma_i`. Hence
//! `prod_m (1 + SINR_m) = N(p) / D(p) = 1 + C(p) / D(p)` with
//! `D = prod (1 + b_m p)`, `N = prod (1 + (a_m + b_m) p)` and `C = N - D`, all
//! polynomials in `p` with non-negative coefficients.

use std::f64::consts::LN_2;

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::gp::{Constraint, GpError, GpProblem, Monomial, Objective, Posynomial, SeriesTerms};
use crate::noma::{decoding_order, ftpa_weights};

use super::sca::{self, ScaModel};
use super::PowerOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelEeProblem {
    pub sc: usize,
    /// Member indices, strongest first.
    pub users: Vec<usize>,
    /// `g / noise` per member, same order.
    pub snr: Vec<f64>,
    /// Power fractions, same order; sum to one.
    pub gamma: Vec<f64>,
    pub sinr_gap: f64,
    pub p_c: f64,
    pub p_cap: f64,
    /// Starting total power of the solver.
    pub p_init: f64,
}

/// How [`solve_subchannel_ee`] reached its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Gp,
    /// The GP stages failed; the exact objective was maximized by bisection
    /// on its derivative.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubchannelSolution {
    /// Optimal subchannel total `p_n*`.
    pub p: f64,
    /// Exact energy efficiency at `p`, bits/s/Hz per watt.
    pub ee: f64,
    pub method: SolveMethod,
    /// GP solves spent.
    pub gp_solves: usize,
}

impl SubchannelEeProblem {
    /// FTPA split of subchannel `sc` among `members`, capped at `p_cap`.
    pub fn ftpa(sc: usize, members: &[usize], scen: &Scenario, p_cap: f64) -> Self {
        let users = decoding_order(scen, sc, members.iter().copied());
        let gains: Vec<f64> = users.iter().map(|&m| scen.gains[m][sc]).collect();
        Self {
            sc,
            snr: users.iter().map(|&m| scen.snr(m, sc)).collect(),
            gamma: ftpa_weights(&gains, scen.ftpa_alpha),
            users,
            sinr_gap: scen.sinr_gap,
            p_c: scen.p_c,
            p_cap,
            p_init: p_cap.min(scen.equal_share()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.users.len();
        let bad = |msg: &str| Err(Error::InvalidScenario(format!("subchannel problem: {msg}")));
        if k == 0 || self.snr.len() != k || self.gamma.len() != k {
            return bad("need one gain and one fraction per member");
        }
        if self.snr.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return bad("gains must be positive");
        }
        if self.gamma.iter().any(|g| !(*g >= 0.0)) || (self.gamma.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("fractions must be non-negative and sum to one");
        }
        if self.snr.windows(2).any(|w| w[0] < w[1]) {
            return bad("members must be ordered strongest first");
        }
        if !(self.p_cap > 0.0 && self.p_cap.is_finite()) || !(self.p_c >= 0.0) {
            return bad("need p_cap > 0 and p_c >= 0");
        }
        Ok(())
    }

    fn coefficients(&self) -> Vec<(f64, f64)> {
        let mut above = 0.0;
        self.snr
            .iter()
            .zip(&self.gamma)
            .map(|(h, g)| {
                let ab = (self.sinr_gap * h * g, h * above);
                above += g;
                ab
            })
            .collect()
    }

    /// Sum rate in nats at subchannel total `p`.
    pub fn rate_nats(&self, p: f64) -> f64 {
        self.coefficients()
            .iter()
            .map(|(a, b)| ((a + b) * p).ln_1p() - (b * p).ln_1p())
            .sum()
    }

    fn rate_slope(&self, p: f64) -> f64 {
        self.coefficients()
            .iter()
            .map(|(a, b)| (a + b) / (1.0 + (a + b) * p) - b / (1.0 + b * p))
            .sum()
    }

    /// Exact energy efficiency, bits/s/Hz per watt.
    pub fn ee(&self, p: f64) -> f64 {
        self.rate_nats(p) / LN_2 / (self.p_c + p)
    }

    /// Coefficients (ascending powers of `p`) of `N` and `D`.
    pub fn polynomials(&self) -> (Vec<f64>, Vec<f64>) {
        let mut num = vec![1.0];
        let mut den = vec![1.0];
        for (a, b) in self.coefficients() {
            num = times_linear(&num, a + b);
            den = times_linear(&den, b);
        }
        (num, den)
    }

    /// Maximizes the exact efficiency on `(0, p_cap]` by bisection on the
    /// sign of its derivative; the rate is concave in `p`, so the
    /// efficiency is unimodal.
    pub fn bisect(&self) -> f64 {
        let slope = |p: f64| self.rate_slope(p) * (self.p_c + p) - self.rate_nats(p);
        if slope(self.p_cap) >= 0.0 {
            return self.p_cap;
        }
        let (mut lo, mut hi) = (0.0, self.p_cap);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn times_linear(poly: &[f64], c: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + 1];
    for (k, v) in poly.iter().enumerate() {
        out[k] += v;
        out[k + 1] += v * c;
    }
    out
}

const P: usize = 0;
const AUX: usize = 1;
const T: usize = 2;

fn poly_in_p(coeffs: &[f64], factor: &[(usize, f64)], scale: f64) -> std::result::Result<Posynomial, GpError> {
    let largest = coeffs.iter().copied().fold(0.0, f64::max);
    let terms = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 1e-14 * largest)
        .map(|(k, c)| {
            let mut e = factor.to_vec();
            if k > 0 {
                e.push((P, k as f64));
            }
            Monomial::sparse(c * scale, 3, &e)
        })
        .collect();
    Posynomial::new(terms)
}

struct OneDim<'a> {
    prob: &'a SubchannelEeProblem,
    num: Vec<f64>,
    den: Vec<f64>,
    extra: Vec<f64>,
}

impl<'a> OneDim<'a> {
    fn new(prob: &'a SubchannelEeProblem) -> Self {
        let (num, den) = prob.polynomials();
        let extra: Vec<f64> = num
            .iter()
            .zip(den.iter().chain(std::iter::repeat(&0.0)))
            .map(|(n, d)| (n - d).max(0.0))
            .collect();
        Self { prob, num, den, extra }
    }

    fn boxed(&self, objective: Objective) -> GpProblem {
        let cap = self.prob.p_cap;
        GpProblem::new(3, objective)
            .with_bounds(P, cap * 1e-12, cap)
    }

    fn power_cost(&self, extra: &[(usize, f64)], scale: f64) -> std::result::Result<Posynomial, GpError> {
        let mut terms = vec![Monomial::sparse(scale, 3, &[(P, 1.0)].iter().chain(extra).copied().collect::<Vec<_>>())];
        if self.prob.p_c > 0.0 {
            terms.push(Monomial::sparse(self.prob.p_c * scale, 3, extra));
        }
        Posynomial::new(terms)
    }
}

impl ScaModel for OneDim<'_> {
    fn fixed_problem(&self, terms: SeriesTerms) -> std::result::Result<GpProblem, GpError> {
        // y <= C / (2D + C), i.e. y (N + D) / C <= 1
        let sum: Vec<f64> = self.num.iter().zip(self.den.iter().chain(std::iter::repeat(&0.0))).map(|(n, d)| n + d).collect();
        let y_bound = Constraint::Ratio {
            num: poly_in_p(&sum, &[(AUX, 1.0)], 1.0)?,
            den: poly_in_p(&self.extra, &[], 1.0)?,
        };
        // t (p_c + p) <= 2y [+ 2y^3/3]
        let ee_bound = match terms {
            SeriesTerms::One => Constraint::Posynomial(self.power_cost(&[(T, 1.0), (AUX, -1.0)], 0.5)?),
            SeriesTerms::Two => Constraint::Ratio {
                num: self.power_cost(&[(T, 1.0)], 1.0)?,
                den: Posynomial::new(vec![
                    Monomial::var(2.0, 3, AUX),
                    Monomial::sparse(2.0 / 3.0, 3, &[(AUX, 3.0)]),
                ])?,
            },
        };
        Ok(self
            .boxed(Objective::Posynomial(Monomial::sparse(1.0, 3, &[(T, -1.0)]).into()))
            .with_bounds(AUX, 1e-30, 1.0)
            .constrain(y_bound)
            .constrain(ee_bound))
    }

    fn fixed_start(&self, powers: &[f64], terms: SeriesTerms) -> Vec<f64> {
        let p = powers[0];
        let x = self.prob.rate_nats(p).exp_m1();
        let y = 0.9 * x / (2.0 + x);
        let approx = match terms {
            SeriesTerms::One => 2.0 * y,
            SeriesTerms::Two => 2.0 * y + 2.0 / 3.0 * y * y * y,
        };
        vec![p, y, 0.9 * approx / (self.prob.p_c + p)]
    }

    fn recentred(&self, powers: &[f64]) -> std::result::Result<(GpProblem, Vec<f64>), GpError> {
        let p = powers[0];
        let rate = self.prob.rate_nats(p);
        let x0 = rate.exp_m1();
        // u ((1 + x0) D + N) >= 4 (1 + x0) D
        let den: Vec<f64> = self
            .num
            .iter()
            .zip(self.den.iter().chain(std::iter::repeat(&0.0)))
            .map(|(n, d)| n + (1.0 + x0) * d)
            .collect();
        let u_bound = Constraint::Ratio {
            num: poly_in_p(&self.den, &[], 4.0 * (1.0 + x0))?,
            den: poly_in_p(&den, &[(AUX, 1.0)], 1.0)?,
        };
        // t (p_c + p) + u <= ln(1 + x0) + 2
        let budget = rate + 2.0;
        let mut cost = self.power_cost(&[(T, 1.0)], 1.0 / budget)?.terms().to_vec();
        cost.push(Monomial::var(1.0 / budget, 3, AUX));
        let prob = self
            .boxed(Objective::Posynomial(Monomial::sparse(1.0, 3, &[(T, -1.0)]).into()))
            .constrain(u_bound)
            .constrain(Constraint::Posynomial(Posynomial::new(cost)?));
        let u = 2.0 + 1e-3 * rate;
        let t = 0.999 * (budget - u) / (self.prob.p_c + p);
        Ok((prob, vec![p, u, t]))
    }

    fn powers(&self, q: &[f64]) -> Vec<f64> {
        vec![q[P]]
    }

    fn objective(&self, powers: &[f64]) -> f64 {
        let p = powers[0];
        self.prob.rate_nats(p) / (self.prob.p_c + p)
    }
}

/// Maximizes the subchannel's exact energy efficiency over `p_n <= p_cap`.
///
/// The GP stages run from `p_init` (pulled strictly inside the cap); if
/// they fail, the exact objective is maximized by bisection instead. The
/// returned point is never worse than `p_init` or `p_cap`.
pub fn solve_subchannel_ee(prob: &SubchannelEeProblem, opts: &PowerOptions) -> Result<SubchannelSolution> {
    prob.validate()?;
    let start = prob.p_init.clamp(prob.p_cap * 1e-9, prob.p_cap * (1.0 - 1e-3));
    let model = OneDim::new(prob);
    let (mut p, method, gp_solves) = match sca::optimize(&model, &[start], opts) {
        Ok(out) => (out.powers[0], SolveMethod::Gp, out.gp_solves),
        Err(_) => (prob.bisect(), SolveMethod::Bisection, 0),
    };
    let mut ee = prob.ee(p);
    for candidate in [prob.p_init.min(prob.p_cap), prob.p_cap] {
        let v = prob.ee(candidate);
        if v > ee {
            p = candidate;
            ee = v;
        }
    }
    Ok(SubchannelSolution {
        p,
        ee,
        method,
        gp_solves,
    })
}
