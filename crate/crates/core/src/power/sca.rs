//! Two-stage driver shared by the GP allocators.

use crate::gp::{solve_condensation, solve_gp, warm_t0, GpError, GpProblem, SeriesTerms};

use super::PowerOptions;

/// A power problem that can be posed as a GP in two ways.
pub(crate) trait ScaModel {
    /// Fixed series expansion at zero SINR.
    fn fixed_problem(&self, terms: SeriesTerms) -> Result<GpProblem, GpError>;
    /// Strictly feasible point of [`ScaModel::fixed_problem`] with these powers.
    fn fixed_start(&self, powers: &[f64], terms: SeriesTerms) -> Vec<f64>;
    /// One-term series re-centred at the SINRs of `powers`, with a strictly
    /// feasible starting point.
    fn recentred(&self, powers: &[f64]) -> Result<(GpProblem, Vec<f64>), GpError>;
    /// Power variables of a GP point.
    fn powers(&self, q: &[f64]) -> Vec<f64>;
    /// Exact objective to maximize, in nats per watt.
    fn objective(&self, powers: &[f64]) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct ScaOutcome {
    pub powers: Vec<f64>,
    pub gp_solves: usize,
}

const BACKTRACKS: usize = 8;

pub(crate) fn optimize<M: ScaModel>(model: &M, start: &[f64], opts: &PowerOptions) -> Result<ScaOutcome, GpError> {
    let mut cur = start.to_vec();
    let mut cur_obj = model.objective(&cur);
    let mut gp_solves = 0;
    let mut error = None;
    let mut solved = false;

    if opts.fixed_stage {
        match model
            .fixed_problem(opts.log_terms)
            .and_then(|prob| solve_condensation(&prob, &model.fixed_start(&cur, opts.log_terms), &opts.condensation))
        {
            Ok(res) => {
                solved = true;
                gp_solves += res.iterations;
                let p = model.powers(&res.q);
                let obj = model.objective(&p);
                if obj > cur_obj || !opts.refine {
                    cur = p;
                    cur_obj = obj;
                }
            }
            Err(e) => error = Some(e),
        }
    }

    if opts.refine {
        let mut inner = opts.condensation.inner;
        for _ in 0..opts.max_refine {
            let step = model.recentred(&cur).and_then(|(prob, q0)| {
                let gp = prob.condensed_at(&q0)?;
                solve_gp(&gp, Some(&q0), &inner)
            });
            let sol = match step {
                Ok(sol) => sol,
                Err(e) => {
                    error.get_or_insert(e);
                    break;
                }
            };
            solved = true;
            gp_solves += 1;
            let mut next = model.powers(&sol.q);
            let mut next_obj = model.objective(&next);
            let mut tries = 0;
            while !(next_obj >= cur_obj) && tries < BACKTRACKS {
                for (n, c) in next.iter_mut().zip(&cur) {
                    *n = 0.5 * (*n + c);
                }
                next_obj = model.objective(&next);
                tries += 1;
            }
            if !(next_obj >= cur_obj) {
                break;
            }
            let moved = cur
                .iter()
                .zip(&next)
                .map(|(a, b)| (b.ln() - a.ln()).abs())
                .fold(0.0, f64::max);
            inner.t0 = warm_t0(&opts.condensation.inner, sol.gap, sol.final_t, (next_obj / cur_obj).ln());
            cur = next;
            cur_obj = next_obj;
            if moved <= opts.condensation.eps {
                break;
            }
        }
    }

    if !solved {
        return Err(error.unwrap_or(GpError::Numerical("no GP solve attempted".into())));
    }
    Ok(ScaOutcome { powers: cur, gp_solves })
}
