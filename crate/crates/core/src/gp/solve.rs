use std::io::Write;

use super::barrier::BarrierOptions;
use super::problem::GpProblem;
use super::GpError;

/// Inner convex solver settings.
pub type GpOptions = BarrierOptions;

/// Result of a single GP solve.
#[derive(Debug, Clone)]
pub struct GpSolution {
    pub q: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    /// Duality-gap bound of the log-transformed program.
    pub gap: f64,
    /// Infinity norm of the Lagrangian gradient at the last centering step.
    pub residual: f64,
    pub(crate) final_t: f64,
}

/// Solves a GP (posynomial objective, posynomial and monomial-equality
/// constraints) in log space. `start` is used when strictly feasible;
/// otherwise a feasibility phase runs first.
pub fn solve_gp(prob: &GpProblem, start: Option<&[f64]>, opts: &GpOptions) -> Result<GpSolution, GpError> {
    prob.validate()?;
    let program = prob.to_log_program()?;
    let y0: Vec<f64> = match start {
        Some(q) => {
            if q.len() != prob.dim() {
                return Err(GpError::DimensionMismatch {
                    expected: prob.dim(),
                    found: q.len(),
                });
            }
            q.iter().map(|v| if *v > 0.0 { v.ln() } else { f64::NAN }).collect()
        }
        None => program.lo.iter().zip(&program.hi).map(|(l, h)| 0.5 * (l + h)).collect(),
    };
    let y0 = if y0.iter().all(|v| v.is_finite()) && program.strictly_feasible(&y0) {
        y0
    } else {
        let seed: Vec<f64> = y0.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
        program.find_feasible(&seed, opts)?
    };
    let out = program.minimize(&y0, opts, None)?;
    let q: Vec<f64> = out.y.iter().map(|v| v.exp()).collect();
    Ok(GpSolution {
        objective: out.objective.exp(),
        q,
        newton_steps: out.newton_steps,
        gap: out.gap,
        residual: out.residual,
        final_t: out.final_t,
    })
}

/// Outer-loop settings for single condensation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondensationOptions {
    /// Stop when `max_i |ln q_{k+1,i} - ln q_{k,i}| <= eps`.
    pub eps: f64,
    pub max_outer: usize,
    pub inner: GpOptions,
}

impl Default for CondensationOptions {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            max_outer: 50,
            inner: GpOptions::default(),
        }
    }
}

/// One outer iteration of the condensation loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub iteration: usize,
    /// Objective of the condensed GP at its own solution.
    pub condensed_objective: f64,
    /// True (un-condensed) objective at the new iterate.
    pub objective: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone)]
pub struct CondensationResult {
    pub q: Vec<f64>,
    /// True objective at `q`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub newton_steps: usize,
    pub history: Vec<IterateRecord>,
}

impl CondensationResult {
    /// Writes `iteration,objective,condensed_objective,step_norm` rows.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "objective", "condensed_objective", "step_norm"])?;
        for r in &self.history {
            out.write_record(&[
                r.iteration.to_string(),
                r.objective.to_string(),
                r.condensed_objective.to_string(),
                r.step_norm.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Initial barrier weight for a subproblem expected to move the log
/// objective by about `drop` from its start, given the last solve.
pub(crate) fn warm_t0(opts: &GpOptions, last_gap: f64, last_t: f64, drop: f64) -> f64 {
    if !drop.is_finite() {
        return opts.t0;
    }
    let m = last_gap * last_t;
    (m / (10.0 * drop.max(opts.gap_tol))).clamp(opts.t0, (last_t / opts.mu).max(opts.t0))
}

/// Relative slack allowed before a rise in the condensed objective is
/// reported as a failed inner solve.
const MONOTONE_SLACK: f64 = 1e-6;

/// Single condensation: at each iterate every denominator (objective and
/// ratio constraints) is replaced by its monomial condensation, the
/// resulting GP is solved, and the loop repeats until the iterate settles.
pub fn solve_condensation(
    prob: &GpProblem,
    q_init: &[f64],
    opts: &CondensationOptions,
) -> Result<CondensationResult, GpError> {
    prob.validate()?;
    if q_init.len() != prob.dim() {
        return Err(GpError::DimensionMismatch {
            expected: prob.dim(),
            found: q_init.len(),
        });
    }
    let mut q = q_init.to_vec();
    let mut history = Vec::new();
    let mut previous_condensed = f64::INFINITY;
    let mut newton_steps = 0;
    let mut inner = opts.inner;
    let mut prev_log = f64::NAN;
    for k in 1..=opts.max_outer {
        let gp = prob.condensed_at(&q)?;
        let sol = solve_gp(&gp, Some(&q), &inner)?;
        let (last_gap, last_t) = (sol.gap, sol.final_t);
        newton_steps += sol.newton_steps;
        let condensed = sol.objective;
        if condensed > previous_condensed * (1.0 + MONOTONE_SLACK) + f64::MIN_POSITIVE {
            return Err(GpError::NonMonotone {
                iteration: k,
                previous: previous_condensed,
                current: condensed,
            });
        }
        previous_condensed = condensed.min(previous_condensed);
        let step = q
            .iter()
            .zip(&sol.q)
            .map(|(a, b)| (b.ln() - a.ln()).abs())
            .fold(0.0, f64::max);
        q = sol.q;
        let objective = prob.objective_value(&q)?;
        history.push(IterateRecord {
            iteration: k,
            condensed_objective: condensed,
            objective,
            step_norm: step,
        });
        inner.t0 = warm_t0(&opts.inner, last_gap, last_t, (condensed.ln() - prev_log).abs());
        prev_log = condensed.ln();
        if step <= opts.eps {
            return Ok(CondensationResult {
                objective,
                q,
                iterations: k,
                converged: true,
                newton_steps,
                history,
            });
        }
    }
    let objective = prob.objective_value(&q)?;
    Ok(CondensationResult {
        q,
        objective,
        iterations: opts.max_outer,
        converged: false,
        newton_steps,
        history,
    })
}
