//! Log-barrier Newton solver for the convex form of a geometric program.
//!
//! With `y = ln q`, a posynomial `sum_k c_k prod q_i^a_ki` becomes
//! `ln sum_k exp(a_k . y + ln c_k)`, a convex log-sum-exp. Monomial
//! equalities become affine equalities. Variable boxes are kept as
//! explicit affine inequalities so the barrier never leaves them.

use super::posynomial::{Monomial, Posynomial};
use super::GpError;

#[derive(Debug, Clone)]
struct LogTerm {
    offset: f64,
    // exponents in local (support) coordinates
    local: Vec<(usize, f64)>,
}

/// `ln sum_k exp(offset_k + a_k . y)` with a sparse support.
#[derive(Debug, Clone)]
pub(crate) struct LogSumExp {
    support: Vec<usize>,
    terms: Vec<LogTerm>,
}

impl LogSumExp {
    pub(crate) fn from_posynomial(p: &Posynomial) -> Self {
        let mut support: Vec<usize> = Vec::new();
        for t in p.terms() {
            for (i, a) in t.exponents.iter().enumerate() {
                if *a != 0.0 && !support.contains(&i) {
                    support.push(i);
                }
            }
        }
        support.sort_unstable();
        let terms = p
            .terms()
            .iter()
            .map(|t| LogTerm {
                offset: t.coeff.ln(),
                local: support
                    .iter()
                    .enumerate()
                    .filter_map(|(l, &i)| {
                        let a = t.exponents[i];
                        (a != 0.0).then_some((l, a))
                    })
                    .collect(),
            })
            .collect();
        Self { support, terms }
    }

    pub(crate) fn from_monomial(m: &Monomial) -> Self {
        Self::from_posynomial(&Posynomial::from_monomial(m.clone()))
    }

    /// Adds a variable with exponent `exponent` to every term (used by the
    /// feasibility phase to shift each constraint by the slack variable).
    fn with_shift(&self, var: usize, exponent: f64) -> Self {
        let mut support = self.support.clone();
        support.push(var);
        let l = support.len() - 1;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut local = t.local.clone();
                local.push((l, exponent));
                LogTerm {
                    offset: t.offset,
                    local,
                }
            })
            .collect();
        Self { support, terms }
    }

    fn exponents(&self, y: &[f64], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        let mut max = f64::NEG_INFINITY;
        for t in &self.terms {
            let z = t.offset
                + t.local
                    .iter()
                    .map(|&(l, a)| a * y[self.support[l]])
                    .sum::<f64>();
            max = max.max(z);
            buf.push(z);
        }
        max
    }

    pub(crate) fn value(&self, y: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.terms.len());
        let max = self.exponents(y, &mut buf);
        max + buf.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
    }

    /// Returns `f(y)` and fills the local gradient and the local
    /// `sum_k pi_k a_k a_k^T` (without the rank-one correction).
    fn derivatives(&self, y: &[f64], scratch: &mut Scratch) -> f64 {
        let s = self.support.len();
        let max = self.exponents(y, &mut scratch.z);
        let mut total = 0.0;
        for z in scratch.z.iter_mut() {
            *z = (*z - max).exp();
            total += *z;
        }
        scratch.grad.clear();
        scratch.grad.resize(s, 0.0);
        scratch.outer.clear();
        scratch.outer.resize(s * s, 0.0);
        for (t, w) in self.terms.iter().zip(&scratch.z) {
            let pi = w / total;
            if pi == 0.0 {
                continue;
            }
            for &(l, a) in &t.local {
                scratch.grad[l] += pi * a;
                for &(k, b) in &t.local {
                    scratch.outer[l * s + k] += pi * a * b;
                }
            }
        }
        max + total.ln()
    }
}

#[derive(Default)]
struct Scratch {
    z: Vec<f64>,
    grad: Vec<f64>,
    outer: Vec<f64>,
}

/// Affine equality `a . y = b`.
#[derive(Debug, Clone)]
pub(crate) struct LinearEq {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearEq {
    /// `m(q) = 1`  <=>  `exponents . y = -ln coeff`.
    pub(crate) fn from_monomial(m: &Monomial) -> Self {
        Self {
            a: m.exponents.clone(),
            b: -m.coeff.ln(),
        }
    }
}

/// `minimize f0(y)` s.t. `f_i(y) <= 0`, `A y = b`, `lo < y < hi`.
#[derive(Debug, Clone)]
pub(crate) struct LogProgram {
    pub dim: usize,
    pub objective: LogSumExp,
    pub inequalities: Vec<LogSumExp>,
    pub equalities: Vec<LinearEq>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Tuning knobs for the barrier method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Initial barrier weight.
    pub t0: f64,
    /// Barrier weight growth factor per outer step.
    pub mu: f64,
    /// Target bound on the duality gap (`m / t`) in log-objective units.
    pub gap_tol: f64,
    /// Newton decrement threshold (`lambda^2 / 2`).
    pub newton_tol: f64,
    /// Total Newton step budget across all centering steps.
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            t0: 1.0,
            mu: 20.0,
            gap_tol: 1e-9,
            newton_tol: 1e-10,
            max_newton: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome {
    pub y: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    pub gap: f64,
    pub residual: f64,
    pub final_t: f64,
}

impl LogProgram {
    fn constraint_count(&self) -> usize {
        self.inequalities.len() + 2 * self.dim
    }

    pub(crate) fn strictly_feasible(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v > l && v < h)
            && self.inequalities.iter().all(|f| f.value(y) < 0.0)
            && self
                .equalities
                .iter()
                .all(|e| (dot(&e.a, y) - e.b).abs() <= 1e-9 * (1.0 + e.b.abs()))
    }

    pub(crate) fn max_violation(&self, y: &[f64]) -> f64 {
        self.inequalities
            .iter()
            .map(|f| f.value(y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn barrier_value(&self, y: &[f64], t: f64) -> f64 {
        let mut v = t * self.objective.value(y);
        for f in &self.inequalities {
            let fi = f.value(y);
            if fi >= 0.0 {
                return f64::INFINITY;
            }
            v -= (-fi).ln();
        }
        for ((x, l), h) in y.iter().zip(&self.lo).zip(&self.hi) {
            if x <= l || x >= h {
                return f64::INFINITY;
            }
            v -= (x - l).ln() + (h - x).ln();
        }
        v
    }

    fn assemble(&self, y: &[f64], t: f64, grad: &mut [f64], hess: &mut [f64], s: &mut Scratch) {
        let n = self.dim;
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);

        let obj = &self.objective;
        obj.derivatives(y, s);
        scatter(obj, t, -t, grad, hess, n, s);

        for f in &self.inequalities {
            let fi = f.derivatives(y, s);
            let inv = 1.0 / (-fi);
            // grad f / (-f);  hess: outer/(-f) + g g^T (1/f^2 - 1/(-f))
            scatter(f, inv, inv * inv - inv, grad, hess, n, s);
        }
        for i in 0..n {
            let a = 1.0 / (y[i] - self.lo[i]);
            let b = 1.0 / (self.hi[i] - y[i]);
            grad[i] += -a + b;
            hess[i * n + i] += a * a + b * b;
        }
    }

    /// Runs the barrier method from a strictly feasible `y0`.
    /// If `stop_below` is set, returns as soon as the objective drops
    /// below it after a centering step.
    pub(crate) fn minimize(
        &self,
        y0: &[f64],
        opts: &BarrierOptions,
        stop_below: Option<f64>,
    ) -> Result<BarrierOutcome, GpError> {
        let n = self.dim;
        if !self.strictly_feasible(y0) {
            return Err(GpError::InitialPointInfeasible);
        }
        let m = self.constraint_count() as f64;
        let mut y = y0.to_vec();
        let mut t = opts.t0;
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let mut dx = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut scratch = Scratch::default();
        let mut steps = 0usize;
        let mut residual;

        loop {
            // centering
            loop {
                if steps >= opts.max_newton {
                    let objective = self.objective.value(&y);
                    return Err(GpError::MaxIterations {
                        best: y.clone(),
                        objective,
                    });
                }
                self.assemble(&y, t, &mut grad, &mut hess, &mut scratch);
                let hess_copy = hess.clone();
                newton_direction(&mut hess, &grad, &y, &self.equalities, n, &mut dx)?;
                steps += 1;
                let decrement: f64 = -grad.iter().zip(&dx).map(|(g, d)| g * d).sum::<f64>();
                residual = stationarity(&hess_copy, &dx, n) / t;
                if decrement / 2.0 <= opts.newton_tol {
                    break;
                }
                let phi = self.barrier_value(&y, t);
                let mut step = self.max_box_step(&y, &dx);
                let slope = -decrement;
                let mut accepted = None;
                for _ in 0..80 {
                    for i in 0..n {
                        trial[i] = y[i] + step * dx[i];
                    }
                    let v = self.barrier_value(&trial, t);
                    if v.is_finite() && v <= phi + 0.01 * step * slope {
                        accepted = Some(v);
                        break;
                    }
                    step *= 0.5;
                }
                let Some(v) = accepted else {
                    // no progress possible at this precision
                    break;
                };
                y.copy_from_slice(&trial);
                if phi - v <= 8.0 * f64::EPSILON * phi.abs() {
                    break;
                }
            }
            let objective = self.objective.value(&y);
            if let Some(limit) = stop_below {
                if objective < limit {
                    return Ok(BarrierOutcome {
                        y,
                        objective,
                        newton_steps: steps,
                        gap: m / t,
                        residual,
                        final_t: t,
                    });
                }
            }
            if m / t < opts.gap_tol {
                return Ok(BarrierOutcome {
                    y,
                    objective,
                    newton_steps: steps,
                    gap: m / t,
                    residual,
                    final_t: t,
                });
            }
            t *= opts.mu;
        }
    }

    fn max_box_step(&self, y: &[f64], dx: &[f64]) -> f64 {
        let mut step: f64 = 1.0;
        for i in 0..self.dim {
            if dx[i] > 0.0 {
                step = step.min(0.99 * (self.hi[i] - y[i]) / dx[i]);
            } else if dx[i] < 0.0 {
                step = step.min(0.99 * (self.lo[i] - y[i]) / dx[i]);
            }
        }
        step
    }

    /// Feasibility phase: minimize slack `s` s.t. `f_i(y) <= s`. Returns a
    /// strictly feasible point or `Infeasible`.
    pub(crate) fn find_feasible(&self, y0: &[f64], opts: &BarrierOptions) -> Result<Vec<f64>, GpError> {
        let n = self.dim;
        let mut y: Vec<f64> = y0
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| {
                if v > l && v < h {
                    *v
                } else {
                    0.5 * (l + h)
                }
            })
            .collect();
        project_equalities(&mut y, &self.equalities);
        if self.strictly_feasible(&y) {
            return Ok(y);
        }
        let slack = n;
        let s0 = self.max_violation(&y).max(0.0) + 1.0;
        let mut objective_exps = vec![0.0; n + 1];
        objective_exps[slack] = 1.0;
        // f0 = s, written as ln exp(s) (exact affine objective)
        let phase = LogProgram {
            dim: n + 1,
            objective: LogSumExp::from_monomial(&Monomial::new(1.0, objective_exps)),
            inequalities: self
                .inequalities
                .iter()
                .map(|f| f.with_shift(slack, -1.0))
                .collect(),
            equalities: self
                .equalities
                .iter()
                .map(|e| {
                    let mut a = e.a.clone();
                    a.push(0.0);
                    LinearEq { a, b: e.b }
                })
                .collect(),
            lo: self.lo.iter().copied().chain([-1e6]).collect(),
            hi: self.hi.iter().copied().chain([s0 + 1e6]).collect(),
        };
        let mut start = y.clone();
        start.push(s0);
        let out = match phase.minimize(&start, opts, Some(-1e-7)) {
            Ok(o) => o,
            Err(GpError::MaxIterations { best, .. }) => BarrierOutcome {
                objective: best[slack],
                y: best,
                newton_steps: opts.max_newton,
                gap: f64::INFINITY,
                residual: f64::INFINITY,
                final_t: 0.0,
            },
            Err(e) => return Err(e),
        };
        let candidate = out.y[..n].to_vec();
        if out.objective < 0.0 && self.strictly_feasible(&candidate) {
            Ok(candidate)
        } else {
            Err(GpError::Infeasible {
                min_violation: out.objective,
            })
        }
    }
}

fn scatter(
    f: &LogSumExp,
    outer_scale: f64,
    rank_one_scale: f64,
    grad: &mut [f64],
    hess: &mut [f64],
    n: usize,
    s: &Scratch,
) {
    let sup = &f.support;
    let k = sup.len();
    for (l, &i) in sup.iter().enumerate() {
        grad[i] += outer_scale * s.grad[l];
        for (r, &j) in sup.iter().enumerate() {
            hess[i * n + j] += outer_scale * s.outer[l * k + r] + rank_one_scale * s.grad[l] * s.grad[r];
        }
    }
}

fn stationarity(hess: &[f64], dx: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| (0..n).map(|j| hess[i * n + j] * dx[j]).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// In-place Cholesky; on failure retries with growing diagonal shifts.
fn cholesky(a: &mut [f64], n: usize) -> Result<(), GpError> {
    let original = a.to_vec();
    let scale = (0..n).map(|i| original[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..12 {
        a.copy_from_slice(&original);
        for i in 0..n {
            a[i * n + i] += shift;
        }
        if cholesky_in_place(a, n) {
            return Ok(());
        }
        shift = if shift == 0.0 { scale * 1e-14 } else { shift * 100.0 };
    }
    Err(GpError::Numerical("Newton system is not positive definite".into()))
}

fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves the (equality-constrained) Newton system; `hess` is overwritten
/// by its Cholesky factor.
fn newton_direction(
    hess: &mut [f64],
    grad: &[f64],
    y: &[f64],
    eqs: &[LinearEq],
    n: usize,
    dx: &mut [f64],
) -> Result<(), GpError> {
    cholesky(hess, n)?;
    for i in 0..n {
        dx[i] = -grad[i];
    }
    cholesky_solve(hess, n, dx);
    if eqs.is_empty() {
        return Ok(());
    }
    // dx = -H^-1 (g + A^T w),  (A H^-1 A^T) w = A dx_free - (b - A y);
    // the residual term pulls rounding drift back onto the affine set
    let p = eqs.len();
    let mut hinv_at = Vec::with_capacity(p);
    for e in eqs {
        let mut col = e.a.clone();
        cholesky_solve(hess, n, &mut col);
        hinv_at.push(col);
    }
    let mut schur = vec![0.0; p * p];
    for (r, e) in eqs.iter().enumerate() {
        for c in 0..p {
            schur[r * p + c] = dot(&e.a, &hinv_at[c]);
        }
    }
    let mut rhs: Vec<f64> = eqs.iter().map(|e| dot(&e.a, dx) - (e.b - dot(&e.a, y))).collect();
    cholesky(&mut schur, p)?;
    cholesky_solve(&schur, p, &mut rhs);
    for (c, w) in rhs.iter().enumerate() {
        for i in 0..n {
            dx[i] -= w * hinv_at[c][i];
        }
    }
    // An ill-conditioned H loses the affine part of the step; restore it
    // exactly by projecting y + dx back onto the equality set.
    let mut target: Vec<f64> = y.iter().zip(dx.iter()).map(|(a, b)| a + b).collect();
    project_equalities(&mut target, eqs);
    for i in 0..n {
        dx[i] = target[i] - y[i];
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-norm correction onto `{y : A y = b}`.
fn project_equalities(y: &mut [f64], eqs: &[LinearEq]) {
    if eqs.is_empty() {
        return;
    }
    let p = eqs.len();
    let mut gram = vec![0.0; p * p];
    for r in 0..p {
        for c in 0..p {
            gram[r * p + c] = dot(&eqs[r].a, &eqs[c].a);
        }
    }
    let mut rhs: Vec<f64> = eqs.iter().map(|e| dot(&e.a, y) - e.b).collect();
    if cholesky(&mut gram, p).is_err() {
        return;
    }
    cholesky_solve(&gram, p, &mut rhs);
    for (r, w) in rhs.iter().enumerate() {
        for (yi, ai) in y.iter_mut().zip(&eqs[r].a) {
            *yi -= w * ai;
        }
    }
}
