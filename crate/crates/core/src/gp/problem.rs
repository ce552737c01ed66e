use super::barrier::{LinearEq, LogProgram, LogSumExp};
use super::posynomial::{condense, Monomial, Posynomial};
use super::GpError;

/// What to minimize.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Posynomial(Posynomial),
    /// `num / den`; not a GP until `den` is condensed.
    Ratio { num: Posynomial, den: Posynomial },
}

/// A single constraint relation over the problem variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `p(q) <= 1`
    Posynomial(Posynomial),
    /// `num(q) / den(q) <= 1`; handled by condensing `den`.
    Ratio { num: Posynomial, den: Posynomial },
    /// `m(q) = 1`
    MonomialEq(Monomial),
}

/// A (generalised) geometric program over a positive box.
#[derive(Debug, Clone, PartialEq)]
pub struct GpProblem {
    dim: usize,
    pub objective: Objective,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub(crate) const DEFAULT_LOWER: f64 = 1e-30;
pub(crate) const DEFAULT_UPPER: f64 = 1e30;

impl GpProblem {
    /// New problem with the default box `[1e-30, 1e30]` on every variable.
    pub fn new(dim: usize, objective: Objective) -> Self {
        Self {
            dim,
            objective,
            constraints: Vec::new(),
            lower: vec![DEFAULT_LOWER; dim],
            upper: vec![DEFAULT_UPPER; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn with_bounds(mut self, index: usize, lower: f64, upper: f64) -> Self {
        self.lower[index] = lower;
        self.upper[index] = upper;
        self
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn constrain(mut self, c: Constraint) -> Self {
        self.push(c);
        self
    }

    /// True when every relation is already in GP form.
    pub fn is_geometric(&self) -> bool {
        matches!(self.objective, Objective::Posynomial(_))
            && self
                .constraints
                .iter()
                .all(|c| !matches!(c, Constraint::Ratio { .. }))
    }

    pub fn validate(&self) -> Result<(), GpError> {
        for i in 0..self.dim {
            let (l, u) = (self.lower[i], self.upper[i]);
            if !(l > 0.0 && l < u && u.is_finite()) {
                return Err(GpError::InvalidBounds {
                    index: i,
                    lower: l,
                    upper: u,
                });
            }
        }
        let check = |p: &Posynomial| {
            if p.dim() == self.dim {
                Ok(())
            } else {
                Err(GpError::DimensionMismatch {
                    expected: self.dim,
                    found: p.dim(),
                })
            }
        };
        match &self.objective {
            Objective::Posynomial(p) => check(p)?,
            Objective::Ratio { num, den } => {
                check(num)?;
                check(den)?;
            }
        }
        for c in &self.constraints {
            match c {
                Constraint::Posynomial(p) => check(p)?,
                Constraint::Ratio { num, den } => {
                    check(num)?;
                    check(den)?;
                }
                Constraint::MonomialEq(m) => check(&Posynomial::from_monomial(m.clone()))?,
            }
        }
        Ok(())
    }

    /// True objective value at `q` (`num/den` for ratios).
    pub fn objective_value(&self, q: &[f64]) -> Result<f64, GpError> {
        match &self.objective {
            Objective::Posynomial(p) => p.evaluate(q),
            Objective::Ratio { num, den } => Ok(num.evaluate(q)? / den.evaluate(q)?),
        }
    }

    /// Largest constraint value minus one (inequalities) or log-residual
    /// (equalities); non-positive means feasible.
    pub fn max_violation(&self, q: &[f64]) -> Result<f64, GpError> {
        let mut worst = f64::NEG_INFINITY;
        for c in &self.constraints {
            let v = match c {
                Constraint::Posynomial(p) => p.evaluate(q)? - 1.0,
                Constraint::Ratio { num, den } => num.evaluate(q)? / den.evaluate(q)? - 1.0,
                Constraint::MonomialEq(m) => m.evaluate(q).ln().abs(),
            };
            worst = worst.max(v);
        }
        for i in 0..self.dim {
            worst = worst.max(self.lower[i] - q[i]).max(q[i] - self.upper[i]);
        }
        Ok(worst)
    }

    /// Replaces every denominator by its monomial condensation at `q0`,
    /// yielding a proper GP.
    pub fn condensed_at(&self, q0: &[f64]) -> Result<GpProblem, GpError> {
        let objective = match &self.objective {
            Objective::Posynomial(p) => Objective::Posynomial(p.clone()),
            Objective::Ratio { num, den } => {
                Objective::Posynomial(num.mul_monomial(&condense(den, q0)?.inverse()))
            }
        };
        let constraints = self
            .constraints
            .iter()
            .map(|c| match c {
                Constraint::Ratio { num, den } => Ok(Constraint::Posynomial(
                    num.mul_monomial(&condense(den, q0)?.inverse()),
                )),
                other => Ok(other.clone()),
            })
            .collect::<Result<Vec<_>, GpError>>()?;
        Ok(GpProblem {
            dim: self.dim,
            objective,
            constraints,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        })
    }

    pub(crate) fn to_log_program(&self) -> Result<LogProgram, GpError> {
        let objective = match &self.objective {
            Objective::Posynomial(p) => LogSumExp::from_posynomial(p),
            Objective::Ratio { .. } => return Err(GpError::NotGeometric),
        };
        let mut inequalities = Vec::new();
        let mut equalities = Vec::new();
        for c in &self.constraints {
            match c {
                Constraint::Posynomial(p) => inequalities.push(LogSumExp::from_posynomial(p)),
                Constraint::MonomialEq(m) => equalities.push(LinearEq::from_monomial(m)),
                Constraint::Ratio { .. } => return Err(GpError::NotGeometric),
            }
        }
        Ok(LogProgram {
            dim: self.dim,
            objective,
            inequalities,
            equalities,
            lo: self.lower.iter().map(|v| v.ln()).collect(),
            hi: self.upper.iter().map(|v| v.ln()).collect(),
        })
    }
}
