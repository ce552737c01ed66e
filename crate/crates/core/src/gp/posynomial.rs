//! Monomials and posynomials over strictly positive variables.

use std::fmt;
use std::ops::{Add, Mul};

use super::GpError;

/// `coeff * prod_i q_i^exponents[i]` with `coeff > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub exponents: Vec<f64>,
}

impl Monomial {
    /// Panics if `coeff` is not strictly positive and finite.
    pub fn new(coeff: f64, exponents: Vec<f64>) -> Self {
        assert!(
            coeff > 0.0 && coeff.is_finite(),
            "monomial coefficient must be positive and finite, got {coeff}"
        );
        Self { coeff, exponents }
    }

    pub fn constant(coeff: f64, dim: usize) -> Self {
        Self::new(coeff, vec![0.0; dim])
    }

    /// The single variable `q_index`, scaled by `coeff`.
    pub fn var(coeff: f64, dim: usize, index: usize) -> Self {
        let mut exponents = vec![0.0; dim];
        exponents[index] = 1.0;
        Self::new(coeff, exponents)
    }

    /// `coeff * prod q_i^e_i` for sparse `(index, exponent)` pairs.
    pub fn sparse(coeff: f64, dim: usize, entries: &[(usize, f64)]) -> Self {
        let mut exponents = vec![0.0; dim];
        for &(i, e) in entries {
            exponents[i] += e;
        }
        Self::new(coeff, exponents)
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn evaluate(&self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.dim());
        let mut v = self.coeff;
        for (a, x) in self.exponents.iter().zip(q) {
            if *a == 1.0 {
                v *= x;
            } else if *a != 0.0 {
                v *= x.powf(*a);
            }
        }
        v
    }

    pub fn inverse(&self) -> Monomial {
        Monomial {
            coeff: 1.0 / self.coeff,
            exponents: self.exponents.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Monomial {
        Monomial::new(self.coeff * factor, self.exponents.clone())
    }

    pub fn mul_monomial(&self, other: &Monomial) -> Monomial {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Monomial::new(
            self.coeff * other.coeff,
            self.exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn powf(&self, power: f64) -> Monomial {
        Monomial::new(
            self.coeff.powf(power),
            self.exponents.iter().map(|a| a * power).collect(),
        )
    }

    pub(crate) fn same_exponents(&self, other: &Monomial) -> bool {
        self.exponents == other.exponents
    }
}

/// A non-empty sum of monomials sharing one variable space.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self, GpError> {
        let first = terms.first().ok_or(GpError::EmptyPosynomial)?;
        let dim = first.dim();
        if let Some(bad) = terms.iter().find(|t| t.dim() != dim) {
            return Err(GpError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let mut p = Self { terms: Vec::new() };
        for t in terms {
            p.push_merged(t);
        }
        Ok(p)
    }

    pub fn from_monomial(m: Monomial) -> Self {
        Self { terms: vec![m] }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::from_monomial(Monomial::constant(value, dim))
    }

    fn push_merged(&mut self, t: Monomial) {
        match self.terms.iter_mut().find(|x| x.same_exponents(&t)) {
            Some(existing) => existing.coeff += t.coeff,
            None => self.terms.push(t),
        }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn as_monomial(&self) -> Option<&Monomial> {
        if self.is_monomial() {
            self.terms.first()
        } else {
            None
        }
    }

    /// Sum of the terms at `q`. Fails on any non-positive coordinate.
    pub fn evaluate(&self, q: &[f64]) -> Result<f64, GpError> {
        check_positive(q)?;
        Ok(self.eval_unchecked(q))
    }

    pub(crate) fn eval_unchecked(&self, q: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.evaluate(q)).sum()
    }

    /// Partial derivatives at a positive point.
    pub fn gradient(&self, q: &[f64]) -> Result<Vec<f64>, GpError> {
        check_positive(q)?;
        let mut g = vec![0.0; self.dim()];
        for t in &self.terms {
            let v = t.evaluate(q);
            for (i, a) in t.exponents.iter().enumerate() {
                if *a != 0.0 {
                    g[i] += a * v / q[i];
                }
            }
        }
        Ok(g)
    }

    pub fn scale(&self, factor: f64) -> Posynomial {
        Posynomial {
            terms: self.terms.iter().map(|t| t.scale(factor)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Posynomial {
        Posynomial {
            terms: self.terms.iter().map(|t| t.mul_monomial(m)).collect(),
        }
    }

    /// Best local monomial approximation at `q0`: the weighted
    /// arithmetic-geometric mean bound, exact at `q0` and below `self`
    /// everywhere else.
    pub fn condense(&self, q0: &[f64]) -> Result<Monomial, GpError> {
        condense(self, q0)
    }
}

/// Monomial `lambda * prod q_i^a_i` with `a_i = q_i/G * dG/dq_i` and
/// `lambda = G(q0) / prod q0_i^a_i`.
pub fn condense(den: &Posynomial, q0: &[f64]) -> Result<Monomial, GpError> {
    check_positive(q0)?;
    if den.dim() != q0.len() {
        return Err(GpError::DimensionMismatch {
            expected: den.dim(),
            found: q0.len(),
        });
    }
    if let Some(m) = den.as_monomial() {
        return Ok(m.clone());
    }
    let values: Vec<f64> = den.terms.iter().map(|t| t.evaluate(q0)).collect();
    let total: f64 = values.iter().sum();
    let dim = den.dim();
    let mut exponents = vec![0.0; dim];
    for (t, v) in den.terms.iter().zip(&values) {
        let w = v / total;
        for (e, a) in exponents.iter_mut().zip(&t.exponents) {
            *e += w * a;
        }
    }
    // lambda = prod_k (c_k / w_k)^{w_k}, evaluated in log space
    let mut log_lambda = 0.0;
    for (t, v) in den.terms.iter().zip(&values) {
        let w = v / total;
        if w > 0.0 {
            log_lambda += w * (t.coeff.ln() - w.ln());
        }
    }
    Ok(Monomial::new(log_lambda.exp(), exponents))
}

fn check_positive(q: &[f64]) -> Result<(), GpError> {
    match q.iter().position(|x| !(*x > 0.0) || !x.is_finite()) {
        Some(index) => Err(GpError::NonPositivePoint {
            index,
            value: q[index],
        }),
        None => Ok(()),
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial::from_monomial(m)
    }
}

impl Add for Posynomial {
    type Output = Posynomial;
    fn add(mut self, rhs: Posynomial) -> Posynomial {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        for t in rhs.terms {
            self.push_merged(t);
        }
        self
    }
}

impl Add<Monomial> for Posynomial {
    type Output = Posynomial;
    fn add(mut self, rhs: Monomial) -> Posynomial {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.push_merged(rhs);
        self
    }
}

impl Mul for &Posynomial {
    type Output = Posynomial;
    fn mul(self, rhs: &Posynomial) -> Posynomial {
        let mut out = Posynomial { terms: Vec::new() };
        for a in &self.terms {
            for b in &rhs.terms {
                out.push_merged(a.mul_monomial(b));
            }
        }
        out
    }
}

impl Mul<&Monomial> for &Posynomial {
    type Output = Posynomial;
    fn mul(self, rhs: &Monomial) -> Posynomial {
        self.mul_monomial(rhs)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (i, a) in self.exponents.iter().enumerate() {
            if *a == 1.0 {
                write!(f, "*q{i}")?;
            } else if *a != 0.0 {
                write!(f, "*q{i}^{a}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Posynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q1_plus_q2() -> Posynomial {
        Posynomial::new(vec![Monomial::var(1.0, 2, 0), Monomial::var(1.0, 2, 1)]).unwrap()
    }

    #[test]
    fn monomial_evaluates() {
        let m = Monomial::var(2.0, 1, 0);
        assert_eq!(m.evaluate(&[3.0]), 6.0);
    }

    #[test]
    fn posynomial_sum_at_ones() {
        assert_eq!(q1_plus_q2().evaluate(&[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn rejects_non_positive_point() {
        let err = q1_plus_q2().evaluate(&[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, GpError::NonPositivePoint { index: 1, .. }));
    }

    #[test]
    fn like_terms_merge() {
        let p = Posynomial::new(vec![Monomial::var(1.0, 1, 0), Monomial::var(2.5, 1, 0)]).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coeff, 3.5);
    }

    #[test]
    fn condense_monomial_is_fixed_point() {
        let m = Monomial::new(3.0, vec![1.5, -2.0]);
        let p = Posynomial::from_monomial(m.clone());
        assert_eq!(condense(&p, &[0.3, 7.0]).unwrap(), m);
    }

    #[test]
    fn condense_sum_of_two_variables() {
        let m = condense(&q1_plus_q2(), &[1.0, 1.0]).unwrap();
        assert!((m.coeff - 2.0).abs() < 1e-15);
        assert!((m.exponents[0] - 0.5).abs() < 1e-15);
        assert!((m.exponents[1] - 0.5).abs() < 1e-15);
        assert!((m.evaluate(&[1.0, 1.0]) - 2.0).abs() < 1e-15);
        let at = m.evaluate(&[2.0, 1.0]);
        assert!((at - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(at <= 3.0);
    }

    #[test]
    fn product_expands() {
        // (1 + q)(1 + q) = 1 + 2q + q^2
        let p = Posynomial::new(vec![Monomial::constant(1.0, 1), Monomial::var(1.0, 1, 0)]).unwrap();
        let sq = &p * &p;
        assert_eq!(sq.terms().len(), 3);
        assert!((sq.evaluate(&[2.0]).unwrap() - 9.0).abs() < 1e-12);
    }
}
