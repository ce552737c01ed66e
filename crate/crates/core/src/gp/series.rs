//! Truncations of `ln(1+x) = 2 [ y + y^3/3 + y^5/5 + ... ]`, `y = x/(2+x)`.

/// Number of series terms kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SeriesTerms {
    One,
    Two,
}

impl SeriesTerms {
    pub fn count(self) -> usize {
        match self {
            SeriesTerms::One => 1,
            SeriesTerms::Two => 2,
        }
    }

    pub fn from_count(n: usize) -> Option<Self> {
        match n {
            1 => Some(SeriesTerms::One),
            2 => Some(SeriesTerms::Two),
            _ => None,
        }
    }
}

/// Truncated series for `ln(1 + x)` (natural log), valid for `x > -1`.
///
/// With one term this is `2x/(2+x)`, which for an SINR `x` is a ratio of
/// posynomials in the power variables.
pub fn log_rate_approx(x: f64, terms: SeriesTerms) -> f64 {
    debug_assert!(x > -1.0, "series needs x > -1, got {x}");
    let y = x / (2.0 + x);
    match terms {
        SeriesTerms::One => 2.0 * y,
        SeriesTerms::Two => 2.0 * y + 2.0 / 3.0 * y * y * y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(log_rate_approx(0.0, SeriesTerms::One), 0.0);
        assert_eq!(log_rate_approx(0.0, SeriesTerms::Two), 0.0);
    }

    #[test]
    fn values_at_three() {
        assert!((log_rate_approx(3.0, SeriesTerms::One) - 1.2).abs() < 1e-15);
        assert!((log_rate_approx(3.0, SeriesTerms::Two) - 1.344).abs() < 1e-15);
        let truth = 4f64.ln();
        let e1 = (truth - 1.2) / truth;
        let e2 = (truth - 1.344) / truth;
        assert!((e1 - 0.1344).abs() < 5e-4, "{e1}");
        assert!((e2 - 0.0305).abs() < 5e-4, "{e2}");
    }

    #[test]
    fn value_at_one() {
        let v = log_rate_approx(1.0, SeriesTerms::One);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let err = (2f64.ln() - v) / 2f64.ln();
        assert!((err - 0.038).abs() < 1e-3);
    }
}
