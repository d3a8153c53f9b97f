use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::ExtendedReal;

/// Tolerance for `t = 1` in the indicator profile and the incompressible
/// constraint `det A = 1`.
pub const UNIT_TOLERANCE: f64 = 1e-9;

fn one() -> f64 {
    1.0
}

/// Scalar function `g` composed with an invariant of `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarProfile {
    /// `coef · t^exponent`. For `t < 0` and a non-integer exponent the value
    /// is `+∞` (outside the domain).
    Power {
        #[serde(default = "one")]
        coef: f64,
        exponent: f64,
    },
    /// `a + b·t²`.
    AffineInSquare { a: f64, b: f64 },
    /// `coef · (t − 1)²`.
    Well {
        #[serde(default = "one")]
        coef: f64,
    },
    /// `0` at `t = 1`, `+∞` elsewhere.
    Indicator,
}

impl ScalarProfile {
    pub fn power(coef: f64, exponent: f64) -> Self {
        Self::Power { coef, exponent }
    }

    /// `g ≡ 0`.
    pub fn zero() -> Self {
        Self::Power { coef: 0.0, exponent: 1.0 }
    }

    pub fn well() -> Self {
        Self::Well { coef: 1.0 }
    }

    pub fn eval(&self, t: f64) -> Result<ExtendedReal> {
        let v = match *self {
            Self::Power { coef: 0.0, .. } => 0.0,
            Self::Power { coef, exponent } => {
                if t < 0.0 && exponent.fract() != 0.0 {
                    return Ok(ExtendedReal::Infinity);
                }
                coef * pow(t, exponent)
            }
            Self::AffineInSquare { a, b } => a + b * t * t,
            Self::Well { coef } => coef * (t - 1.0) * (t - 1.0),
            Self::Indicator => {
                return Ok(if (t - 1.0).abs() <= UNIT_TOLERANCE { ExtendedReal::ZERO } else { ExtendedReal::Infinity });
            }
        };
        ExtendedReal::from_f64(v)
    }

    /// Whether `g` is nondecreasing on `[a, ∞)` for the given `a > 0`.
    pub fn nondecreasing_from(&self, a: f64) -> bool {
        match *self {
            Self::Power { coef, exponent } => {
                coef == 0.0 || (coef > 0.0 && exponent >= 0.0) || (coef < 0.0 && exponent <= 0.0)
            }
            Self::AffineInSquare { b, .. } => b >= 0.0,
            Self::Well { coef } => coef == 0.0 || (coef > 0.0 && a >= 1.0),
            Self::Indicator => false,
        }
    }

    /// For every `t` there is `t₁ > t` with `g(t₁) > g(t)`: the growth
    /// condition needed when the cofactor term is absent.
    pub fn unbounded_increase(&self) -> bool {
        match *self {
            Self::Power { coef, exponent } => coef > 0.0 && exponent > 0.0,
            Self::AffineInSquare { b, .. } => b > 0.0,
            Self::Well { coef } => coef > 0.0,
            Self::Indicator => false,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Power { coef, exponent } => format!("{coef}*t^{exponent}"),
            Self::AffineInSquare { a, b } => format!("{a}+{b}*t^2"),
            Self::Well { coef } => format!("{coef}*(t-1)^2"),
            Self::Indicator => "indicator{1}".to_string(),
        }
    }
}

/// `x^e`, using integer powers when `e` is integral.
#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() < 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        assert_eq!(ScalarProfile::power(1.0, 2.0).eval(3.0).unwrap().to_f64(), 9.0);
        assert_eq!(ScalarProfile::power(2.0, 0.5).eval(4.0).unwrap().to_f64(), 4.0);
        assert!(ScalarProfile::power(1.0, 0.5).eval(-1.0).unwrap().is_infinite());
        assert_eq!(ScalarProfile::power(1.0, 3.0).eval(-2.0).unwrap().to_f64(), -8.0);
        assert_eq!(ScalarProfile::zero().eval(5.0).unwrap().to_f64(), 0.0);
        assert_eq!(ScalarProfile::AffineInSquare { a: 1.0, b: 2.0 }.eval(3.0).unwrap().to_f64(), 19.0);
        assert_eq!(ScalarProfile::well().eval(0.5).unwrap().to_f64(), 0.25);
    }

    #[test]
    fn indicator_is_zero_only_at_one() {
        let g = ScalarProfile::Indicator;
        assert_eq!(g.eval(1.0).unwrap(), ExtendedReal::ZERO);
        assert_eq!(g.eval(1.0 + 1e-12).unwrap(), ExtendedReal::ZERO);
        assert!(g.eval(1.001).unwrap().is_infinite());
        assert!(g.eval(0.0).unwrap().is_infinite());
    }

    #[test]
    fn negative_infinity_is_rejected() {
        assert!(ScalarProfile::power(-1.0, -1.0).eval(0.0).is_err());
    }

    #[test]
    fn growth_predicates() {
        assert!(ScalarProfile::well().unbounded_increase());
        assert!(ScalarProfile::well().nondecreasing_from(1.0));
        assert!(!ScalarProfile::well().nondecreasing_from(0.5));
        assert!(!ScalarProfile::zero().unbounded_increase());
        assert!(ScalarProfile::zero().nondecreasing_from(1.0));
        assert!(!ScalarProfile::Indicator.unbounded_increase());
    }
}
