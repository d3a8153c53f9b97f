use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profile::{ScalarProfile, UNIT_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{ExtendedReal, Matrix};

type EnergyFn = dyn Fn(&Matrix) -> Result<ExtendedReal> + Send + Sync;

#[derive(Clone)]
pub struct CustomEnergy {
    pub name: String,
    pub eval: Arc<EnergyFn>,
}

impl fmt::Debug for CustomEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomEnergy").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Which invariant of `A` a profile energy composes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `g(|A|²)`
    Frobenius,
    /// `g(|cof A|)`
    Cofactor,
    /// `g(det A)`
    Determinant,
}

fn one() -> f64 {
    1.0
}

/// Stored-energy densities `W(A)` with values in `R ∪ {+∞}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StoredEnergy {
    /// `a + b|A|²`.
    FrobeniusSquared {
        #[serde(default)]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// `α|A|² + β|cof A|² + g(det A)`.
    MooneyRivlin { alpha: f64, beta: f64, g: ScalarProfile },
    /// `α|A|² + g(det A)`.
    NeoHookean { alpha: f64, g: ScalarProfile },
    /// `α|A|² + β|cof A|²` on `det A = 1`, `+∞` elsewhere.
    IncompressibleMr { alpha: f64, beta: f64 },
    /// `g(|A|²)`.
    ProfileFrobenius { g: ScalarProfile },
    /// `g(|cof A|)`.
    ProfileCof { g: ScalarProfile },
    /// `g(det A)`.
    ProfileDet { g: ScalarProfile },
    #[serde(skip)]
    Custom(CustomEnergy),
}

fn check_moduli(alpha: f64, beta: f64) -> Result<()> {
    if alpha >= 0.0 && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("moduli must be nonnegative, got α = {alpha}, β = {beta}")))
    }
}

impl StoredEnergy {
    pub fn frobenius_squared() -> Self {
        Self::FrobeniusSquared { a: 0.0, b: 1.0 }
    }

    pub fn mooney_rivlin(alpha: f64, beta: f64, g: ScalarProfile) -> Result<Self> {
        check_moduli(alpha, beta)?;
        Ok(Self::MooneyRivlin { alpha, beta, g })
    }

    pub fn neo_hookean(alpha: f64, g: ScalarProfile) -> Result<Self> {
        check_moduli(alpha, 0.0)?;
        Ok(Self::NeoHookean { alpha, g })
    }

    pub fn incompressible_mr(alpha: f64, beta: f64) -> Result<Self> {
        check_moduli(alpha, beta)?;
        Ok(Self::IncompressibleMr { alpha, beta })
    }

    pub fn profile(kind: ProfileKind, g: ScalarProfile) -> Self {
        match kind {
            ProfileKind::Frobenius => Self::ProfileFrobenius { g },
            ProfileKind::Cofactor => Self::ProfileCof { g },
            ProfileKind::Determinant => Self::ProfileDet { g },
        }
    }

    pub fn custom<F>(name: &str, f: F) -> Self
    where
        F: Fn(&Matrix) -> Result<ExtendedReal> + Send + Sync + 'static,
    {
        Self::Custom(CustomEnergy { name: name.into(), eval: Arc::new(f) })
    }

    pub fn name(&self) -> String {
        match self {
            Self::FrobeniusSquared { .. } => "frobenius-squared".into(),
            Self::MooneyRivlin { .. } => "mooney-rivlin".into(),
            Self::NeoHookean { .. } => "neo-hookean".into(),
            Self::IncompressibleMr { .. } => "incompressible-mr".into(),
            Self::ProfileFrobenius { .. } => "profile-frobenius".into(),
            Self::ProfileCof { .. } => "profile-cof".into(),
            Self::ProfileDet { .. } => "profile-det".into(),
            Self::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::FrobeniusSquared { a, b } => format!("{a}+{b}*|A|^2"),
            Self::MooneyRivlin { alpha, beta, g } => {
                format!("{alpha}*|A|^2+{beta}*|cof A|^2+g(det A), g(t)={}", g.describe())
            }
            Self::NeoHookean { alpha, g } => {
                format!("{alpha}*|A|^2+g(det A), g(t)={}", g.describe())
            }
            Self::IncompressibleMr { alpha, beta } => {
                format!("{alpha}*|A|^2+{beta}*|cof A|^2 if det A=1, else inf")
            }
            Self::ProfileFrobenius { g } => format!("g(|A|^2), g(t)={}", g.describe()),
            Self::ProfileCof { g } => format!("g(|cof A|), g(t)={}", g.describe()),
            Self::ProfileDet { g } => format!("g(det A), g(t)={}", g.describe()),
            Self::Custom(c) => c.name.clone(),
        }
    }

    /// `W(A)`.
    pub fn eval(&self, a: &Matrix) -> Result<ExtendedReal> {
        match self {
            Self::FrobeniusSquared { a: c0, b } => ExtendedReal::from_f64(c0 + b * a.frobenius_sq()),
            Self::MooneyRivlin { alpha, beta, g } => {
                let cof = a.cofactor()?;
                let det = a.determinant()?;
                Ok(g.eval(det)? + alpha * a.frobenius_sq() + beta * cof.frobenius_sq())
            }
            Self::NeoHookean { alpha, g } => {
                let det = a.determinant()?;
                Ok(g.eval(det)? + alpha * a.frobenius_sq())
            }
            Self::IncompressibleMr { alpha, beta } => {
                let det = a.determinant()?;
                if (det - 1.0).abs() > UNIT_TOLERANCE {
                    return Ok(ExtendedReal::Infinity);
                }
                let cof = a.cofactor()?;
                ExtendedReal::from_f64(alpha * a.frobenius_sq() + beta * cof.frobenius_sq())
            }
            Self::ProfileFrobenius { g } => g.eval(a.frobenius_sq()),
            Self::ProfileCof { g } => g.eval(a.cofactor()?.frobenius()),
            Self::ProfileDet { g } => g.eval(a.determinant()?),
            Self::Custom(c) => (c.eval)(a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rotation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn val(w: &StoredEnergy, a: &Matrix) -> f64 {
        w.eval(a).unwrap().to_f64()
    }

    #[test]
    fn mooney_rivlin_examples() {
        let nh = StoredEnergy::mooney_rivlin(1.0, 0.0, ScalarProfile::zero()).unwrap();
        assert_eq!(val(&nh, &Matrix::identity(3)), 3.0);
        let mr = StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).unwrap();
        // |A|² = 4 + 1/4 + 1, |cof A|² = 1/4 + 4 + 1, det A = 1
        assert!((val(&mr, &Matrix::diag(&[2.0, 0.5, 1.0])) - 10.5).abs() < 1e-14);
        assert!(StoredEnergy::mooney_rivlin(-1.0, 0.0, ScalarProfile::zero()).is_err());
    }

    #[test]
    fn neo_hookean_is_mooney_rivlin_without_cofactor_term() {
        let g = ScalarProfile::well();
        let nh = StoredEnergy::neo_hookean(1.3, g.clone()).unwrap();
        let mr = StoredEnergy::mooney_rivlin(1.3, 0.0, g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = Matrix::random(3, 3, 2.0, &mut rng);
            assert_eq!(val(&nh, &a), val(&mr, &a));
        }
    }

    #[test]
    fn incompressible_examples() {
        let w = StoredEnergy::incompressible_mr(1.0, 0.0).unwrap();
        assert_eq!(val(&w, &Matrix::identity(3)), 3.0);
        assert!(w.eval(&Matrix::diag(&[2.0, 1.0, 1.0])).unwrap().is_infinite());
        let lam = 3.0;
        let v = val(&w, &Matrix::diag(&[lam, 1.0 / lam, 1.0]));
        assert!((v - (9.0 + 1.0 / 9.0 + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn profile_examples() {
        let w = StoredEnergy::profile(ProfileKind::Frobenius, ScalarProfile::power(1.0, 2.0));
        assert_eq!(val(&w, &Matrix::diag(&[1.0, 2.0])), 25.0);
        let w = StoredEnergy::profile(ProfileKind::Cofactor, ScalarProfile::power(1.0, 1.0));
        assert!((val(&w, &Matrix::identity(3)) - 3f64.sqrt()).abs() < 1e-15);
        let w = StoredEnergy::profile(ProfileKind::Determinant, ScalarProfile::Indicator);
        assert_eq!(val(&w, &Matrix::identity(3)), 0.0);
    }

    #[test]
    fn non_square_is_rejected() {
        let mr = StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).unwrap();
        assert!(mr.eval(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn builtin_densities_are_objective_and_isotropic() {
        let zoo = vec![
            StoredEnergy::frobenius_squared(),
            StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).unwrap(),
            StoredEnergy::neo_hookean(2.0, ScalarProfile::power(1.0, 2.0)).unwrap(),
            StoredEnergy::incompressible_mr(1.0, 1.0).unwrap(),
            StoredEnergy::profile(ProfileKind::Frobenius, ScalarProfile::power(1.0, 2.0)),
            StoredEnergy::profile(ProfileKind::Cofactor, ScalarProfile::power(1.0, 2.0)),
            StoredEnergy::profile(ProfileKind::Determinant, ScalarProfile::well()),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for w in &zoo {
            for k in 0..50 {
                let a = if k % 5 == 0 {
                    // det A = 1 exercises the finite branch of the incompressible model
                    Matrix::diag(&[1.5, 1.0 / 1.5, 1.0])
                } else {
                    Matrix::random(3, 3, 2.0, &mut rng)
                };
                let r1 = *Rotation::random(3, &mut rng).unwrap().matrix();
                let r2 = *Rotation::random(3, &mut rng).unwrap().matrix();
                let base = w.eval(&a).unwrap();
                let rotated = w.eval(&(r1 * a * r2)).unwrap();
                match (base, rotated) {
                    (ExtendedReal::Finite(x), ExtendedReal::Finite(y)) => {
                        assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "{}", w.name())
                    }
                    (x, y) => assert_eq!(x, y, "{}", w.name()),
                }
            }
        }
    }
}
