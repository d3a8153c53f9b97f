use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profile::pow;
use crate::error::{Error, Result};
use crate::linalg::norm;

type BondFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// Arbitrary bond density, for tests and experiments that fall outside the
/// serializable families.
#[derive(Clone)]
pub struct CustomBond {
    pub name: String,
    pub beta: Option<f64>,
    pub eval: Arc<BondFn>,
}

impl fmt::Debug for CustomBond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomBond").field("name", &self.name).field("beta", &self.beta).finish_non_exhaustive()
    }
}

/// Families of pairwise bond densities `w(x̃, ỹ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BondKind {
    /// `c |ỹ|^p / |x̃|^q`, homogeneous of degree `p − q`.
    PowerBond { c: f64, p: f64, q: f64 },
    /// `c x̃₁² |ỹ|² / |x̃|⁴`. Frame indifferent but not isotropic; used as a
    /// negative control for the symmetry checks.
    AnisotropicControl { c: f64 },
    /// Sum of bonds.
    Sum { terms: Vec<BondKind> },
    #[serde(skip)]
    Custom(CustomBond),
}

impl BondKind {
    fn eval(&self, x: &[f64], y: &[f64], nx: f64) -> f64 {
        match self {
            Self::PowerBond { c, p, q } => c * pow(norm(y), *p) / pow(nx, *q),
            Self::AnisotropicControl { c } => {
                let ny = norm(y);
                c * x[0] * x[0] * ny * ny / (nx * nx * nx * nx)
            }
            Self::Sum { terms } => terms.iter().map(|t| t.eval(x, y, nx)).sum(),
            Self::Custom(b) => (b.eval)(x, y),
        }
    }

    fn declared_beta(&self) -> Option<f64> {
        match self {
            Self::PowerBond { p, q, .. } => Some(p - q),
            Self::AnisotropicControl { .. } => Some(0.0),
            Self::Sum { terms } => {
                let mut betas = terms.iter().map(|t| t.declared_beta());
                let first = betas.next()??;
                betas.all(|b| b == Some(first)).then_some(first)
            }
            Self::Custom(b) => b.beta,
        }
    }

    /// Symmetric under rotations of `x̃` and of `ỹ` separately.
    fn is_isotropic(&self) -> bool {
        match self {
            Self::PowerBond { .. } => true,
            Self::AnisotropicControl { .. } => false,
            Self::Sum { terms } => terms.iter().all(|t| t.is_isotropic()),
            Self::Custom(_) => false,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::PowerBond { .. } => "power-bond".into(),
            Self::AnisotropicControl { .. } => "anisotropic-control".into(),
            Self::Sum { .. } => "sum".into(),
            Self::Custom(b) => format!("custom:{}", b.name),
        }
    }
}

/// A homogeneous-material bond density `w(x̃, ỹ)` with an optional horizon:
/// outside `|x̃| ≤ δ` the density vanishes.
#[derive(Debug, Clone)]
pub struct PairwisePotential {
    kind: BondKind,
    horizon: Option<f64>,
}

impl PairwisePotential {
    pub fn new(kind: BondKind) -> Self {
        Self { kind, horizon: None }
    }

    /// `c |ỹ|^p / |x̃|^q`.
    pub fn power_bond(c: f64, p: f64, q: f64) -> Self {
        Self::new(BondKind::PowerBond { c, p, q })
    }

    /// The bond `(n/σ_{n-1}) |ỹ|²/|x̃|²` whose local density is `|A|²`.
    pub fn dirichlet(n: usize) -> Result<Self> {
        let sigma = crate::quadrature::sphere_measure(n)?;
        Ok(Self::power_bond(n as f64 / sigma, 2.0, 2.0))
    }

    pub fn anisotropic_control(c: f64) -> Self {
        Self::new(BondKind::AnisotropicControl { c })
    }

    pub fn sum(terms: Vec<PairwisePotential>) -> Self {
        Self::new(BondKind::Sum { terms: terms.into_iter().map(|t| t.kind).collect() })
    }

    pub fn custom<F>(name: &str, beta: Option<f64>, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(BondKind::Custom(CustomBond { name: name.into(), beta, eval: Arc::new(f) }))
    }

    pub fn with_horizon(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {delta}")));
        }
        self.horizon = Some(delta);
        Ok(self)
    }

    pub fn kind(&self) -> &BondKind {
        &self.kind
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    /// Declared homogeneity degree `β`, when known.
    pub fn declared_beta(&self) -> Option<f64> {
        self.kind.declared_beta()
    }

    pub fn is_isotropic(&self) -> bool {
        self.kind.is_isotropic()
    }

    /// `w(x̃, ỹ)`. The density blows up at the origin, so `x̃ = 0` is an error.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let nx = norm(x);
        if nx == 0.0 {
            return Err(Error::ZeroOffset);
        }
        if self.horizon.is_some_and(|d| nx > d) {
            return Ok(0.0);
        }
        let v = self.kind.eval(x, y, nx);
        if v.is_nan() {
            return Err(Error::NotExtendedReal(format!(
                "{} evaluated to NaN at x = {x:?}, y = {y:?}",
                self.kind.name()
            )));
        }
        Ok(v)
    }

    /// `t ↦ w̃(1, t)`, the bond as a function of the deformed length at unit
    /// reference length.
    pub fn radial_profile(&self, n: usize, t: f64) -> Result<f64> {
        let mut x = [0.0; 3];
        x[0] = 1.0;
        let mut y = [0.0; 3];
        y[0] = t;
        self.eval(&x[..n], &y[..n])
    }
}

impl From<BondKind> for PairwisePotential {
    fn from(kind: BondKind) -> Self {
        Self::new(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_rotation, Matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_bond_value() {
        let w = PairwisePotential::dirichlet(2).unwrap();
        let v = w.eval(&[1.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!((v - (2.0 / (2.0 * PI)) * 4.0).abs() < 1e-15);
        assert_eq!(w.declared_beta(), Some(0.0));
    }

    #[test]
    fn zero_offset_is_an_error() {
        let w = PairwisePotential::power_bond(1.0, 2.0, 2.0);
        assert_eq!(w.eval(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroOffset));
    }

    #[test]
    fn horizon_truncates() {
        let w = PairwisePotential::power_bond(1.0, 2.0, 2.0).with_horizon(0.5).unwrap();
        assert_eq!(w.eval(&[0.6, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(w.eval(&[0.4, 0.0], &[1.0, 0.0]).unwrap() > 0.0);
        assert!(PairwisePotential::power_bond(1.0, 2.0, 2.0).with_horizon(0.0).is_err());
    }

    #[test]
    fn sum_declares_beta_only_when_terms_agree() {
        let same = PairwisePotential::sum(vec![
            PairwisePotential::power_bond(1.0, 2.0, 2.0),
            PairwisePotential::power_bond(1.0, 3.0, 3.0),
        ]);
        assert_eq!(same.declared_beta(), Some(0.0));
        let mixed = PairwisePotential::sum(vec![
            PairwisePotential::power_bond(1.0, 2.0, 2.0),
            PairwisePotential::power_bond(1.0, 4.0, 2.0),
        ]);
        assert_eq!(mixed.declared_beta(), None);
    }

    #[test]
    fn power_bonds_are_symmetric_and_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, q) in [(2.0, 2.0), (4.0, 2.0), (2.0, 1.0), (3.0, 0.5)] {
            let w = PairwisePotential::power_bond(0.7, p, q);
            for k in 0..30u64 {
                let x = Matrix::random(3, 1, 1.0, &mut rng);
                let y = Matrix::random(3, 1, 1.0, &mut rng);
                let (x, y) = (x.entries(), y.entries());
                let base = w.eval(x, y).unwrap();
                let r = *random_rotation(3, k).unwrap().matrix();
                assert!((w.eval(x, &r.apply(y)).unwrap() - base).abs() <= 1e-10 * (1.0 + base));
                assert!((w.eval(&r.apply(x), y).unwrap() - base).abs() <= 1e-10 * (1.0 + base));
                for t in [0.5, 0.25, 0.125] {
                    let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
                    let ty: Vec<f64> = y.iter().map(|v| t * v).collect();
                    let scaled = w.eval(&tx, &ty).unwrap();
                    let expect = pow(t, p - q) * base;
                    assert!((scaled - expect).abs() <= 1e-8 * expect.abs());
                }
                let _ = rng.random::<f64>();
            }
        }
    }

    #[test]
    fn anisotropic_control_breaks_isotropy_only() {
        let w = PairwisePotential::anisotropic_control(1.0);
        let x = [1.0, 0.0, 0.0];
        let y = [0.3, 0.4, 0.0];
        let r = *random_rotation(3, 9).unwrap().matrix();
        let base = w.eval(&x, &y).unwrap();
        assert!((w.eval(&x, &r.apply(&y)).unwrap() - base).abs() < 1e-12);
        assert!((w.eval(&r.apply(&x), &y).unwrap() - base).abs() > 1e-3);
        assert!(!w.is_isotropic());
    }
}
