//! The mean-value criterion for recoverable stored energies.
//!
//! A density `W` on `n×n` matrices can only be the local limit of an
//! isotropic, frame-indifferent bond potential if
//! `W(A) = ⨍_{S^{n-1}} W(|Az| I) dH(z)` for every `A`. When it holds, the
//! bond `w̃(1, t) = W(tI)/σ_{n-1}` reproduces `W`. This module evaluates
//! the criterion on test batteries and reproduces the counterexamples built
//! from Jensen's inequality.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ExtendedReal, Matrix};
use crate::potentials::{ScalarProfile, StoredEnergy};
use crate::quadrature::{mean_over_sphere, sphere_measure, SphereQuadrature};

/// Relative tolerance separating consistent from violated rows:
/// `|residual| ≤ RESIDUAL_TOLERANCE · (1 + |W(A)|)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// `W(A) − ⨍ W(|Az| I)` in the extended reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Residual {
    Finite(f64),
    /// Exactly one side is `+∞`.
    InfiniteViolation,
    /// Both sides are `+∞`; the criterion says nothing here.
    Indeterminate,
}

impl Residual {
    fn from_sides(lhs: ExtendedReal, rhs: ExtendedReal) -> Self {
        match (lhs, rhs) {
            (ExtendedReal::Finite(l), ExtendedReal::Finite(r)) => Self::Finite(l - r),
            (ExtendedReal::Infinity, ExtendedReal::Infinity) => Self::Indeterminate,
            _ => Self::InfiniteViolation,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Self::Finite(r) => Some(r),
            _ => None,
        }
    }
}

/// Both sides of the criterion at one matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub label: String,
    pub matrix: Matrix,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
    pub residual: Residual,
}

impl ResidualEntry {
    /// Whether this row alone refutes the criterion.
    pub fn violates(&self) -> bool {
        match self.residual {
            Residual::Finite(r) => r.abs() > RESIDUAL_TOLERANCE * (1.0 + self.lhs.to_f64().abs()),
            Residual::InfiniteViolation => true,
            Residual::Indeterminate => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    Violated,
    InfiniteViolation,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Consistent => "consistent",
            Self::Violated => "violated",
            Self::InfiniteViolation => "infinite-violation",
        }
    }
}

/// Residual table over a test battery. A single infinite violation takes
/// precedence over finite ones in the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct RecoverabilityReport {
    pub density: String,
    pub dim: usize,
    pub quadrature_order: usize,
    pub quadrature_points: usize,
    pub tolerance: f64,
    pub rows: Vec<ResidualEntry>,
    /// Largest finite `|residual|`.
    pub max_abs_residual: f64,
    pub indeterminate_rows: usize,
    pub verdict: Verdict,
}

fn check_square(a: &Matrix, q: &SphereQuadrature) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    if a.cols() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix with a rule on S^{}",
            a.rows(),
            a.cols(),
            q.dim() - 1
        )));
    }
    Ok(())
}

/// `⨍ W(|Az| I) dH(z)`.
pub fn sphere_mean_of_radial(w: &StoredEnergy, a: &Matrix, q: &SphereQuadrature) -> Result<ExtendedReal> {
    check_square(a, q)?;
    let n = a.cols();
    mean_over_sphere(q, |z| w.eval(&Matrix::scalar(n, a.image_norm(z))))
}

/// Both sides of the criterion at `A`.
pub fn recoverability_residual(w: &StoredEnergy, a: &Matrix, q: &SphereQuadrature) -> Result<ResidualEntry> {
    let rhs = sphere_mean_of_radial(w, a, q)?;
    let lhs = w.eval(a)?;
    Ok(ResidualEntry { label: String::new(), matrix: *a, lhs, rhs, residual: Residual::from_sides(lhs, rhs) })
}

/// The candidate bond profile `t ↦ w̃(1, t) = W(tI)/σ_{n-1}`.
#[derive(Debug, Clone)]
pub struct CandidateProfile {
    energy: StoredEnergy,
    n: usize,
    sigma: f64,
}

impl CandidateProfile {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64) -> Result<ExtendedReal> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("candidate evaluated at t = {t}")));
        }
        Ok(self.energy.eval(&Matrix::scalar(self.n, t))?.scale(1.0 / self.sigma))
    }

    /// `∫_{S^{n-1}} w̃(1, |Az|) dH(z)`, the density the candidate recovers.
    pub fn recovered(&self, a: &Matrix, q: &SphereQuadrature) -> Result<ExtendedReal> {
        check_square(a, q)?;
        Ok(mean_over_sphere(q, |z| self.eval(a.image_norm(z)))?.scale(q.sigma()))
    }
}

pub fn extract_candidate(w: &StoredEnergy, n: usize) -> Result<CandidateProfile> {
    Ok(CandidateProfile { energy: w.clone(), n, sigma: sphere_measure(n)? })
}

/// Standard test battery: multiples of `I`, volume-preserving stretches,
/// a matrix with distinct singular values and `random` seeded matrices with
/// entries in `[-2, 2]`.
pub fn default_battery(n: usize, random: usize, seed: u64) -> Result<Vec<(String, Matrix)>> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut out = Vec::new();
    for t in [0.0, 0.5, 1.0, 2.0] {
        out.push((format!("{t}I"), Matrix::scalar(n, t)));
    }
    for lam in [1.5, 2.0, 4.0] {
        let (label, m) = if n == 3 {
            (format!("diag({lam},1/{lam},1)"), Matrix::diag(&[lam, 1.0 / lam, 1.0]))
        } else {
            (format!("diag({lam},1/{lam})"), Matrix::diag(&[lam, 1.0 / lam]))
        };
        out.push((label, m));
    }
    if n == 3 {
        out.push(("diag(1,2,3)".into(), Matrix::diag(&[1.0, 2.0, 3.0])));
    } else {
        out.push(("diag(1,2)".into(), Matrix::diag(&[1.0, 2.0])));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        out.push((format!("random#{k}"), Matrix::random(n, n, 2.0, &mut rng)));
    }
    Ok(out)
}

/// Compares `W` with what its candidate bond recovers on each test matrix.
pub fn roundtrip_check(
    w: &StoredEnergy,
    q: &SphereQuadrature,
    test_set: &[(String, Matrix)],
) -> Result<RecoverabilityReport> {
    let candidate = extract_candidate(w, q.dim())?;
    let rows = test_set
        .par_iter()
        .map(|(label, a)| {
            let rhs = candidate.recovered(a, q)?;
            let lhs = w.eval(a)?;
            Ok(ResidualEntry { label: label.clone(), matrix: *a, lhs, rhs, residual: Residual::from_sides(lhs, rhs) })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_residual = rows.iter().filter_map(|r| r.residual.finite()).map(f64::abs).fold(0.0, f64::max);
    let indeterminate_rows = rows.iter().filter(|r| r.residual == Residual::Indeterminate).count();
    let verdict = if rows.iter().any(|r| r.residual == Residual::InfiniteViolation) {
        Verdict::InfiniteViolation
    } else if rows.iter().any(ResidualEntry::violates) {
        Verdict::Violated
    } else {
        Verdict::Consistent
    };
    Ok(RecoverabilityReport {
        density: w.describe(),
        dim: q.dim(),
        quadrature_order: q.order(),
        quadrature_points: q.len(),
        tolerance: RESIDUAL_TOLERANCE,
        rows,
        max_abs_residual,
        indeterminate_rows,
        verdict,
    })
}

/// One Jensen comparison `⨍ g(φ(z)) dH` against `g(ψ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenRow {
    pub family: String,
    pub label: String,
    pub matrix: Matrix,
    pub mean_side: f64,
    pub point_side: f64,
    /// `mean_side − point_side`.
    pub margin: f64,
    /// Whether `z ↦ |Az|` is constant on the sphere (`AᵀA` scalar).
    pub constant_image: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenSuiteReport {
    pub n: usize,
    pub profile: String,
    pub rows: Vec<JensenRow>,
}

impl JensenSuiteReport {
    pub fn row(&self, family: &str, label: &str) -> Option<&JensenRow> {
        self.rows.iter().find(|r| r.family == family && r.label == label)
    }
}

fn finite(v: ExtendedReal, what: &str) -> Result<f64> {
    v.finite().ok_or_else(|| Error::InvalidArgument(format!("{what} is +inf")))
}

fn constant_image(a: &Matrix) -> bool {
    let ata = a.transpose() * *a;
    let s = ata.get(0, 0);
    ata.max_abs_diff(&Matrix::scalar(a.cols(), s)) <= 1e-12 * (1.0 + s.abs())
}

/// Jensen comparisons behind the non-recoverability of `g(|A|²)` and
/// `g(|cof A|)`.
///
/// Family `frobenius`: `⨍ g(n|Az|²)` against `g(|A|²)`. If `g(|A|²)` were
/// recoverable these would be equal; for strictly convex `g` the margin is
/// positive wherever `|Az|` is not constant, and negative for strictly
/// concave `g`.
///
/// Family `cofactor` (n = 3): `⨍ g(√3|Az|²)` against `g(3^{-1/2}|A|²)` at
/// `diag(λ, 1/λ, 1)`. Family `cofactor-implied` compares what recoverability
/// would then force, `g(|cof A|) ≥ g(3^{-1/2}|A|²)`; a negative margin
/// there is the contradiction.
pub fn jensen_counterexample_suite(n: usize, g: &ScalarProfile, q: &SphereQuadrature) -> Result<JensenSuiteReport> {
    if q.dim() != n {
        return Err(Error::DimensionMismatch(format!("n = {n} with a rule on S^{}", q.dim() - 1)));
    }
    let nf = n as f64;
    let mut rows = Vec::new();
    let frobenius_set: Vec<(String, Matrix)> = if n == 3 {
        vec![
            ("I".into(), Matrix::identity(3)),
            ("2I".into(), Matrix::scalar(3, 2.0)),
            ("diag(1,2,1)".into(), Matrix::diag(&[1.0, 2.0, 1.0])),
            ("diag(1,2,3)".into(), Matrix::diag(&[1.0, 2.0, 3.0])),
        ]
    } else {
        vec![
            ("I".into(), Matrix::identity(n)),
            ("2I".into(), Matrix::scalar(n, 2.0)),
            ("diag(1,2)".into(), Matrix::diag(&[1.0, 2.0])),
        ]
    };
    for (label, a) in frobenius_set {
        let mean_side = finite(mean_over_sphere(q, |z| g.eval(nf * a.image_norm(z).powi(2)))?, "sphere mean")?;
        let point_side = finite(g.eval(a.frobenius_sq())?, "g(|A|^2)")?;
        rows.push(JensenRow {
            family: "frobenius".into(),
            label,
            constant_image: constant_image(&a),
            matrix: a,
            mean_side,
            point_side,
            margin: mean_side - point_side,
        });
    }
    if n == 3 {
        let s3 = 3f64.sqrt();
        for lam in [1.0, 1.5, 2.0, 4.0] {
            let a = Matrix::diag(&[lam, 1.0 / lam, 1.0]);
            let label = format!("diag({lam},1/{lam},1)");
            let mean_side = finite(mean_over_sphere(q, |z| g.eval(s3 * a.image_norm(z).powi(2)))?, "sphere mean")?;
            let point_side = finite(g.eval(a.frobenius_sq() / s3)?, "g(|A|^2/sqrt 3)")?;
            rows.push(JensenRow {
                family: "cofactor".into(),
                label: label.clone(),
                matrix: a,
                mean_side,
                point_side,
                margin: mean_side - point_side,
                constant_image: constant_image(&a),
            });
            let implied = finite(g.eval(a.cofactor()?.frobenius())?, "g(|cof A|)")?;
            rows.push(JensenRow {
                family: "cofactor-implied".into(),
                label,
                matrix: a,
                mean_side: implied,
                point_side,
                margin: implied - point_side,
                constant_image: constant_image(&a),
            });
        }
    }
    Ok(JensenSuiteReport { n, profile: g.describe(), rows })
}

/// `⨍_{S²} |Az|³ dH`.
fn cubic_mean(a: &Matrix, q: &SphereQuadrature) -> f64 {
    q.mean(|z| a.image_norm(z).powi(3))
}

fn unit_frobenius(mut a: Matrix) -> Matrix {
    let f = a.frobenius();
    a = a.scale(1.0 / f);
    a
}

/// `min_{|A| = 1} ⨍_{S²} |Az|³ dH`, by compass search from seeded random
/// starting points on the unit Frobenius sphere.
pub fn cubic_norm_constant(q: &SphereQuadrature, starts: usize, seed: u64) -> Result<f64> {
    if q.dim() != 3 {
        return Err(Error::DimensionMismatch("the cubic constant is defined for 3x3 matrices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<(f64, Matrix)> = (0..starts.max(1))
        .map(|_| {
            let a = unit_frobenius(Matrix::random(3, 3, 1.0, &mut rng));
            (cubic_mean(&a, q), a)
        })
        .collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.truncate(4);
    let refined: Vec<f64> = pts
        .into_par_iter()
        .map(|(mut best, mut a)| {
            let mut step = 0.25;
            while step > 1e-7 {
                let mut improved = false;
                for k in 0..9 {
                    for sign in [1.0, -1.0] {
                        let mut b = a;
                        b.set(k / 3, k % 3, a.get(k / 3, k % 3) + sign * step);
                        let b = unit_frobenius(b);
                        let v = cubic_mean(&b, q);
                        if v < best {
                            best = v;
                            a = b;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best
        })
        .collect();
    Ok(refined.into_iter().fold(f64::INFINITY, f64::min))
}

/// Which inequality the scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MrBranch {
    /// `β > 0`: the quartic cofactor term dominates.
    Cofactor,
    /// `β = 0`: growth of `g` alone.
    Growth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrInequalityRow {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub fails: bool,
}

/// Scan of the inequality that recoverability would force on
/// Mooney-Rivlin densities at `A = diag(λ, 1/λ, (a/c)^{1/3})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrInequalityReport {
    pub alpha: f64,
    pub beta: f64,
    pub g: String,
    pub a: f64,
    /// Numerical minimum of `⨍|Az|³` on the unit Frobenius sphere.
    pub c_numeric: f64,
    /// `3^{-3/2}`, the Jensen lower bound attained at `I/√3`.
    pub c_jensen: f64,
    /// Constant used: `min(c_numeric, a^{-2})`.
    pub c: f64,
    pub branch: MrBranch,
    pub rows: Vec<MrInequalityRow>,
    pub first_failure: Option<f64>,
    /// No failure found within the scanned `λ`.
    pub inconclusive: bool,
}

/// Default `λ` scan for [`mooney_rivlin_inequality_check`].
pub const DEFAULT_LAMBDAS: [f64; 9] = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0];

/// Evaluates both sides of the inequality a recoverable Mooney-Rivlin
/// density would satisfy, for `A = diag(λ, 1/λ, s)` with `s = (a/c)^{1/3}`:
///
/// - `β > 0`: `β(1 + λ²s² + s²/λ²) + g(s) ≥ (β/3)(λ² + λ^{-2} + s²)²`;
/// - `β = 0`: `g(s) ≥ g(c(λ² + λ^{-2} + s²)^{3/2})`.
///
/// Here `a > 0` is a point beyond which `g` increases and `c` bounds
/// `⨍|Az|³ ≥ c|A|³`. Reports the first `λ` where the inequality fails.
pub fn mooney_rivlin_inequality_check(
    alpha: f64,
    beta: f64,
    g: &ScalarProfile,
    lambdas: &[f64],
    a: f64,
    q: &SphereQuadrature,
) -> Result<MrInequalityReport> {
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("moduli must be nonnegative, got α = {alpha}, β = {beta}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("growth threshold a must be positive, got {a}")));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidArgument(format!("stretch λ must be positive, got {l}")));
    }
    let branch = if beta > 0.0 {
        MrBranch::Cofactor
    } else if g.unbounded_increase() && g.nondecreasing_from(a) {
        MrBranch::Growth
    } else {
        return Err(Error::Precondition(format!(
            "with β = 0, g = {} must increase on [{a}, ∞) without bound on its values",
            g.describe()
        )));
    };
    let c_numeric = cubic_norm_constant(q, 64, 0)?;
    let c = c_numeric.min(a.powi(-2));
    let s = (a / c).cbrt();
    let gs = g.eval(s)?.to_f64();
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let norm_sq = lam * lam + 1.0 / (lam * lam) + s * s;
        let (lhs, rhs) = match branch {
            MrBranch::Cofactor => {
                (beta * (1.0 + lam * lam * s * s + s * s / (lam * lam)) + gs, beta / 3.0 * norm_sq * norm_sq)
            }
            MrBranch::Growth => (gs, g.eval(c * norm_sq.powf(1.5))?.to_f64()),
        };
        let fails = lhs < rhs - 1e-12 * (1.0 + rhs.abs());
        rows.push(MrInequalityRow { lambda: lam, lhs, rhs, fails });
    }
    let first_failure = rows.iter().find(|r| r.fails).map(|r| r.lambda);
    Ok(MrInequalityReport {
        alpha,
        beta,
        g: g.describe(),
        a,
        c_numeric,
        c_jensen: 3f64.powf(-1.5),
        c,
        branch,
        rows,
        first_failure,
        inconclusive: first_failure.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rotation;
    use crate::potentials::ProfileKind;
    use std::f64::consts::PI;

    fn q(n: usize) -> SphereQuadrature {
        SphereQuadrature::default_for(n).unwrap()
    }

    fn finite_residual(w: &StoredEnergy, a: &Matrix) -> f64 {
        recoverability_residual(w, a, &q(a.cols())).unwrap().residual.finite().unwrap()
    }

    #[test]
    fn frobenius_square_satisfies_the_criterion() {
        let w = StoredEnergy::frobenius_squared();
        for a in [Matrix::diag(&[1.0, 2.0]), Matrix::diag(&[1.0, 2.0, 3.0]), Matrix::scalar(3, 0.3)] {
            assert!(finite_residual(&w, &a).abs() < 1e-9);
        }
    }

    #[test]
    fn quartic_residual_matches_closed_form() {
        // ⨍(2|Az|²)² over S¹ for diag(1,2) is 4·⨍(1+3 sin²θ)² = 4·59/8
        let w = StoredEnergy::profile(ProfileKind::Frobenius, ScalarProfile::power(1.0, 2.0));
        let r = finite_residual(&w, &Matrix::diag(&[1.0, 2.0]));
        assert!((r - (25.0 - 29.5)).abs() < 1e-9, "{r}");
    }

    #[test]
    fn incompressible_model_has_an_infinite_violation() {
        let w = StoredEnergy::incompressible_mr(1.0, 1.0).unwrap();
        let e = recoverability_residual(&w, &Matrix::diag(&[2.0, 0.5, 1.0]), &q(3)).unwrap();
        assert!(e.lhs.is_finite());
        assert!(e.rhs.is_infinite());
        assert_eq!(e.residual, Residual::InfiniteViolation);
        let e = recoverability_residual(&w, &Matrix::scalar(3, 2.0), &q(3)).unwrap();
        assert_eq!(e.residual, Residual::Indeterminate);
    }

    #[test]
    fn multiples_of_identity_have_zero_residual() {
        let zoo = [
            StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).unwrap(),
            StoredEnergy::profile(ProfileKind::Cofactor, ScalarProfile::power(1.0, 3.0)),
            StoredEnergy::profile(ProfileKind::Determinant, ScalarProfile::well()),
        ];
        for w in &zoo {
            for t in [0.0, 0.5, 1.0, 2.0] {
                let e = recoverability_residual(w, &Matrix::scalar(3, t), &q(3)).unwrap();
                let r = e.residual.finite().unwrap();
                assert!(r.abs() <= 1e-12 * (1.0 + e.lhs.to_f64().abs()), "{} at {t}: {r}", w.name());
            }
        }
    }

    #[test]
    fn residual_is_rotation_invariant() {
        let w = StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).unwrap();
        let rule = SphereQuadrature::with_order(3, 96).unwrap();
        let residual = |a: &Matrix| recoverability_residual(&w, a, &rule).unwrap().residual.finite().unwrap();
        let a = Matrix::diag(&[2.0, 0.5, 1.0]);
        let reference = residual(&a);
        assert!(reference.abs() > 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let r1 = *Rotation::random(3, &mut rng).unwrap().matrix();
            let r2 = *Rotation::random(3, &mut rng).unwrap().matrix();
            let rotated = residual(&(r1 * a * r2));
            assert!((rotated - reference).abs() < 1e-8, "{rotated} vs {reference}");
        }
    }

    #[test]
    fn candidate_examples() {
        let w = StoredEnergy::frobenius_squared();
        let c2 = extract_candidate(&w, 2).unwrap();
        assert!((c2.eval(1.5).unwrap().to_f64() - 1.5 * 1.5 / PI).abs() < 1e-15);
        let c3 = extract_candidate(&w, 3).unwrap();
        assert!((c3.eval(2.0).unwrap().to_f64() - 3.0 * 4.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(c3.eval(0.0).unwrap(), ExtendedReal::ZERO);
        assert!(c3.eval(-1.0).is_err());
    }

    #[test]
    fn candidate_recovers_the_same_right_hand_side() {
        let w = StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).unwrap();
        let rule = q(3);
        let c = extract_candidate(&w, 3).unwrap();
        let a = Matrix::diag(&[1.0, 2.0, 3.0]);
        let via_candidate = c.recovered(&a, &rule).unwrap().to_f64();
        let direct = sphere_mean_of_radial(&w, &a, &rule).unwrap().to_f64();
        assert!((via_candidate - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn affine_in_frobenius_square_is_consistent() {
        for n in [2, 3] {
            let w = StoredEnergy::FrobeniusSquared { a: 1.0, b: 2.0 };
            let battery = default_battery(n, 20, 5).unwrap();
            let r = roundtrip_check(&w, &q(n), &battery).unwrap();
            assert_eq!(r.verdict, Verdict::Consistent);
            assert!(r.max_abs_residual <= 1e-8, "{}", r.max_abs_residual);
            assert_eq!(r.rows.len(), 28);
        }
    }

    #[test]
    fn mooney_rivlin_is_violated() {
        let w = StoredEnergy::mooney_rivlin(1.0, 1.0, ScalarProfile::well()).unwrap();
        let r = roundtrip_check(&w, &q(3), &default_battery(3, 20, 5).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        let row = r.rows.iter().find(|e| e.label == "diag(2,1/2,1)").unwrap();
        assert!(row.residual.finite().unwrap().abs() > 0.1);
    }

    #[test]
    fn infinite_violation_takes_precedence() {
        let w = StoredEnergy::incompressible_mr(1.0, 1.0).unwrap();
        let r = roundtrip_check(&w, &q(3), &default_battery(3, 5, 1).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::InfiniteViolation);
        assert!(r.indeterminate_rows > 0);
    }

    #[test]
    fn jensen_suite_signs() {
        let convex = jensen_counterexample_suite(3, &ScalarProfile::power(1.0, 2.0), &q(3)).unwrap();
        assert!(convex.row("frobenius", "diag(1,2,1)").unwrap().margin > 0.0);
        assert!(convex.row("frobenius", "I").unwrap().margin.abs() < 1e-10);
        assert!(convex.row("frobenius", "2I").unwrap().constant_image);
        for r in convex.rows.iter().filter(|r| r.family == "cofactor") {
            assert!(r.margin >= -1e-10, "{r:?}");
        }
        assert!(convex.row("cofactor-implied", "diag(4,1/4,1)").unwrap().margin < 0.0);

        let concave = jensen_counterexample_suite(3, &ScalarProfile::power(-1.0, 2.0), &q(3)).unwrap();
        assert!(concave.row("frobenius", "diag(1,2,1)").unwrap().margin < 0.0);

        let planar = jensen_counterexample_suite(2, &ScalarProfile::power(1.0, 2.0), &q(2)).unwrap();
        assert!(planar.row("frobenius", "diag(1,2)").unwrap().margin > 0.0);
        assert!(planar.rows.iter().all(|r| r.family == "frobenius"));
    }

    #[test]
    fn cubic_constant_matches_jensen_bound() {
        let c = cubic_norm_constant(&q(3), 32, 4).unwrap();
        let bound = 3f64.powf(-1.5);
        assert!(c >= bound - 1e-9);
        assert!(c - bound < 1e-4, "{c} vs {bound}");
    }

    #[test]
    fn mooney_rivlin_inequality_fails_for_large_stretch() {
        let r = mooney_rivlin_inequality_check(1.0, 1.0, &ScalarProfile::zero(), &DEFAULT_LAMBDAS, 1.0, &q(3)).unwrap();
        assert_eq!(r.branch, MrBranch::Cofactor);
        assert!(r.first_failure.is_some_and(|l| l <= 100.0));
        assert!(r.rows.last().unwrap().fails);

        let r = mooney_rivlin_inequality_check(1.0, 0.0, &ScalarProfile::well(), &DEFAULT_LAMBDAS, 1.0, &q(3)).unwrap();
        assert_eq!(r.branch, MrBranch::Growth);
        assert!(!r.inconclusive);
    }

    #[test]
    fn growth_branch_needs_unbounded_increase() {
        let err = mooney_rivlin_inequality_check(1.0, 0.0, &ScalarProfile::zero(), &DEFAULT_LAMBDAS, 1.0, &q(3));
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}
