use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ExtendedReal, Matrix};
use crate::potentials::StoredEnergy;

/// Relative slack below which a Jensen gap counts as zero.
pub const PROBE_TOLERANCE: f64 = 1e-10;

/// Outcome of [`strict_polyconvexity_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyconvexityReport {
    pub density: String,
    pub n: usize,
    pub trials: usize,
    /// Trials with a finite value at the split point.
    pub evaluated: usize,
    /// Trials where `f` is `+∞` at the split point and at an endpoint.
    pub skipped_infinite: usize,
    /// Gap below `−tol`: convexity along the segment fails.
    pub violations: usize,
    /// Gap at most `tol`: strict convexity fails.
    pub non_strict: usize,
    /// Smallest gap divided by `1 + |f(A)|`.
    pub min_relative_gap: f64,
    /// Largest failure of the minors to be affine along a segment.
    pub max_minor_defect: f64,
}

impl PolyconvexityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.non_strict == 0
    }
}

fn minors(a: &Matrix) -> Result<(Matrix, Matrix, f64)> {
    Ok((*a, a.cofactor()?, a.determinant()?))
}

fn unit_gaussian(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let len = crate::linalg::norm(&v);
        if len > 1e-3 {
            let v: Vec<f64> = v.iter().map(|x| x / len).collect();
            return Matrix::new(n, 1, &v).expect("column vector");
        }
    }
}

/// Samples rank-one segments `A₁ = A + (1−λ)a⊗b`, `A₂ = A − λa⊗b` with
/// `λA₁ + (1−λ)A₂ = A`. Along such segments every minor is affine, so a
/// strictly polyconvex `f` must satisfy `λf(A₁) + (1−λ)f(A₂) > f(A)`.
/// Passing is a necessary condition only.
pub fn strict_polyconvexity_probe(f: &StoredEnergy, n: usize, trials: usize, seed: u64) -> Result<PolyconvexityReport> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PolyconvexityReport {
        density: f.describe(),
        n,
        trials,
        evaluated: 0,
        skipped_infinite: 0,
        violations: 0,
        non_strict: 0,
        min_relative_gap: f64::INFINITY,
        max_minor_defect: 0.0,
    };
    for _ in 0..trials {
        let a = Matrix::random(n, n, 2.0, &mut rng);
        let u = unit_gaussian(n, &mut rng).scale(rng.random_range(0.2..1.5));
        let v = unit_gaussian(n, &mut rng);
        let b = Matrix::outer(u.entries(), v.entries())?;
        let lam: f64 = rng.random_range(0.1..0.9);
        let a1 = a + b.scale(1.0 - lam);
        let a2 = a - b.scale(lam);

        let (m, c, d) = minors(&a)?;
        let (m1, c1, d1) = minors(&a1)?;
        let (m2, c2, d2) = minors(&a2)?;
        let defect = (m1.scale(lam) + m2.scale(1.0 - lam))
            .max_abs_diff(&m)
            .max((c1.scale(lam) + c2.scale(1.0 - lam)).max_abs_diff(&c))
            .max((lam * d1 + (1.0 - lam) * d2 - d).abs());
        report.max_minor_defect = report.max_minor_defect.max(defect);

        let (f0, f1, f2) = (f.eval(&a)?, f.eval(&a1)?, f.eval(&a2)?);
        let ExtendedReal::Finite(base) = f0 else {
            if f1.is_finite() && f2.is_finite() {
                // a finite chord over an infinite midpoint breaks convexity outright
                report.evaluated += 1;
                report.violations += 1;
                report.non_strict += 1;
                report.min_relative_gap = f64::NEG_INFINITY;
            } else {
                report.skipped_infinite += 1;
            }
            continue;
        };
        report.evaluated += 1;
        let chord = f1.scale(lam) + f2.scale(1.0 - lam);
        let ExtendedReal::Finite(chord) = chord else {
            continue;
        };
        let scale = 1.0 + base.abs();
        let rel = (chord - base) / scale;
        report.min_relative_gap = report.min_relative_gap.min(rel);
        if rel < -PROBE_TOLERANCE {
            report.violations += 1;
        }
        if rel <= PROBE_TOLERANCE {
            report.non_strict += 1;
        }
    }
    Ok(report)
}

/// `∫ f dν − f(A)` for a discrete probability measure `ν = Σ wᵢ δ_{Fᵢ}`
/// whose barycenter is `A`.
pub fn jensen_gap(f: &StoredEnergy, a: &Matrix, nu: &[(f64, Matrix)]) -> Result<ExtendedReal> {
    if nu.is_empty() {
        return Err(Error::BarycenterMismatch("empty measure".into()));
    }
    if let Some((w, _)) = nu.iter().find(|(w, _)| !(*w > 0.0)) {
        return Err(Error::BarycenterMismatch(format!("weight {w} is not positive")));
    }
    let total: f64 = nu.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::BarycenterMismatch(format!("weights sum to {total}")));
    }
    let mut bary = Matrix::zeros(a.rows(), a.cols());
    for (w, m) in nu {
        if (m.rows(), m.cols()) != (a.rows(), a.cols()) {
            return Err(Error::DimensionMismatch(format!(
                "atom is {}×{}, A is {}×{}",
                m.rows(),
                m.cols(),
                a.rows(),
                a.cols()
            )));
        }
        bary = bary + m.scale(*w);
    }
    let off = bary.max_abs_diff(a);
    if off > 1e-10 {
        return Err(Error::BarycenterMismatch(format!("barycenter is {off:e} away from A")));
    }
    let mut integral = ExtendedReal::ZERO;
    for (w, m) in nu {
        integral = integral + f.eval(m)?.scale(*w);
    }
    integral.checked_sub(f.eval(a)?)
}
