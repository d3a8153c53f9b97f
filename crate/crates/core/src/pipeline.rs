//! From a bond density to its local density.
//!
//! The nonlocal energy at horizon `δ` carries the prefactor `(n+β)/δ^{n+β}`.
//! As `δ → 0` the relevant object is the blow-up `w°(x̃, ỹ) = lim t^{-β}
//! w(t x̃, t ỹ)`, and the local density is the sphere integral
//! `w̄(A) = ∫_{S^{n-1}} w°(z, Az) dH^{n-1}(z)`. Relaxation of `w̄` lives in
//! [`crate::convexify`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{rotation_or_identity, Matrix};
use crate::potentials::PairwisePotential;
use crate::quadrature::SphereQuadrature;

/// Refinement levels `k` of the blow-up grid `t_k = 2^{-k}`.
pub const BLOWUP_LEVELS: std::ops::RangeInclusive<i32> = 4..=12;

/// Relative Cauchy tolerance of the extrapolated blow-up sequence.
pub const BLOWUP_TOLERANCE: f64 = 1e-7;

/// Tolerance on homogeneity-degree estimates and agreement with declared
/// degrees.
pub const BETA_TOLERANCE: f64 = 1e-6;

/// Samples `t^{-β} w(t x̃, t ỹ)` on the blow-up grid and the extrapolated
/// limit.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupTrace {
    pub samples: Vec<(f64, f64)>,
    pub limit: f64,
    /// Difference between the last two extrapolants.
    pub residual: f64,
}

fn scaled(v: &[f64], t: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, x) in out.iter_mut().zip(v) {
        *o = t * x;
    }
    out
}

/// `lim_{t→0} t^{-β} w(t x̃, t ỹ)` with the full sample trace.
///
/// Samples on `t_k = 2^{-k}`, `k = 4..=12`, and accelerates with Aitken's
/// extrapolation (exact for a single power-law correction). Fails with
/// [`Error::NoBlowup`] when the differences stop contracting or the last two
/// extrapolants disagree by more than [`BLOWUP_TOLERANCE`] relative.
pub fn blowup_trace(w: &PairwisePotential, beta: f64, x: &[f64], y: &[f64]) -> Result<BlowupTrace> {
    let no_limit = |detail: String| Error::NoBlowup { beta, detail };
    let mut samples = Vec::with_capacity(BLOWUP_LEVELS.count());
    for k in BLOWUP_LEVELS {
        let t = 2f64.powi(-k);
        let tx = scaled(x, t);
        let ty = scaled(y, t);
        let s = w.eval(&tx[..x.len()], &ty[..y.len()])? / t.powf(beta);
        if !s.is_finite() {
            return Err(no_limit(format!("non-finite sample {s} at t = 2^-{k}")));
        }
        samples.push((t, s));
    }
    let s: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let last = s.len() - 1;
    let d = |k: usize| s[k] - s[k - 1];
    let roundoff = |k: usize| 64.0 * f64::EPSILON * s[k].abs().max(s[k - 1].abs());

    if d(last).abs() <= roundoff(last) && d(last - 1).abs() <= roundoff(last - 1) {
        return Ok(BlowupTrace { limit: s[last], residual: d(last).abs(), samples });
    }

    let extrapolate = |k: usize| -> Option<f64> {
        let (dk, dprev) = (d(k), d(k - 1));
        if dprev == 0.0 {
            return None;
        }
        let ratio = dk / dprev;
        (ratio.abs() < 1.0).then(|| s[k] + dk * ratio / (1.0 - ratio))
    };
    let (Some(e_last), Some(e_prev)) = (extrapolate(last), extrapolate(last - 1)) else {
        return Err(no_limit(format!(
            "differences do not contract: {:e}, {:e}, {:e}",
            d(last - 2),
            d(last - 1),
            d(last)
        )));
    };
    let residual = (e_last - e_prev).abs();
    if residual > BLOWUP_TOLERANCE * e_last.abs().max(f64::MIN_POSITIVE) {
        return Err(no_limit(format!("extrapolants {e_prev:e} and {e_last:e} differ by {residual:e}")));
    }
    Ok(BlowupTrace { limit: e_last, residual, samples })
}

/// `w°(x̃, ỹ)` for a given degree `β`.
pub fn blowup(w: &PairwisePotential, beta: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    blowup_trace(w, beta, x, y).map(|t| t.limit)
}

/// Estimates the homogeneity degree as the log–log slope of
/// `t ↦ |w(t x̃, t ỹ)|` over the blow-up grid, for `samples` random pairs in
/// `R³ × R³`.
///
/// Errors with [`Error::NotHomogeneous`] if the slope varies along the grid or
/// across samples by more than [`BETA_TOLERANCE`], and with
/// [`Error::BetaMismatch`] if a declared degree disagrees with the estimate.
pub fn estimate_beta(w: &PairwisePotential, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_t: Vec<f64> = BLOWUP_LEVELS.map(|k| -(k as f64) * std::f64::consts::LN_2).collect();
    let mean_lt = log_t.iter().sum::<f64>() / log_t.len() as f64;
    let sxx: f64 = log_t.iter().map(|l| (l - mean_lt).powi(2)).sum();

    let mut slopes = Vec::with_capacity(samples);
    let mut attempts = 0;
    while slopes.len() < samples {
        attempts += 1;
        if attempts > 20 * samples.max(1) {
            return Err(Error::NotHomogeneous("bond vanishes on almost every sample".into()));
        }
        let x: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let y: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let _: f64 = rng.random();
        let mut log_w = Vec::with_capacity(log_t.len());
        for &lt in &log_t {
            let t = lt.exp();
            let v = w.eval(&scaled(&x, t), &scaled(&y, t))?;
            if v == 0.0 || !v.is_finite() {
                break;
            }
            log_w.push(v.abs().ln());
        }
        if log_w.len() < log_t.len() {
            continue;
        }
        let mean_lw = log_w.iter().sum::<f64>() / log_w.len() as f64;
        let sxy: f64 = log_t.iter().zip(&log_w).map(|(a, b)| (a - mean_lt) * (b - mean_lw)).sum();
        let slope = sxy / sxx;
        for k in 1..log_t.len() {
            let local = (log_w[k] - log_w[k - 1]) / (log_t[k] - log_t[k - 1]);
            if (local - slope).abs() > BETA_TOLERANCE {
                return Err(Error::NotHomogeneous(format!("local slope {local} deviates from fitted slope {slope}")));
            }
        }
        slopes.push(slope);
    }
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > BETA_TOLERANCE {
        return Err(Error::NotHomogeneous(format!("slopes range over [{lo}, {hi}]")));
    }
    let beta = slopes.iter().sum::<f64>() / slopes.len() as f64;
    if let Some(declared) = w.declared_beta() {
        if (declared - beta).abs() > BETA_TOLERANCE {
            return Err(Error::BetaMismatch { declared, requested: beta });
        }
    }
    Ok(beta)
}

/// A bond density together with the degree `β` of its blow-up.
#[derive(Debug, Clone)]
pub struct BlowupResult {
    potential: PairwisePotential,
    beta: f64,
    diagnostics: BlowupTrace,
}

impl BlowupResult {
    /// Fixes the degree: `beta` if given, else the declared degree, else an
    /// estimate. A `beta` contradicting the declared degree is an error.
    pub fn new(potential: PairwisePotential, beta: Option<f64>) -> Result<Self> {
        let declared = potential.declared_beta();
        let beta = match (beta, declared) {
            (Some(b), Some(d)) if (b - d).abs() > BETA_TOLERANCE => {
                return Err(Error::BetaMismatch { declared: d, requested: b })
            }
            (Some(b), _) => b,
            (None, Some(d)) => d,
            (None, None) => estimate_beta(&potential, 8, 0)?,
        };
        let diagnostics = blowup_trace(&potential, beta, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0])?;
        Ok(Self { potential, beta, diagnostics })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn potential(&self) -> &PairwisePotential {
        &self.potential
    }

    /// Blow-up trace at `x̃ = ỹ = e₁`.
    pub fn diagnostics(&self) -> &BlowupTrace {
        &self.diagnostics
    }

    /// `w°(x̃, ỹ)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        blowup(&self.potential, self.beta, x, y)
    }
}

/// `w̄(A) = ∫_{S^{n-1}} w°(z, Az) dH^{n-1}(z)` by the rule `q`.
pub fn local_density(w: &BlowupResult, a: &Matrix, q: &SphereQuadrature) -> Result<f64> {
    if q.dim() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "quadrature on S^{} used with a {}x{} matrix",
            q.dim() - 1,
            a.rows(),
            a.cols()
        )));
    }
    let m = a.rows();
    let mut sum = 0.0;
    for (z, wt) in q.iter() {
        let az = a.apply(z);
        sum += wt * w.eval(z, &az[..m])?;
    }
    Ok(sum)
}

/// Result of the symmetry check `w̄(R₁AR₂) = w̄(A)`.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub reference: f64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub trials: usize,
    pub passed: bool,
}

/// Largest `|w̄(R₁AR₂) − w̄(A)|` over `trials` random rotation pairs; passes
/// when it is at most `1e-7·(1 + |w̄(A)|)`.
pub fn verify_limit_invariances(
    w: &BlowupResult,
    a: &Matrix,
    trials: usize,
    seed: u64,
    q: &SphereQuadrature,
) -> Result<InvarianceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = local_density(w, a, q)?;
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials {
        let r1 = rotation_or_identity(a.rows(), &mut rng)?;
        let r2 = rotation_or_identity(a.cols(), &mut rng)?;
        let rotated = *r1.matrix() * *a * *r2.matrix();
        max_deviation = max_deviation.max((local_density(w, &rotated, q)? - reference).abs());
    }
    let tolerance = 1e-7 * (1.0 + reference.abs());
    Ok(InvarianceReport { reference, max_deviation, tolerance, trials, passed: max_deviation <= tolerance })
}
