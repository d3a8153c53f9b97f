//! Quadrature on the unit circle S¹ and the unit sphere S².
//!
//! The circle rule is the equispaced trapezoid rule. The sphere rule is a
//! product of Gauss–Legendre nodes in `cos θ` and a trapezoid rule in `φ`,
//! which can be refined to any order for convergence studies.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::ExtendedReal;

/// Default circle resolution and sphere order used across the crate.
pub const DEFAULT_CIRCLE_POINTS: usize = 64;
pub const DEFAULT_SPHERE_ORDER: usize = 32;

/// Largest Gauss–Legendre order accepted by [`build_sphere_rule`].
pub const MAX_SPHERE_ORDER: usize = 512;

/// `σ_{n-1}`, the surface measure of `S^{n-1}`.
pub fn sphere_measure(n: usize) -> Result<f64> {
    match n {
        1 => Ok(2.0),
        2 => Ok(TAU),
        3 => Ok(4.0 * PI),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Nodes on `S^{n-1}` with positive weights summing to `σ_{n-1}`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    dim: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    sigma: f64,
    order: usize,
}

impl SphereQuadrature {
    /// Rule of the given refinement level: `2·order` points on S¹, or
    /// `order × 2·order` points on S².
    pub fn with_order(dim: usize, order: usize) -> Result<Self> {
        match dim {
            2 => build_circle_rule(2 * order),
            3 => build_sphere_rule(order),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// 64 points on S¹, 32×64 on S².
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::with_order(dim, DEFAULT_SPHERE_ORDER)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Refinement level (see [`SphereQuadrature::with_order`]).
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterator over `(node, weight)` pairs; each node is a slice of length
    /// `dim`.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.iter().zip(&self.weights).map(move |(z, &w)| (&z[..self.dim], w))
    }

    /// `Σ w_i f(z_i)` for a real-valued integrand.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(z, w)| w * f(z)).sum()
    }

    /// Mean over the sphere, `(Σ w_i f(z_i)) / σ_{n-1}`.
    pub fn mean<F: FnMut(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.integrate(f) / self.sigma
    }
}

/// Equispaced rule on S¹ with equal weights `2π/points`; exact for
/// trigonometric polynomials of degree `< points`.
pub fn build_circle_rule(points: usize) -> Result<SphereQuadrature> {
    if points < 4 {
        return Err(Error::InvalidArgument(format!("circle rule needs at least 4 points, got {points}")));
    }
    let nodes = (0..points)
        .map(|k| {
            let (s, c) = (TAU * k as f64 / points as f64).sin_cos();
            [c, s, 0.0]
        })
        .collect();
    Ok(SphereQuadrature { dim: 2, nodes, weights: vec![TAU / points as f64; points], sigma: TAU, order: points / 2 })
}

/// Product rule on S² with `order` Gauss–Legendre nodes in `cos θ` and
/// `2·order` equispaced azimuths. Exact for spherical polynomials of degree
/// `≤ 2·order − 1`.
pub fn build_sphere_rule(order: usize) -> Result<SphereQuadrature> {
    if !(2..=MAX_SPHERE_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let (t, wt) = gauss_legendre(order);
    let n_phi = 2 * order;
    let dphi = TAU / n_phi as f64;
    let mut nodes = Vec::with_capacity(order * n_phi);
    let mut weights = Vec::with_capacity(order * n_phi);
    for (&ct, &w) in t.iter().zip(&wt) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for k in 0..n_phi {
            let (sp, cp) = (dphi * k as f64).sin_cos();
            let mut z = [st * cp, st * sp, ct];
            let len = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
            z.iter_mut().for_each(|x| *x /= len);
            nodes.push(z);
            weights.push(w * dphi);
        }
    }
    Ok(SphereQuadrature { dim: 3, nodes, weights, sigma: 4.0 * PI, order })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Mean integral of an extended-real integrand over the sphere.
///
/// Any `+∞` node value makes the mean `+∞`. Errors from `f` (including NaN
/// values) propagate.
pub fn mean_over_sphere<F>(q: &SphereQuadrature, mut f: F) -> Result<ExtendedReal>
where
    F: FnMut(&[f64]) -> Result<ExtendedReal>,
{
    let mut sum = 0.0;
    let mut infinite = false;
    for (z, w) in q.iter() {
        match f(z)? {
            ExtendedReal::Finite(v) if v.is_nan() => return Err(Error::NotExtendedReal("NaN integrand value".into())),
            ExtendedReal::Finite(v) => sum += w * v,
            ExtendedReal::Infinity => infinite = true,
        }
    }
    if infinite {
        return Ok(ExtendedReal::Infinity);
    }
    ExtendedReal::from_f64(sum / q.sigma)
}
