//! Finite-horizon energies
//! `I_δ(u) = (n+β)/δ^{n+β} ∫_Ω ∫_{Ω∩B(x,δ)} w(x'−x, u(x')−u(x)) dx' dx`
//! on boxes, and `δ → 0` convergence studies against `∫_Ω w̄(∇u)`.
//!
//! The outer integral is a midpoint rule over grid cells. The inner integral
//! is taken in polar coordinates around each cell center: Gauss–Legendre in
//! the radius, clipped where the ray leaves the box, times a sphere rule in
//! the direction. Cells whose ball reaches the boundary use a finer sphere
//! rule because the clipped radius is only piecewise smooth in the direction.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pipeline::{local_density, BlowupResult};
use crate::potentials::PairwisePotential;
use crate::quadrature::{gauss_legendre, SphereQuadrature};

/// Axis-aligned box `[0, L₁] × … × [0, Lₙ]` with a uniform cell grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    sides: Vec<f64>,
    res: Vec<usize>,
}

impl BoxDomain {
    pub fn new(sides: &[f64], res: &[usize]) -> Result<Self> {
        if !(2..=3).contains(&sides.len()) {
            return Err(Error::UnsupportedDimension(sides.len()));
        }
        if sides.len() != res.len() {
            return Err(Error::DimensionMismatch(format!("{} sides, {} resolutions", sides.len(), res.len())));
        }
        if sides.iter().any(|&s| !(s > 0.0) || !s.is_finite()) || res.contains(&0) {
            return Err(Error::InvalidArgument("sides and resolutions must be positive".into()));
        }
        Ok(Self { sides: sides.to_vec(), res: res.to_vec() })
    }

    /// Box with cells of width at most `h` along every axis.
    pub fn with_spacing(sides: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {h}")));
        }
        let res: Vec<usize> = sides.iter().map(|s| (s / h - 1e-9).ceil().max(1.0) as usize).collect();
        Self::new(sides, &res)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn resolution(&self) -> &[usize] {
        &self.res
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.sides[axis] / self.res[axis] as f64
    }

    /// Largest cell width.
    pub fn h(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn min_side(&self) -> f64 {
        self.sides.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn cells(&self) -> usize {
        self.res.iter().product()
    }

    /// Center of cell `k`; the last axis varies fastest.
    pub fn cell_center(&self, mut k: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in (0..self.dim()).rev() {
            let i = k % self.res[a];
            k /= self.res[a];
            x[a] = (i as f64 + 0.5) * self.spacing(a);
        }
        x
    }

    /// Distance from `x` to the boundary.
    fn depth(&self, x: &[f64]) -> f64 {
        self.sides.iter().zip(x).map(|(&l, &xi)| xi.min(l - xi)).fold(f64::INFINITY, f64::min)
    }

    /// Length of the ray `x + r z` inside the box.
    fn exit_distance(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut r = f64::INFINITY;
        for ((&l, &xi), &zi) in self.sides.iter().zip(x).zip(z) {
            if zi > 0.0 {
                r = r.min((l - xi) / zi);
            } else if zi < 0.0 {
                r = r.min(-xi / zi);
            }
        }
        r
    }
}

/// Displacement samples on a node grid covering a box, with multilinear
/// interpolation in between.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledField {
    sides: Vec<f64>,
    nodes: Vec<usize>,
    m: usize,
    values: Vec<f64>,
}

impl SampledField {
    /// Samples `f` at `nodes[a]` equispaced points along each axis of the
    /// box (endpoints included).
    pub fn from_fn<F>(sides: &[f64], nodes: &[usize], m: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        if sides.len() != nodes.len() || nodes.iter().any(|&k| k < 2) || m == 0 || m > 3 {
            return Err(Error::InvalidArgument("sampled field needs ≥ 2 nodes per axis and 1 ≤ m ≤ 3".into()));
        }
        let n = sides.len();
        let total: usize = nodes.iter().product();
        let mut values = Vec::with_capacity(total * m);
        for mut k in 0..total {
            let mut x = [0.0; 3];
            for a in (0..n).rev() {
                let i = k % nodes[a];
                k /= nodes[a];
                x[a] = sides[a] * i as f64 / (nodes[a] - 1) as f64;
            }
            let v = f(&x[..n]);
            if v.len() != m {
                return Err(Error::DimensionMismatch(format!("field returned {} components, expected {m}", v.len())));
            }
            values.extend(v);
        }
        Ok(Self { sides: sides.to_vec(), nodes: nodes.to_vec(), m, values })
    }

    fn eval(&self, x: &[f64]) -> [f64; 3] {
        let n = self.sides.len();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..n {
            let cells = (self.nodes[a] - 1) as f64;
            let s = (x[a] / self.sides[a] * cells).clamp(0.0, cells);
            let i = (s.floor() as usize).min(self.nodes[a] - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut out = [0.0; 3];
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut idx = 0;
            for a in 0..n {
                let bit = (corner >> a) & 1;
                weight *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx = idx * self.nodes[a] + base[a] + bit;
            }
            if weight != 0.0 {
                for (o, v) in out.iter_mut().zip(&self.values[idx * self.m..(idx + 1) * self.m]) {
                    *o += weight * v;
                }
            }
        }
        out
    }
}

/// Deformations `u: Ω → R^m`. Only differences `u(x+ξ) − u(x)` and
/// gradients enter the energies.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeformationField {
    /// `u(x) = Ax`.
    Affine {
        a: Matrix,
    },
    /// `u(x) = Ax + κ (x₁², …, xₙ²)`, square `A`.
    Quadratic {
        a: Matrix,
        kappa: f64,
    },
    Sampled(SampledField),
    /// `u(x) = R v(x) + c`.
    Transformed {
        rotation: Matrix,
        shift: Vec<f64>,
        inner: Box<DeformationField>,
    },
}

impl DeformationField {
    pub fn affine(a: Matrix) -> Self {
        Self::Affine { a }
    }

    pub fn quadratic(a: Matrix, kappa: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NonSquare { rows: a.rows(), cols: a.cols() });
        }
        Ok(Self::Quadratic { a, kappa })
    }

    /// `u + c`.
    pub fn translated(self, shift: &[f64]) -> Self {
        let m = self.target_dim();
        self.transformed(Matrix::identity(m), shift)
    }

    /// `R u`.
    pub fn rotated(self, rotation: Matrix) -> Self {
        let m = self.target_dim();
        self.transformed(rotation, &vec![0.0; m])
    }

    fn transformed(self, rotation: Matrix, shift: &[f64]) -> Self {
        Self::Transformed { rotation, shift: shift.to_vec(), inner: Box::new(self) }
    }

    pub fn target_dim(&self) -> usize {
        match self {
            Self::Affine { a } | Self::Quadratic { a, .. } => a.rows(),
            Self::Sampled(s) => s.m,
            Self::Transformed { rotation, .. } => rotation.rows(),
        }
    }

    pub fn source_dim(&self) -> Option<usize> {
        match self {
            Self::Affine { a } | Self::Quadratic { a, .. } => Some(a.cols()),
            Self::Sampled(s) => Some(s.sides.len()),
            Self::Transformed { inner, .. } => inner.source_dim(),
        }
    }

    /// `u(x)`.
    pub fn eval(&self, x: &[f64]) -> [f64; 3] {
        match self {
            Self::Affine { a } => a.apply(x),
            Self::Quadratic { a, kappa } => {
                let mut y = a.apply(x);
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi += kappa * xi * xi;
                }
                y
            }
            Self::Sampled(s) => s.eval(x),
            Self::Transformed { rotation, shift, inner } => {
                let v = inner.eval(x);
                let mut y = rotation.apply(&v[..rotation.cols()]);
                for (yi, c) in y.iter_mut().zip(shift) {
                    *yi += c;
                }
                y
            }
        }
    }

    /// `u(x+ξ) − u(x)`, exact for affine fields and independent of shifts.
    pub fn difference(&self, x: &[f64], xi: &[f64]) -> [f64; 3] {
        match self {
            Self::Affine { a } => a.apply(xi),
            Self::Quadratic { a, kappa } => {
                let mut y = a.apply(xi);
                for ((yi, &x0), &d) in y.iter_mut().zip(x).zip(xi) {
                    *yi += kappa * d * (2.0 * x0 + d);
                }
                y
            }
            Self::Sampled(s) => {
                let mut x1 = [0.0; 3];
                for (k, (a, b)) in x.iter().zip(xi).enumerate() {
                    x1[k] = a + b;
                }
                let (u1, u0) = (s.eval(&x1[..x.len()]), s.eval(x));
                [u1[0] - u0[0], u1[1] - u0[1], u1[2] - u0[2]]
            }
            Self::Transformed { rotation, inner, .. } => {
                let d = inner.difference(x, xi);
                rotation.apply(&d[..rotation.cols()])
            }
        }
    }

    /// `∇u(x)`.
    pub fn gradient(&self, x: &[f64]) -> Matrix {
        match self {
            Self::Affine { a } => *a,
            Self::Quadratic { a, kappa } => {
                let mut g = *a;
                for (i, xi) in x.iter().enumerate() {
                    g.set(i, i, g.get(i, i) + 2.0 * kappa * xi);
                }
                g
            }
            Self::Sampled(s) => {
                let n = x.len();
                let mut g = Matrix::zeros(s.m, n);
                for a in 0..n {
                    let step = 1e-7 * s.sides[a];
                    let mut e = [0.0; 3];
                    e[a] = step;
                    let mut back = [0.0; 3];
                    back[..n].copy_from_slice(x);
                    back[a] -= step;
                    let d = self.difference(&back[..n], &e[..n]);
                    let d2 = self.difference(x, &e[..n]);
                    for i in 0..s.m {
                        g.set(i, a, (d[i] + d2[i]) / (2.0 * step));
                    }
                }
                g
            }
            Self::Transformed { rotation, inner, .. } => *rotation * inner.gradient(x),
        }
    }
}

/// Quadrature knobs for [`nonlocal_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlocalOptions {
    /// Gauss–Legendre points along each ray.
    pub radial_points: usize,
    /// Sphere-rule order for balls inside the box.
    pub angular_order: usize,
    /// Sphere-rule order for balls that reach the boundary.
    pub boundary_angular_order: usize,
}

impl NonlocalOptions {
    pub fn for_dim(n: usize) -> Self {
        Self { radial_points: 8, angular_order: 32, boundary_angular_order: if n == 2 { 512 } else { 48 } }
    }
}

/// Neumaier-compensated sum in slice order.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn validate(w: &PairwisePotential, beta: f64, delta: f64, u: &DeformationField, dom: &BoxDomain) -> Result<()> {
    let n = dom.dim();
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {delta}")));
    }
    if !(n as f64 + beta > 0.0) {
        return Err(Error::InvalidArgument(format!("need n + β > 0, got n = {n}, β = {beta}")));
    }
    if u.source_dim() != Some(n) {
        return Err(Error::DimensionMismatch(format!("deformation on R^{:?}, domain in R^{n}", u.source_dim())));
    }
    if delta >= 0.5 * dom.min_side() {
        return Err(Error::InvalidArgument(format!(
            "horizon {delta} is not below half the shortest side {}",
            dom.min_side()
        )));
    }
    if delta < 3.0 * dom.h() {
        return Err(Error::Resolution(format!("horizon {delta} spans fewer than 3 cells of width {}", dom.h())));
    }
    if let Some(d) = w.horizon() {
        if d < delta {
            return Err(Error::InvalidArgument(format!(
                "potential horizon {d} is below the integration horizon {delta}"
            )));
        }
    }
    Ok(())
}

struct InnerRules {
    interior: SphereQuadrature,
    boundary: SphereQuadrature,
    radial: (Vec<f64>, Vec<f64>),
}

impl InnerRules {
    fn new(n: usize, opts: &NonlocalOptions) -> Result<Self> {
        Ok(Self {
            interior: SphereQuadrature::with_order(n, opts.angular_order)?,
            boundary: SphereQuadrature::with_order(n, opts.boundary_angular_order)?,
            radial: gauss_legendre(opts.radial_points.max(1)),
        })
    }
}

/// `∫_{B(0,δ) ∩ (Ω − x)} w(ξ, u(x+ξ) − u(x)) dξ` in polar coordinates.
fn inner_integral(
    w: &PairwisePotential,
    delta: f64,
    u: &DeformationField,
    dom: &BoxDomain,
    x: &[f64],
    rules: &InnerRules,
) -> Result<f64> {
    let n = dom.dim();
    let interior = dom.depth(x) >= delta;
    let rule = if interior { &rules.interior } else { &rules.boundary };
    let (gl_x, gl_w) = &rules.radial;
    let mut total = 0.0;
    for (z, wz) in rule.iter() {
        let reach = if interior { delta } else { delta.min(dom.exit_distance(x, z)) };
        if reach <= 0.0 {
            continue;
        }
        let mut ray = 0.0;
        for (t, wt) in gl_x.iter().zip(gl_w) {
            let r = 0.5 * reach * (t + 1.0);
            let mut xi = [0.0; 3];
            for (o, zi) in xi.iter_mut().zip(z) {
                *o = r * zi;
            }
            let y = u.difference(x, &xi[..n]);
            ray += wt * w.eval(&xi[..n], &y[..u.target_dim()])? * r.powi(n as i32 - 1);
        }
        total += wz * 0.5 * reach * ray;
    }
    Ok(total)
}

/// `I_δ(u)` on the box.
pub fn nonlocal_energy(
    w: &PairwisePotential,
    beta: f64,
    delta: f64,
    u: &DeformationField,
    dom: &BoxDomain,
    opts: &NonlocalOptions,
) -> Result<f64> {
    validate(w, beta, delta, u, dom)?;
    let n = dom.dim();
    let rules = InnerRules::new(n, opts)?;
    let per_cell = (0..dom.cells())
        .into_par_iter()
        .map(|k| {
            let x = dom.cell_center(k);
            inner_integral(w, delta, u, dom, &x[..n], &rules)
        })
        .collect::<Result<Vec<f64>>>()?;
    let prefactor = (n as f64 + beta) / delta.powf(n as f64 + beta);
    Ok(prefactor * dom.cell_volume() * compensated_sum(&per_cell))
}

/// `I_δ(u)` with a two-grid estimate of the outer discretization error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyEstimate {
    pub value: f64,
    /// `|I_δ(h) − I_δ(2h)|`, when the coarse grid still resolves `δ`.
    pub discretization_estimate: Option<f64>,
}

pub fn nonlocal_energy_with_estimate(
    w: &PairwisePotential,
    beta: f64,
    delta: f64,
    u: &DeformationField,
    dom: &BoxDomain,
    opts: &NonlocalOptions,
) -> Result<EnergyEstimate> {
    let value = nonlocal_energy(w, beta, delta, u, dom, opts)?;
    let coarse_res: Vec<usize> = dom.resolution().iter().map(|r| (r / 2).max(1)).collect();
    let coarse = BoxDomain::new(dom.sides(), &coarse_res)?;
    let discretization_estimate = if delta >= 3.0 * coarse.h() {
        Some((value - nonlocal_energy(w, beta, delta, u, &coarse, opts)?).abs())
    } else {
        None
    };
    Ok(EnergyEstimate { value, discretization_estimate })
}

/// `∫_Ω w̄(∇u(x)) dx` by the midpoint rule with `cells` cells per axis.
pub fn local_energy(
    w: &PairwisePotential,
    beta: f64,
    u: &DeformationField,
    sides: &[f64],
    cells: usize,
    q: &SphereQuadrature,
) -> Result<f64> {
    let dom = BoxDomain::new(sides, &vec![cells; sides.len()])?;
    let limit = BlowupResult::new(w.clone(), Some(beta))?;
    let n = dom.dim();
    if let DeformationField::Affine { a } = u {
        return Ok(dom.volume() * local_density(&limit, a, q)?);
    }
    let per_cell = (0..dom.cells())
        .into_par_iter()
        .map(|k| {
            let x = dom.cell_center(k);
            local_density(&limit, &u.gradient(&x[..n]), q)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(dom.cell_volume() * compensated_sum(&per_cell))
}

/// One horizon of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub i_delta: f64,
    pub i_local: f64,
    /// `|I_δ − I_local|`.
    pub gap: f64,
    /// Slope of `log gap` against `log δ` from the previous row.
    pub slope_running: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log gap` against `log δ`; absent when a gap
    /// vanishes.
    pub fitted_slope: Option<f64>,
    pub cells_per_delta: usize,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Energies `I_δ(u)` for a decreasing list of horizons, each on a grid
/// with `cells_per_delta` cells per horizon length, against the local
/// energy on a `local_cells`-per-axis grid.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    w: &PairwisePotential,
    beta: f64,
    u: &DeformationField,
    sides: &[f64],
    deltas: &[f64],
    cells_per_delta: usize,
    local_cells: usize,
    opts: &NonlocalOptions,
) -> Result<ConvergenceTable> {
    if deltas.is_empty() || deltas.windows(2).any(|d| !(d[1] < d[0])) {
        return Err(Error::InvalidArgument("horizons must be a nonempty decreasing list".into()));
    }
    if cells_per_delta < 3 {
        return Err(Error::Resolution(format!("{cells_per_delta} cells per horizon; need at least 3")));
    }
    let q = SphereQuadrature::with_order(sides.len(), opts.angular_order)?;
    let i_local = local_energy(w, beta, u, sides, local_cells, &q)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let dom = BoxDomain::with_spacing(sides, delta / cells_per_delta as f64)?;
        let i_delta = nonlocal_energy(w, beta, delta, u, &dom, opts)?;
        let gap = (i_delta - i_local).abs();
        let slope_running = rows
            .last()
            .and_then(|prev| (prev.gap > 0.0 && gap > 0.0).then(|| (prev.gap / gap).ln() / (prev.delta / delta).ln()));
        rows.push(ConvergenceRow { delta, i_delta, i_local, gap, slope_running });
    }
    let fitted_slope = if rows.iter().all(|r| r.gap > 0.0) {
        let lx: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|r| r.gap.ln()).collect();
        fit_slope(&lx, &ly)
    } else {
        None
    };
    Ok(ConvergenceTable { rows, fitted_slope, cells_per_delta })
}
