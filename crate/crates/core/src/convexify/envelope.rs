use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lattice::{LatticeMode, MatrixLattice};
use crate::error::{Error, Result};
use crate::linalg::{ExtendedReal, Matrix};
use crate::potentials::StoredEnergy;

/// Knobs for [`rank_one_convexify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeOptions {
    /// Extra random rank-one directions on top of the `{-1,0,1}` family.
    /// Ignored on diagonal lattices, where only axis steps are rank one.
    pub directions: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self { directions: 8, tol: 1e-6, max_sweeps: 50, seed: 0 }
    }
}

/// Rank-one convex envelope sampled on a lattice. Values are stored as
/// `f64`, with `+∞` as `f64::INFINITY`; NaN never occurs.
#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    lattice: MatrixLattice,
    original: Vec<f64>,
    values: Vec<f64>,
    directions: Vec<Vec<i32>>,
    sweeps: usize,
    last_decrement: f64,
    converged: bool,
    mask: Vec<bool>,
}

/// One lattice point of an envelope dump.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRow {
    pub coords: Vec<f64>,
    pub value: ExtendedReal,
    pub original: ExtendedReal,
    pub interior: bool,
}

fn ext(v: f64) -> ExtendedReal {
    if v == f64::INFINITY {
        ExtendedReal::Infinity
    } else {
        ExtendedReal::Finite(v)
    }
}

impl EnvelopeResult {
    pub fn lattice(&self) -> &MatrixLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn original(&self) -> &[f64] {
        &self.original
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Integer steps (in lattice units) of the rank-one directions used.
    pub fn directions(&self) -> &[Vec<i32>] {
        &self.directions
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Largest pointwise decrease during the final sweep.
    pub fn last_decrement(&self) -> f64 {
        self.last_decrement
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn interior_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Envelope value at a lattice matrix.
    pub fn value_at(&self, a: &Matrix) -> Option<ExtendedReal> {
        self.lattice.index_of(a).map(|i| ext(self.values[i]))
    }

    /// `max |f^{rc} − f|` over the interior mask. A point where `f = +∞`
    /// but the envelope is finite counts as an infinite deviation.
    pub fn max_deviation_on_mask(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.original)
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|((&v, &f), _)| match (v.is_finite(), f.is_finite()) {
                (true, true) => (f - v).abs(),
                (false, false) => 0.0,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> impl Iterator<Item = EnvelopeRow> + '_ {
        (0..self.lattice.len()).map(move |i| EnvelopeRow {
            coords: self.lattice.coordinates(i),
            value: ext(self.values[i]),
            original: ext(self.original[i]),
            interior: self.mask[i],
        })
    }
}

/// Sign-normalized so that `B` and `−B` give the same line family.
fn canonical(mut step: Vec<i32>) -> Option<Vec<i32>> {
    let first = *step.iter().find(|&&s| s != 0)?;
    if first < 0 {
        step.iter_mut().for_each(|s| *s = -*s);
    }
    Some(step)
}

fn outer_step(a: &[i32], b: &[i32]) -> Vec<i32> {
    a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect()
}

fn integer_vectors(n: usize, range: i32) -> Vec<Vec<i32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-range..=range).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().any(|&k| k != 0));
    out
}

/// Rank-one lattice steps: every `a⊗b` with `a, b ∈ {−1,0,1}ⁿ`, plus up to
/// `extra` further products of integer vectors in `{−2,…,2}ⁿ`.
pub fn rank_one_directions(lat: &MatrixLattice, extra: usize, seed: u64) -> Vec<Vec<i32>> {
    let n = lat.n();
    if lat.mode() == LatticeMode::Diagonal {
        return (0..n)
            .map(|i| {
                let mut s = vec![0; n];
                s[i] = 1;
                s
            })
            .collect();
    }
    let unit = integer_vectors(n, 1);
    let mut set: BTreeSet<Vec<i32>> = BTreeSet::new();
    for a in &unit {
        for b in &unit {
            set.extend(canonical(outer_step(a, b)));
        }
    }
    let mut dirs: Vec<Vec<i32>> = set.iter().cloned().collect();
    if n >= 2 && extra > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = |rng: &mut ChaCha8Rng| -> Vec<i32> { (0..n).map(|_| rng.random_range(-2..=2)).collect() };
        let mut attempts = 0;
        let mut added = 0;
        while added < extra && attempts < 100 * extra {
            attempts += 1;
            let (a, b) = (sample(&mut rng), sample(&mut rng));
            if let Some(step) = canonical(outer_step(&a, &b)) {
                if set.insert(step.clone()) {
                    dirs.push(step);
                    added += 1;
                }
            }
        }
    }
    dirs
}

/// Lattice lines parallel to one step: `(start, length)` pairs plus the
/// flat offset between consecutive points.
struct LineFamily {
    offset: isize,
    lines: Vec<(usize, usize)>,
}

fn line_family(lat: &MatrixLattice, step: &[i32]) -> LineFamily {
    let strides = lat.strides();
    let m = lat.per_axis() as i64;
    let offset: isize = step.iter().zip(&strides).map(|(&s, &st)| s as isize * st as isize).sum();
    let inside = |mi: &[usize], k: i64| {
        step.iter().enumerate().all(|(a, &s)| {
            let c = mi[a] as i64 + k * s as i64;
            (0..m).contains(&c)
        })
    };
    let mut lines = Vec::new();
    for p in 0..lat.len() {
        let mi = lat.multi_index(p);
        if inside(&mi, -1) {
            continue;
        }
        let mut len = 1;
        while inside(&mi, len as i64) {
            len += 1;
        }
        if len >= 3 {
            lines.push((p, len));
        }
    }
    LineFamily { offset, lines }
}

/// Lower convex hull of the finite samples of `v`, evaluated back at every
/// index it spans. Indices outside the finite range are left alone.
fn convexify_line(v: &[f64], out: &mut Vec<(usize, f64)>) {
    let mut hull: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (j, &y) in v.iter().enumerate() {
        if !y.is_finite() {
            continue;
        }
        while hull.len() >= 2 {
            let (x0, y0) = hull[hull.len() - 2];
            let (x1, y1) = hull[hull.len() - 1];
            let cross = (x1 - x0) as f64 * (y - y0) - (y1 - y0) * (j - x0) as f64;
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((j, y));
    }
    for w in hull.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let slope = (y1 - y0) / (x1 - x0) as f64;
        for (j, &old) in v.iter().enumerate().take(x1).skip(x0 + 1) {
            let chord = y0 + slope * (j - x0) as f64;
            if chord < old {
                out.push((j, chord));
            }
        }
    }
}

/// Applies one direction's line envelopes in place; returns the largest
/// decrease (`+∞` when an infinite value became finite).
fn sweep_direction(values: &mut [f64], family: &LineFamily) -> f64 {
    let updates: Vec<Vec<(usize, f64)>> = family
        .lines
        .par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(buf, local), &(start, len)| {
                buf.clear();
                local.clear();
                buf.extend((0..len).map(|k| values[(start as isize + k as isize * family.offset) as usize]));
                convexify_line(buf, local);
                local.iter().map(|&(j, v)| ((start as isize + j as isize * family.offset) as usize, v)).collect()
            },
        )
        .collect();
    let mut max_dec: f64 = 0.0;
    for (idx, new) in updates.into_iter().flatten() {
        let old = values[idx];
        max_dec = max_dec.max(old - new);
        values[idx] = new;
    }
    max_dec
}

/// One pass of the single-line envelope along `step`, without iterating
/// across directions. The full envelope never exceeds this.
pub fn convexify_along(lat: &MatrixLattice, values: &[f64], step: &[i32]) -> Result<Vec<f64>> {
    check_inputs(lat, values)?;
    if step.len() != lat.axes() || step.iter().all(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!("bad lattice step {step:?}")));
    }
    let mut out = values.to_vec();
    sweep_direction(&mut out, &line_family(lat, step));
    Ok(out)
}

fn check_inputs(lat: &MatrixLattice, values: &[f64]) -> Result<()> {
    if values.len() != lat.len() {
        return Err(Error::DimensionMismatch(format!("{} values for a lattice of {} points", values.len(), lat.len())));
    }
    if let Some(i) = values.iter().position(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(Error::NotExtendedReal(format!("lattice value {} at index {i}", values[i])));
    }
    Ok(())
}

fn interior_mask(lat: &MatrixLattice, directions: &[Vec<i32>]) -> Vec<bool> {
    let margin = directions.iter().flat_map(|d| d.iter().map(|s| s.unsigned_abs() as usize)).max().unwrap_or(1);
    let m = lat.per_axis();
    (0..lat.len())
        .map(|p| {
            let mi = lat.multi_index(p);
            mi[..lat.axes()].iter().all(|&i| i >= margin && i + margin < m)
        })
        .collect()
}

/// Rank-one convex envelope of tabulated lattice values.
pub fn convexify_values(lat: &MatrixLattice, values: Vec<f64>, opts: &EnvelopeOptions) -> Result<EnvelopeResult> {
    check_inputs(lat, &values)?;
    if !(opts.tol >= 0.0) || opts.max_sweeps == 0 {
        return Err(Error::InvalidArgument(format!(
            "need tol ≥ 0 and max_sweeps ≥ 1, got {} and {}",
            opts.tol, opts.max_sweeps
        )));
    }
    let directions = rank_one_directions(lat, opts.directions, opts.seed);
    let families: Vec<LineFamily> = directions.iter().map(|d| line_family(lat, d)).collect();
    let original = values.clone();
    let mut values = values;
    let mut sweeps = 0;
    let mut last = 0.0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        last = families.iter().map(|fam| sweep_direction(&mut values, fam)).fold(0.0, f64::max);
        if last <= opts.tol {
            converged = true;
            break;
        }
    }
    let mask = interior_mask(lat, &directions);
    Ok(EnvelopeResult {
        lattice: lat.clone(),
        original,
        values,
        directions,
        sweeps,
        last_decrement: last,
        converged,
        mask,
    })
}

/// Rank-one convex envelope of `f` on the lattice: iterated sweeps that
/// replace each value by the lower convex hull along every rank-one line
/// through it, until no value drops by more than `tol`.
pub fn rank_one_convexify(f: &StoredEnergy, lat: &MatrixLattice, opts: &EnvelopeOptions) -> Result<EnvelopeResult> {
    let values = (0..lat.len())
        .into_par_iter()
        .map(|i| f.eval(&lat.matrix_at(i)).map(|v| v.to_f64()))
        .collect::<Result<Vec<f64>>>()?;
    convexify_values(lat, values, opts)
}
