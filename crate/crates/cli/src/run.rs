//! Task execution. Each task turns a resolved config into an [`Outcome`]:
//! a verdict, a JSON result and a CSV table.

use perilimit::convexify::{rank_one_convexify, strict_polyconvexity_probe, EnvelopeOptions, MatrixLattice};
use perilimit::nonlocal::{convergence_study, DeformationField, NonlocalOptions};
use perilimit::pipeline::{estimate_beta, local_density, verify_limit_invariances, BlowupResult};
use perilimit::quadrature::sphere_measure;
use perilimit::recoverability::{
    default_battery, jensen_counterexample_suite, mooney_rivlin_inequality_check, recoverability_residual,
    roundtrip_check, Residual, Verdict,
};
use perilimit::{ExtendedReal, Matrix, PairwisePotential, SphereQuadrature, StoredEnergy};
use serde_json::{json, Value};

use crate::config::{RunConfig, Task};

/// Agreement required between `w̄` and a reference density.
pub const DENSITY_TOLERANCE: f64 = 1e-8;

/// Why a run stopped before producing a verdict.
#[derive(Debug)]
pub enum RunError {
    /// The inputs are unusable (exit 64).
    Config(String),
    /// The computation failed (exit 1).
    Execution(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "invalid config: {m}"),
            Self::Execution(m) => write!(f, "execution error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<perilimit::Error> for RunError {
    fn from(e: perilimit::Error) -> Self {
        use perilimit::Error as E;
        match e {
            E::NonSquare { .. }
            | E::DimensionMismatch(_)
            | E::UnsupportedDimension(_)
            | E::UnsupportedOrder(_)
            | E::InvalidArgument(_)
            | E::BetaMismatch { .. }
            | E::Resolution(_)
            | E::Precondition(_) => Self::Config(e.to_string()),
            _ => Self::Execution(e.to_string()),
        }
    }
}

type RunResult<T> = Result<T, RunError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Reports are written but the iteration did not settle (exit 1).
    Diverged(String),
}

impl Status {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::Fail => 2,
            Self::Diverged(_) => 1,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Diverged(_) => "diverged",
        }
    }
}

/// Flat table written to `detail.csv`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub verdict: String,
    pub result: Value,
    pub detail: Table,
    pub notes: Vec<String>,
}

/// Shortest decimal that parses back to `x`; exponent form outside
/// `[1e-5, 1e16)`; `inf` for `+∞`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn ext(x: ExtendedReal) -> String {
    num(x.to_f64())
}

/// Row-major entries separated by spaces.
pub fn format_matrix(m: &Matrix) -> String {
    m.entries().iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> RunResult<Value> {
    serde_json::to_value(x).map_err(|e| RunError::Execution(e.to_string()))
}

fn potential_for(cfg: &RunConfig, n: usize) -> RunResult<PairwisePotential> {
    match &cfg.potential {
        Some(kind) => Ok(PairwisePotential::new(kind.clone())),
        None => Ok(PairwisePotential::dirichlet(n)?),
    }
}

fn diag_battery(n: usize) -> Matrix {
    Matrix::diag(&(1..=n).map(|i| i as f64).collect::<Vec<_>>())
}

pub fn run(cfg: &RunConfig) -> RunResult<Outcome> {
    cfg.validate().map_err(|e| RunError::Config(e.0))?;
    match cfg.task {
        Task::QuadratureCheck => quadrature_check(cfg),
        Task::GammaLimit => gamma_limit(cfg),
        Task::Recoverability => recoverability(cfg),
        Task::Convexify => convexify(cfg),
        Task::Converge => converge(cfg),
        Task::Counterexamples => counterexamples(cfg),
    }
}

/// `⨍ z₁^{2k}` on S^{n-1}: `(2k)!/(4^k (k!)²)` on the circle, `1/(2k+1)` on S².
fn even_moment(n: usize, k: u32) -> f64 {
    if n == 2 {
        (1..=k).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
    } else {
        1.0 / (2 * k + 1) as f64
    }
}

fn quadrature_check(cfg: &RunConfig) -> RunResult<Outcome> {
    let qc = &cfg.quadrature_check;
    let mut table = Table::new(&[
        "dim",
        "order",
        "points",
        "weight_sum_error",
        "second_moment_error",
        "even_moment_error",
        "max_node_norm_error",
    ]);
    let mut rows = Vec::new();
    let mut ok = true;
    for &n in &qc.dims {
        let q = SphereQuadrature::with_order(n, cfg.quad_order)?;
        let sigma = sphere_measure(n)?;
        let weight_err = (q.weights().iter().sum::<f64>() - sigma).abs();
        let mut second: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let exact = if j == k { sigma / n as f64 } else { 0.0 };
                second = second.max((q.integrate(|z| z[j] * z[k]) - exact).abs());
            }
        }
        // Even powers of one coordinate below the exactness degree.
        let kmax = (q.order() as u32).saturating_sub(1).clamp(1, 8);
        let mut even: f64 = 0.0;
        for k in 1..=kmax {
            let axis = n - 1;
            even = even.max((q.mean(|z| z[axis].powi(2 * k as i32)) - even_moment(n, k)).abs());
        }
        let norm_err =
            q.iter().map(|(z, _)| (z.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs()).fold(0.0, f64::max);
        let row_ok = weight_err <= qc.weight_tolerance && second <= qc.moment_tolerance;
        ok &= row_ok;
        table.push(vec![
            n.to_string(),
            q.order().to_string(),
            q.len().to_string(),
            num(weight_err),
            num(second),
            num(even),
            num(norm_err),
        ]);
        rows.push(json!({
            "dim": n,
            "order": q.order(),
            "points": q.len(),
            "weight_sum_error": weight_err,
            "second_moment_error": second,
            "even_moment_error": even,
            "max_node_norm_error": norm_err,
            "passed": row_ok,
        }));
    }
    Ok(Outcome {
        status: pass_if(ok),
        verdict: if ok { "pass" } else { "fail" }.into(),
        result: json!({ "rules": rows }),
        detail: table,
        notes: Vec::new(),
    })
}

fn gamma_limit(cfg: &RunConfig) -> RunResult<Outcome> {
    let gc = &cfg.gamma_limit;
    let n = gc.dim;
    let q = SphereQuadrature::with_order(n, cfg.quad_order)?;
    let potential = potential_for(cfg, n)?;
    let beta_estimate = estimate_beta(&potential, 8, cfg.seed)?;
    let limit = BlowupResult::new(potential.clone(), gc.beta)?;
    let battery = default_battery(n, gc.matrices, cfg.seed)?;
    let mut table = Table::new(&["label", "matrix", "w_bar", "reference", "abs_error"]);
    let mut max_error: Option<f64> = None;
    let mut compare_ok = true;
    for (label, a) in &battery {
        let wbar = local_density(&limit, a, &q)?;
        let (reference, err) = if gc.compare_density {
            let w = cfg.density.eval(a)?;
            let err = (wbar - w.to_f64()).abs();
            compare_ok &= w.is_finite() && err <= DENSITY_TOLERANCE * (1.0 + w.to_f64().abs());
            max_error = Some(max_error.unwrap_or(0.0).max(err));
            (ext(w), num(err))
        } else {
            (String::new(), String::new())
        };
        table.push(vec![label.clone(), format_matrix(a), num(wbar), reference, err]);
    }
    let probe = diag_battery(n);
    let invariance = verify_limit_invariances(&limit, &probe, gc.invariance_trials, cfg.seed, &q)?;
    let ok = invariance.passed && compare_ok;
    let verdict = if !invariance.passed {
        "not-invariant"
    } else if !compare_ok {
        "density-mismatch"
    } else {
        "pass"
    };
    let mut notes = Vec::new();
    if !potential.is_isotropic() {
        notes.push("potential is not isotropic; the invariance check is expected to fail".to_string());
    }
    Ok(Outcome {
        status: pass_if(ok),
        verdict: verdict.into(),
        result: json!({
            "potential": potential.kind().name(),
            "dim": n,
            "beta": limit.beta(),
            "beta_estimate": beta_estimate,
            "blowup_residual": limit.diagnostics().residual,
            "invariance_matrix": probe,
            "invariance": to_value(&invariance)?,
            "compared_density": gc.compare_density.then(|| cfg.density.name()),
            "max_abs_error": max_error,
            "tolerance": DENSITY_TOLERANCE,
        }),
        detail: table,
        notes,
    })
}

fn residual_cells(r: &Residual) -> (String, &'static str) {
    match r {
        Residual::Finite(x) => (num(*x), "finite"),
        Residual::InfiniteViolation => ("inf".into(), "infinite-violation"),
        Residual::Indeterminate => (String::new(), "indeterminate"),
    }
}

fn recoverability(cfg: &RunConfig) -> RunResult<Outcome> {
    let rc = &cfg.recoverability;
    let q = SphereQuadrature::with_order(rc.dim, cfg.quad_order)?;
    let battery = default_battery(rc.dim, rc.random_matrices, cfg.seed)?;
    let report = roundtrip_check(&cfg.density, &q, &battery)?;
    let mut table = Table::new(&["label", "matrix", "lhs", "rhs", "residual", "residual_kind", "violates"]);
    for e in &report.rows {
        let (res, kind) = residual_cells(&e.residual);
        table.push(vec![
            e.label.clone(),
            format_matrix(&e.matrix),
            ext(e.lhs),
            ext(e.rhs),
            res,
            kind.into(),
            e.violates().to_string(),
        ]);
    }
    Ok(Outcome {
        status: pass_if(report.verdict == Verdict::Consistent),
        verdict: report.verdict.as_str().into(),
        result: json!({
            "density": cfg.density.describe(),
            "dim": report.dim,
            "quadrature_order": report.quadrature_order,
            "quadrature_points": report.quadrature_points,
            "tolerance": report.tolerance,
            "rows": report.rows.len(),
            "max_abs_residual": report.max_abs_residual,
            "indeterminate_rows": report.indeterminate_rows,
        }),
        detail: table,
        notes: vec!["a consistent verdict is evidence on the battery only, not a proof".into()],
    })
}

fn convexify(cfg: &RunConfig) -> RunResult<Outcome> {
    let cc = &cfg.convexify;
    let lat = MatrixLattice::new(cc.dim, cc.mode, cc.bound, cc.step)?;
    let opts = EnvelopeOptions { directions: cc.directions, tol: cc.tol, max_sweeps: cc.max_sweeps, seed: cfg.seed };
    let env = rank_one_convexify(&cfg.density, &lat, &opts)?;
    let deviation = env.max_deviation_on_mask();
    let fixed = deviation <= 10.0 * cc.tol;
    let probe = if cc.probe_trials > 0 && (2..=3).contains(&cc.dim) {
        Some(strict_polyconvexity_probe(&cfg.density, cc.dim, cc.probe_trials, cfg.seed)?)
    } else {
        None
    };
    let axes = lat.axes();
    let mut headers: Vec<String> = (0..axes).map(|i| format!("c{i}")).collect();
    headers.extend(["value", "original", "interior"].map(String::from));
    let mut table = Table { headers, rows: Vec::with_capacity(lat.len()) };
    for row in env.rows() {
        let mut cells: Vec<String> = row.coords.iter().map(|x| num(*x)).collect();
        cells.push(ext(row.value));
        cells.push(ext(row.original));
        cells.push(row.interior.to_string());
        table.rows.push(cells);
    }
    let status = if !env.converged() {
        Status::Diverged(format!(
            "envelope did not settle after {} sweeps; last decrement {}",
            env.sweeps(),
            env.last_decrement()
        ))
    } else {
        pass_if(fixed)
    };
    Ok(Outcome {
        status,
        verdict: if !env.converged() {
            "not-converged"
        } else if fixed {
            "fixed-point"
        } else {
            "relaxed"
        }
        .into(),
        result: json!({
            "density": cfg.density.describe(),
            "lattice": {
                "n": lat.n(),
                "mode": lat.mode(),
                "bound": lat.bound(),
                "step": lat.step(),
                "points": lat.len(),
                "interior_points": env.interior_len(),
            },
            "directions": env.directions().len(),
            "sweeps": env.sweeps(),
            "last_decrement": env.last_decrement(),
            "converged": env.converged(),
            "max_deviation_on_mask": deviation,
            "fixed_point_tolerance": 10.0 * cc.tol,
            "probe": probe.as_ref().map(to_value).transpose()?,
        }),
        detail: table,
        notes: vec![
            "the rank-one envelope bounds the quasiconvex envelope from above; a fixed point is evidence, not proof"
                .into(),
        ],
    })
}

fn converge(cfg: &RunConfig) -> RunResult<Outcome> {
    let cv = &cfg.converge;
    let n = cv.sides.len();
    let rows: Vec<&[f64]> = cv.gradient.iter().map(|r| r.as_slice()).collect();
    let a = Matrix::from_rows(&rows)?;
    let u = if cv.kappa == 0.0 { DeformationField::affine(a) } else { DeformationField::quadratic(a, cv.kappa)? };
    let potential = potential_for(cfg, n)?;
    let beta = BlowupResult::new(potential.clone(), cv.beta)?.beta();
    let defaults = NonlocalOptions::for_dim(n);
    let opts = NonlocalOptions {
        radial_points: cv.radial_points,
        angular_order: cfg.quad_order,
        boundary_angular_order: cv.boundary_angular_order.unwrap_or(defaults.boundary_angular_order),
    };
    let table_in =
        convergence_study(&potential, beta, &u, &cv.sides, &cv.deltas, cv.cells_per_delta, cv.local_cells, &opts)?;
    let mut table = Table::new(&["delta", "h", "i_delta", "i_local", "gap", "slope_running"]);
    for r in &table_in.rows {
        table.push(vec![
            num(r.delta),
            num(r.delta / cv.cells_per_delta as f64),
            num(r.i_delta),
            num(r.i_local),
            num(r.gap),
            opt(r.slope_running),
        ]);
    }
    let all_zero = table_in.rows.iter().all(|r| r.gap <= 1e-12 * (1.0 + r.i_local.abs()));
    let ok = all_zero || table_in.fitted_slope.is_some_and(|s| s >= cv.min_slope);
    Ok(Outcome {
        status: pass_if(ok),
        verdict: if all_zero {
            "exact"
        } else if ok {
            "converged"
        } else {
            "slow"
        }
        .into(),
        result: json!({
            "potential": potential.kind().name(),
            "beta": beta,
            "gradient": a,
            "kappa": cv.kappa,
            "options": to_value(&opts)?,
            "fitted_slope": table_in.fitted_slope,
            "min_slope": cv.min_slope,
            "i_local": table_in.rows.first().map(|r| r.i_local),
        }),
        detail: table,
        notes: Vec::new(),
    })
}

fn counterexamples(cfg: &RunConfig) -> RunResult<Outcome> {
    let ce = &cfg.counterexamples;
    let mut table = Table::new(&["section", "label", "lhs", "rhs", "margin", "flag"]);
    let mut jensen = Vec::new();
    let mut jensen_ok = true;
    for n in [2usize, 3] {
        let q = SphereQuadrature::with_order(n, cfg.quad_order)?;
        let suite = jensen_counterexample_suite(n, &ce.jensen_g, &q)?;
        for r in &suite.rows {
            table.push(vec![
                format!("jensen-{}-n{n}", r.family),
                r.label.clone(),
                num(r.mean_side),
                num(r.point_side),
                num(r.margin),
                if r.constant_image { "constant-image" } else { "" }.into(),
            ]);
        }
        // Equality on scalar matrices, strict gap once |Az| varies.
        let frob = suite.rows.iter().filter(|r| r.family == "frobenius");
        for r in frob {
            if r.constant_image {
                jensen_ok &= r.margin.abs() <= 1e-10 * (1.0 + r.point_side.abs());
            } else {
                jensen_ok &= r.margin.abs() > 1e-10 * (1.0 + r.point_side.abs());
            }
        }
        jensen.push(to_value(&suite)?);
    }

    let q3 = SphereQuadrature::with_order(3, cfg.quad_order)?;
    let mr = mooney_rivlin_inequality_check(ce.alpha, ce.beta, &ce.g, &ce.lambdas, ce.a, &q3)?;
    for r in &mr.rows {
        table.push(vec![
            "mooney-rivlin-inequality".into(),
            format!("lambda={}", r.lambda),
            num(r.lhs),
            num(r.rhs),
            num(r.lhs - r.rhs),
            if r.fails { "fails" } else { "" }.into(),
        ]);
    }

    let diag = Matrix::diag(&[2.0, 0.5, 1.0]);
    let mut residuals = Vec::new();
    let mr_density = StoredEnergy::mooney_rivlin(ce.alpha, ce.beta, perilimit::ScalarProfile::well())?;
    let incompressible = StoredEnergy::incompressible_mr(ce.alpha, ce.beta)?;
    let mut residual_ok = true;
    for (name, w) in [("mooney-rivlin", &mr_density), ("incompressible-mr", &incompressible)] {
        let e = recoverability_residual(w, &diag, &q3)?;
        let (res, kind) = residual_cells(&e.residual);
        residual_ok &= e.violates();
        table.push(vec![format!("residual-{name}"), "diag(2,1/2,1)".into(), ext(e.lhs), ext(e.rhs), res, kind.into()]);
        residuals.push(json!({
            "density": w.describe(),
            "matrix": diag,
            "lhs": e.lhs,
            "rhs": e.rhs,
            "residual": e.residual,
            "violates": e.violates(),
        }));
    }

    let mr_ok = mr.first_failure.is_some();
    let ok = jensen_ok && mr_ok && residual_ok;
    Ok(Outcome {
        status: pass_if(ok),
        verdict: if ok { "reproduced" } else { "not-reproduced" }.into(),
        result: json!({
            "jensen": jensen,
            "jensen_reproduced": jensen_ok,
            "mooney_rivlin_inequality": to_value(&mr)?,
            "residuals": residuals,
        }),
        detail: table,
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RecoverabilityConfig;

    #[test]
    fn even_moments_match_known_values() {
        assert_eq!(even_moment(2, 1), 0.5);
        assert_eq!(even_moment(2, 2), 0.375);
        assert_eq!(even_moment(3, 2), 0.2);
    }

    #[test]
    fn quadrature_check_passes_at_default_order() {
        let out = run(&RunConfig::default()).unwrap();
        assert_eq!(out.status, Status::Pass);
        assert_eq!(out.detail.rows.len(), 2);
    }

    #[test]
    fn recoverability_verdicts() {
        let mut cfg = RunConfig {
            task: Task::Recoverability,
            recoverability: RecoverabilityConfig { dim: 3, random_matrices: 4 },
            ..RunConfig::default()
        };
        assert_eq!(run(&cfg).unwrap().status, Status::Pass);
        cfg.density = StoredEnergy::mooney_rivlin(1.0, 1.0, perilimit::ScalarProfile::well()).unwrap();
        let out = run(&cfg).unwrap();
        assert_eq!(out.status, Status::Fail);
        assert_eq!(out.verdict, "violated");
    }

    #[test]
    fn core_input_errors_are_config_errors() {
        let mut cfg = RunConfig { task: Task::Convexify, ..RunConfig::default() };
        cfg.convexify.step = 0.3;
        assert!(matches!(run(&cfg), Err(RunError::Config(_))));
    }

    #[test]
    fn counterexamples_are_reproduced() {
        let cfg = RunConfig { task: Task::Counterexamples, ..RunConfig::default() };
        let out = run(&cfg).unwrap();
        assert_eq!(out.verdict, "reproduced");
    }
}
