//! Run configuration. TOML or JSON, every key optional, unknown keys
//! rejected.

use std::path::Path;

use perilimit::convexify::LatticeMode;
use perilimit::{BondKind, ScalarProfile, StoredEnergy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    QuadratureCheck,
    GammaLimit,
    Recoverability,
    Convexify,
    Converge,
    Counterexamples,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::QuadratureCheck => "quadrature-check",
            Self::GammaLimit => "gamma-limit",
            Self::Recoverability => "recoverability",
            Self::Convexify => "convexify",
            Self::Converge => "converge",
            Self::Counterexamples => "counterexamples",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    /// Sphere-rule order: `2·order` points on S¹, `order × 2·order` on S².
    pub quad_order: usize,
    /// Stored-energy density for recoverability, convexify and gamma-limit
    /// comparisons.
    pub density: StoredEnergy,
    /// Bond potential; defaults to `(n/σ_{n-1})|ỹ|²/|x̃|²`.
    pub potential: Option<BondKind>,
    pub quadrature_check: QuadratureCheckConfig,
    pub gamma_limit: GammaLimitConfig,
    pub recoverability: RecoverabilityConfig,
    pub convexify: ConvexifyConfig,
    pub converge: ConvergeConfig,
    pub counterexamples: CounterexamplesConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::QuadratureCheck,
            seed: 0,
            threads: 0,
            quad_order: 32,
            density: StoredEnergy::frobenius_squared(),
            potential: None,
            quadrature_check: QuadratureCheckConfig::default(),
            gamma_limit: GammaLimitConfig::default(),
            recoverability: RecoverabilityConfig::default(),
            convexify: ConvexifyConfig::default(),
            converge: ConvergeConfig::default(),
            counterexamples: CounterexamplesConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureCheckConfig {
    pub dims: Vec<usize>,
    pub weight_tolerance: f64,
    pub moment_tolerance: f64,
}

impl Default for QuadratureCheckConfig {
    fn default() -> Self {
        Self { dims: vec![2, 3], weight_tolerance: 1e-12, moment_tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaLimitConfig {
    pub dim: usize,
    /// Homogeneity degree; estimated when absent.
    pub beta: Option<f64>,
    pub matrices: usize,
    pub invariance_trials: usize,
    /// Compare `w̄` against `density` with tolerance `1e-8·(1+|W|)`.
    pub compare_density: bool,
}

impl Default for GammaLimitConfig {
    fn default() -> Self {
        Self { dim: 3, beta: None, matrices: 20, invariance_trials: 50, compare_density: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverabilityConfig {
    pub dim: usize,
    pub random_matrices: usize,
}

impl Default for RecoverabilityConfig {
    fn default() -> Self {
        Self { dim: 3, random_matrices: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvexifyConfig {
    pub dim: usize,
    pub mode: LatticeMode,
    pub bound: f64,
    pub step: f64,
    pub directions: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    /// Samples for the strict polyconvexity probe (dimension 2 or 3); 0 skips it.
    pub probe_trials: usize,
}

impl Default for ConvexifyConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            mode: LatticeMode::Diagonal,
            bound: 3.0,
            step: 0.1,
            directions: 8,
            tol: 1e-6,
            max_sweeps: 50,
            probe_trials: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub beta: Option<f64>,
    pub sides: Vec<f64>,
    /// Gradient `A` of `u(x) = Ax + κ(x₁², …, xₙ²)`, as rows.
    pub gradient: Vec<Vec<f64>>,
    pub kappa: f64,
    pub deltas: Vec<f64>,
    pub cells_per_delta: usize,
    pub local_cells: usize,
    pub radial_points: usize,
    pub boundary_angular_order: Option<usize>,
    /// Pass threshold on the fitted log–log slope of the gap.
    pub min_slope: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            beta: None,
            sides: vec![1.0, 1.0],
            gradient: vec![vec![1.0, 0.0], vec![0.0, 2.0]],
            kappa: 0.0,
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            cells_per_delta: 8,
            local_cells: 64,
            radial_points: 8,
            boundary_angular_order: None,
            min_slope: 0.9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexamplesConfig {
    /// Profile for the Jensen comparisons.
    pub jensen_g: ScalarProfile,
    pub alpha: f64,
    pub beta: f64,
    pub g: ScalarProfile,
    /// Threshold beyond which `g` increases.
    pub a: f64,
    pub lambdas: Vec<f64>,
}

impl Default for CounterexamplesConfig {
    fn default() -> Self {
        Self {
            jensen_g: ScalarProfile::power(1.0, 2.0),
            alpha: 1.0,
            beta: 1.0,
            g: ScalarProfile::zero(),
            a: 1.0,
            lambdas: perilimit::recoverability::DEFAULT_LAMBDAS.to_vec(),
        }
    }
}

/// Problems with the configuration itself, as opposed to the run.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// Parses TOML, or JSON when the path ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        if self.quad_order < 2 {
            return bad(format!("quad_order must be at least 2, got {}", self.quad_order));
        }
        let dim_ok = |d: usize| (2..=3).contains(&d);
        match self.task {
            Task::QuadratureCheck if !self.quadrature_check.dims.iter().copied().all(dim_ok) => {
                bad("quadrature_check.dims must be 2 or 3".into())
            }
            Task::GammaLimit if !dim_ok(self.gamma_limit.dim) => bad("gamma_limit.dim must be 2 or 3".into()),
            Task::Recoverability if !dim_ok(self.recoverability.dim) => bad("recoverability.dim must be 2 or 3".into()),
            Task::Convexify if !(1..=3).contains(&self.convexify.dim) => bad("convexify.dim must be 1, 2 or 3".into()),
            Task::Convexify if !(self.convexify.tol >= 0.0) || self.convexify.max_sweeps == 0 => {
                bad("convexify.tol must be nonnegative and max_sweeps positive".into())
            }
            Task::Converge => {
                let c = &self.converge;
                let n = c.sides.len();
                if !dim_ok(n) || c.gradient.len() != n || c.gradient.iter().any(|r| r.len() != n) {
                    return bad("converge.gradient must be a square matrix matching converge.sides".into());
                }
                if c.deltas.is_empty() || c.deltas.windows(2).any(|d| !(d[1] < d[0])) {
                    return bad("converge.deltas must be a nonempty decreasing list".into());
                }
                Ok(())
            }
            Task::Counterexamples if self.counterexamples.lambdas.is_empty() => {
                bad("counterexamples.lambdas must not be empty".into())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c.task, Task::QuadratureCheck);
        assert_eq!(c.quad_order, 32);
        assert_eq!(c.converge.deltas, vec![0.2, 0.1, 0.05, 0.025]);
    }

    #[test]
    fn density_sections_parse() {
        let c = RunConfig::from_toml(
            r#"
            task = "recoverability"
            [density]
            kind = "mooney-rivlin"
            alpha = 1.0
            beta = 1.0
            g = { kind = "well" }
            "#,
        )
        .unwrap();
        assert_eq!(c.task, Task::Recoverability);
        assert_eq!(c.density.name(), "mooney-rivlin");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("quad_ordr = 3").is_err());
        assert!(RunConfig::from_toml("[convexify]\nstep_size = 0.1").is_err());
        assert!(RunConfig::from_toml("[density]\nkind = \"frobenius-squared\"\nc = 1").is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig { task: Task::Converge, seed: 9, ..RunConfig::default() };
        let text = serde_json::to_string(&c).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn validation_catches_bad_knobs() {
        let mut c = RunConfig { task: Task::Converge, ..RunConfig::default() };
        c.converge.deltas = vec![0.1, 0.2];
        assert!(c.validate().is_err());
        let c = RunConfig {
            task: Task::Recoverability,
            recoverability: RecoverabilityConfig { dim: 4, random_matrices: 1 },
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
