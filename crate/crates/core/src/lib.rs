//! Local limits of bond-based peridynamic energies.
//!
//! The crate evaluates the local density obtained from a pairwise bond
//! potential as the horizon shrinks, tests whether a hyperelastic stored
//! energy can arise that way, and reproduces the standard counterexamples
//! (powers of `|A|`, cofactor profiles, Mooney-Rivlin and its incompressible
//! variant).
//!
//! Module map:
//! - [`linalg`]: small matrices, rotations, extended reals
//! - [`quadrature`]: rules on S¹ and S²
//! - [`potentials`]: bond densities and stored energies
//! - [`pipeline`]: blow-up limit and local density
//! - [`convexify`]: rank-one envelopes and convexity probes
//! - [`recoverability`]: the mean-value criterion and counterexamples
//! - [`nonlocal`]: finite-horizon energies and convergence studies

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convexify;
pub mod error;
pub mod linalg;
pub mod nonlocal;
pub mod pipeline;
pub mod potentials;
pub mod quadrature;
pub mod recoverability;

pub use error::{Error, Result};
pub use linalg::{random_rotation, ExtendedReal, Matrix, Rotation};
pub use potentials::{BondKind, PairwisePotential, ProfileKind, ScalarProfile, StoredEnergy};
pub use quadrature::{mean_over_sphere, SphereQuadrature};
