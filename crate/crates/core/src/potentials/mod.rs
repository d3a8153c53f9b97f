//! Bond densities, stored-energy densities and the scalar profiles they are
//! built from.

mod bond;
mod energy;
mod profile;

pub use bond::{BondKind, CustomBond, PairwisePotential};
pub use energy::{CustomEnergy, ProfileKind, StoredEnergy};
pub use profile::{ScalarProfile, UNIT_TOLERANCE};

/// One built-in model, as listed by the command line front end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZooEntry {
    pub name: &'static str,
    pub family: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

/// Built-in potentials, densities and profiles, in a fixed order.
pub fn zoo() -> Vec<ZooEntry> {
    let e = |family, name, params, summary| ZooEntry { name, family, params, summary };
    vec![
        e("potential", "power-bond", "c: real, p: real, q: real", "c |y|^p / |x|^q, degree p - q"),
        e("potential", "anisotropic-control", "c: real", "c x1^2 |y|^2 / |x|^4, not isotropic"),
        e("potential", "sum", "terms: [potential]", "sum of bond densities"),
        e("density", "frobenius-squared", "a: real = 0, b: real = 1", "a + b |A|^2"),
        e(
            "density",
            "mooney-rivlin",
            "alpha: real >= 0, beta: real >= 0, g: profile",
            "alpha |A|^2 + beta |cof A|^2 + g(det A)",
        ),
        e("density", "neo-hookean", "alpha: real >= 0, g: profile", "alpha |A|^2 + g(det A)"),
        e(
            "density",
            "incompressible-mr",
            "alpha: real >= 0, beta: real >= 0",
            "alpha |A|^2 + beta |cof A|^2 if det A = 1, else inf",
        ),
        e("density", "profile-frobenius", "g: profile", "g(|A|^2)"),
        e("density", "profile-cof", "g: profile", "g(|cof A|)"),
        e("density", "profile-det", "g: profile", "g(det A)"),
        e("profile", "power", "coef: real = 1, exponent: real", "coef t^exponent"),
        e("profile", "affine-in-square", "a: real, b: real", "a + b t^2"),
        e("profile", "well", "coef: real = 1", "coef (t - 1)^2"),
        e("profile", "indicator", "", "0 at t = 1, inf elsewhere"),
    ]
}
