//! Lattice rank-one convexification and convexity probes.
//!
//! The rank-one convex envelope `f^{rc}` is an upper bound for the
//! quasiconvex envelope and coincides with `f` whenever `f` is already
//! quasiconvex. Reports treat `f^{rc} = f` on the lattice as numerical
//! evidence of that, not as a proof.

mod envelope;
mod lattice;
mod probe;

pub use envelope::{
    convexify_along, convexify_values, rank_one_convexify, rank_one_directions, EnvelopeOptions, EnvelopeResult,
    EnvelopeRow,
};
pub use lattice::{LatticeMode, MatrixLattice, MAX_LATTICE_POINTS};
pub use probe::{jensen_gap, strict_polyconvexity_probe, PolyconvexityReport, PROBE_TOLERANCE};
