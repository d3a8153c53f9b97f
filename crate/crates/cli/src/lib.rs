//! Batch front end for `perilimit`: config in, `summary.json` and
//! `detail.csv` out, verdict in the exit code.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;

pub use config::{ConfigError, RunConfig, Task};
pub use run::{run, Outcome, RunError, Status};

/// Exit code for an unusable config.
pub const EXIT_CONFIG: u8 = 64;
/// Exit code for a failed computation.
pub const EXIT_EXECUTION: u8 = 1;
