use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("unsupported quadrature order {0}")]
    UnsupportedOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bond potential evaluated at zero reference offset")]
    ZeroOffset,

    #[error("value outside the extended reals (NaN or -inf): {0}")]
    NotExtendedReal(String),

    #[error("no finite blow-up limit at beta = {beta}: {detail}")]
    NoBlowup { beta: f64, detail: String },

    #[error("not asymptotically homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("homogeneity degree mismatch: declared {declared}, requested {requested}")]
    BetaMismatch { declared: f64, requested: f64 },

    #[error("indeterminate form inf - inf")]
    Indeterminate,

    #[error("measure barycenter or mass mismatch: {0}")]
    BarycenterMismatch(String),

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
