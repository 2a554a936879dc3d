use thiserror::Error;

/// Errors surfaced by the simulation and density-evaluation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time must be strictly positive, got {0}")]
    NonPositiveTime(f64),
    #[error("kernel order {order} outside configured bound |k| <= {bound}")]
    OrderOutOfRange { order: i64, bound: u32 },
    #[error("kernel indices must satisfy i, j >= 1, got i={i}, j={j}")]
    BadKernelIndex { i: usize, j: usize },
    #[error("operation does not support process kind {0}")]
    UnsupportedKind(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("configuration violates the {0} chamber constraints")]
    InvalidConfig(&'static str),
    #[error("coordinates must be ordered and nonnegative")]
    UnorderedInput,
    #[error("start point lies on the chamber boundary (h = 0); use the entrance law")]
    BoundaryStart,
    #[error("matrix size {0} exceeds supported bound {1}")]
    MatrixTooLarge(usize, usize),
    #[error("entrance-law extrapolation did not converge (estimates differ by {rel_diff:.3e})")]
    ExtrapolationDiverged { rel_diff: f64 },
    #[error("substep halving fell below dt_min = {dt_min:.3e} at t = {t:.6}")]
    StiffStep { dt_min: f64, t: f64 },
    #[error("rejection sampler acceptance rate below {min_rate:.1e} after {attempts} attempts")]
    EnvelopeFailure { min_rate: f64, attempts: u64 },
    #[error("lattice too large for exhaustive oracle (n={n}, steps={steps})")]
    CapacityExceeded { n: usize, steps: usize },
    #[error("anchor has zero-length intervals (tied coordinates)")]
    DegenerateAnchor,
    #[error("sample set must be nonempty")]
    EmptySample,
    #[error("reference cdf is not monotone on the sample points")]
    NonMonotoneCdf,
    #[error("row index {0} out of range for ensemble with {1} rows")]
    BadRow(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
