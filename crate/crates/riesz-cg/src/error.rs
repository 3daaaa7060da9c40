//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong when building or operating on sampled
/// functions, solving systems, or moving data through files.
#[derive(Debug, Error)]
pub enum Error {
    /// A measure space must carry at least one strictly positive weight.
    #[error("measure space has no sample with positive weight")]
    EmptySpace,

    /// Measure weights are nonnegative by definition.
    #[error("negative weight {weight} at sample {index}")]
    NegativeWeight { index: usize, weight: f64 },

    /// Operands live on different measure spaces.
    #[error("operands are defined on different measure spaces")]
    SpaceMismatch,

    /// A sample value is NaN or infinite.
    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: usize, value: f64 },

    /// Wrong number of values for the underlying space or vector length.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Inversion requires a one-signed element; the listed positive-weight
    /// samples block both sign options.
    #[error("element is not one-signed, so not invertible (witness samples {samples:?})")]
    NotInvertible { samples: Vec<usize> },

    /// Square roots require strict positivity on every positive-weight sample.
    #[error("element is not strictly positive (witness samples {samples:?})")]
    NotStrictlyPositive { samples: Vec<usize> },

    /// The matrix fails the symmetry test on a positive-weight sample.
    #[error("matrix is not symmetric almost everywhere")]
    NotSymmetric,

    /// The matrix fails pointwise positive definiteness.
    #[error("matrix is not positive definite: {detail}")]
    NotPositiveDefinite { detail: String },

    /// Per-sample Jacobi diagonalization ran out of sweeps.
    #[error("eigendecomposition did not converge at sample {sample}")]
    EigenNoConvergence { sample: usize },

    /// The search-direction energy term vanished on positive measure, so the
    /// iteration cannot divide by it.
    #[error("direction energy p^T A p is not invertible (samples {samples:?})")]
    DenominatorNotInvertible { samples: Vec<usize> },

    /// Polynomial sup bounds need a valid interval.
    #[error("invalid interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },

    /// Condition numbers are at least one.
    #[error("condition number {kappa} is below 1")]
    BadKappa { kappa: f64 },

    /// The smallest eigenvalue over the space is not safely positive, so the
    /// condition number is undefined.
    #[error("spectrum touches zero: lambda_min = {lambda_min}")]
    SingularSpectrum { lambda_min: f64 },

    /// Problem generation received out-of-range parameters.
    #[error("bad generator parameters: {detail}")]
    BadParameters { detail: String },

    /// A per-sample coefficient matrix could not be factorized.
    #[error("numerically singular matrix at sample {sample}")]
    SingularSample { sample: usize },

    /// Solver output and oracle output do not describe the same problem.
    #[error("shape mismatch between solver trace and oracle: {detail}")]
    ShapeMismatch { detail: String },

    /// Underlying filesystem failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The file is not well-formed JSON.
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    /// The file parsed but violates a documented invariant.
    #[error("validation error on field `{field}`: {detail}")]
    Validation { field: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
