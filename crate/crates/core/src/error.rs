use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the metric toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: relative defect {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("matrix is not symmetric: defect {defect:.3e}")]
    NotSymmetric { defect: f64 },

    #[error("matrix is not antisymmetric: defect {defect:.3e}")]
    NotAntisymmetric { defect: f64 },

    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),

    #[error("complex spectrum: eigenvalue #{index} = {value}{}", partner.map(|p| format!(" (conjugate partner #{p})")).unwrap_or_default())]
    ComplexSpectrum {
        index: usize,
        value: Complex64,
        partner: Option<usize>,
    },

    #[error("degenerate spectrum: eigenvalues #{first} = {first_value} and #{second} = {second_value} are closer than the separation threshold")]
    DegenerateSpectrum {
        first: usize,
        second: usize,
        first_value: Complex64,
        second_value: Complex64,
    },

    #[error("matrix is not positive definite: lambda_min = {lambda_min:.6e}")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("Dyson map is singular: smallest singular value {sigma_min:.3e}")]
    SingularOmega { sigma_min: f64 },

    #[error("diagonal conditions do not determine the B-family coordinates (rank {rank} < {n})")]
    SingularDiagonalSystem { rank: usize, n: usize },

    #[error("the (z, p) elimination subsystem is singular (determinant {det:.3e})")]
    DegenerateElimination { det: f64 },

    #[error("truncation dimension {n} is below the minimum {min}")]
    DimensionTooSmall { n: usize, min: usize },

    #[error("deformation strength {epsilon} outside the supported range |epsilon| <= {max}")]
    EpsilonOutOfRange { epsilon: f64, max: f64 },

    #[error("invalid tolerance {name} = {value}: must lie in (0, 1)")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
