//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Returned when a chain partition violates N_S + N_R <= N or a
    /// minimum-length requirement.
    #[error("invalid chain geometry: {0}")]
    InvalidChain(String),

    /// Returned when a vector or matrix dimension does not match the
    /// excitation-sector block it is applied to.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Returned when the symmetric eigensolver fails to converge.
    #[error("symmetric eigendecomposition did not converge (dim {dim})")]
    EigenFailure { dim: usize },

    /// Returned when the SVD of the transition matrix fails to converge.
    #[error("singular value decomposition did not converge ({rows}x{cols})")]
    SvdFailure { rows: usize, cols: usize },

    /// Returned when a time-optimization window is empty.
    #[error("empty time window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    /// Returned when a critical-length scan finds no feasible length at all.
    #[error("scan exhausted at N = {n_max} without any feasible length")]
    ScanExhausted { n_max: usize },

    /// Returned when a state is not normalized within tolerance.
    #[error("state not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    /// Returned when a requested eigenvalue triple is not a valid ordered
    /// two-qubit spectrum.
    #[error("invalid eigenvalue triple: {0}")]
    InvalidSpectrum(String),
}

pub type Result<T> = std::result::Result<T, Error>;
