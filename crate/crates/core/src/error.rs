use thiserror::Error;

/// Failures raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid quench spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A quasimomentum landed exactly on a gap zero, where the Bogoliubov angle is undefined.
    #[error("degenerate mode at k = {k}: single-particle gap vanishes")]
    DegenerateMode { k: f64 },

    /// Two eigenvalues of a generic Hamiltonian are closer than the degeneracy tolerance.
    #[error("near-degenerate spectrum: levels {i} and {j} are {gap:e} apart")]
    Degeneracy { i: usize, j: usize, gap: f64 },

    #[error("numeric accuracy not reached: {0}")]
    NumericAccuracy(String),

    /// The requested grid does not carry the full probability mass.
    #[error("grid too narrow: captured mass {mass}")]
    GridTooNarrow { mass: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
