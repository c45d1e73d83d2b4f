use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("masses must be positive and finite, got ({m1}, {m2})")]
    InvalidMasses { m1: f64, m2: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("box too small: radius must be at least 1, got {0}")]
    BoxTooSmall(usize),

    #[error("undecidable support: potential has neither finite support nor a closed-form support rule")]
    UndecidableSupport,

    #[error("principle not implemented for indefinite v")]
    IndefinitePotential,

    #[error("spectral parameter z = {z} lies inside the band [{band_min}, {band_max}]")]
    ZInsideBand { z: f64, band_min: f64, band_max: f64 },

    #[error("counting threshold degenerate; perturb z (eigenvalue {eigenvalue} within 1e-10 of 1)")]
    DegenerateThreshold { eigenvalue: f64 },

    #[error("eigensolver did not converge within {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence { iterations: usize, best_residual: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix of size {size} exceeds the dense eigensolver limit {limit}")]
    TooLargeForDense { size: usize, limit: usize },

    #[error("decomposition requires A(k)=0")]
    NondegenerateBand,

    #[error("hypothesis uncertified: {0}")]
    HypothesisUncertified(String),

    #[error("no closed form; use spectral-engine ({0})")]
    NoClosedForm(String),

    #[error("operator is already phase-gauged")]
    AlreadyGauged,

    #[error("periodic wrap ill-defined for potentials with infinite support")]
    InfiniteSupport,

    #[error("potential support not contained in the dual box of the momentum grid")]
    SupportOutsideGrid,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
