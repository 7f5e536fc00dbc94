use thiserror::Error;

/// Errors produced by lattice construction, transforms, integration and the
/// reduced two-mode analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("disorder value {value} outside [{lo}, {hi}]")]
    DisorderOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("total energy is undefined for the non-Hamiltonian variant")]
    NonHamiltonian,

    #[error("operation requires the {required} variant")]
    WrongVariant { required: &'static str },

    #[error("state contains non-finite entries")]
    NonFiniteState,

    #[error("phase undefined: zero complex amplitude")]
    PhaseUndefined,

    #[error("point outside the well-defined region (P - delta <= 0)")]
    OutOfRegion,

    #[error("singular parameters: {0}")]
    Singular(String),

    #[error("zero or linearly dependent deviation vectors")]
    DegenerateDeviations,

    #[error("integration failed: {0}")]
    IntegrationFailed(String),

    #[error("trajectory blew up at t = {0}")]
    BlowUp(f64),

    #[error("no peaks found in series")]
    NoPeaks,

    #[error("no positive real root in scan range")]
    NoPositiveRoot,
}

pub type Result<T> = std::result::Result<T, Error>;
