use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported matrix dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Kraus branch weights vanished at t = {time} (p+ + p- = {total:.3e}); state:\n{state}")]
    DegenerateStep {
        time: f64,
        total: f64,
        state: String,
    },

    #[error("Born probabilities sum to {0} (deviation above 1e-6)")]
    ProbabilityDeviation(f64),

    #[error("sample ({x}, {y}) lies outside the histogram plane")]
    SampleOutOfRange { x: f64, y: f64 },

    #[error("trajectory has no sample at the end of S_z window {window} (t = {time})")]
    MissingWindowSample { window: usize, time: f64 },

    #[error("ensemble size must be positive")]
    EmptyEnsemble,
}
