use thiserror::Error;

/// Errors produced anywhere in the correlated-RB pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid Pauli string {0:?}")]
    PauliParse(String),

    #[error("unsupported subsystem size {0} (only 1- and 2-qubit Cliffords are supported)")]
    UnsupportedSize(usize),

    #[error("Clifford size mismatch: {0} vs {1} qubits")]
    SizeMismatch(usize, usize),

    #[error("unphysical device: {0}")]
    Physicality(String),

    #[error("gate layout error: {0}")]
    Layout(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("readout calibration failed: condition number {cond:.3e} exceeds {limit:.1e}")]
    Calibration { cond: f64, limit: f64 },

    #[error("epsilon inversion did not converge (best residual {residual:.3e})")]
    FitFailure { residual: f64 },

    #[error("crosstalk metric optimization failed (best value {best:.3e})")]
    Metric { best: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by invalid input rather than by a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Json(_)
                | Error::Partition(_)
                | Error::PauliParse(_)
                | Error::UnsupportedSize(_)
                | Error::Physicality(_)
        )
    }
}
