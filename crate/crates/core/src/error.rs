use thiserror::Error;

/// Errors raised by the relative-information computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the model's domain, or on a boundary where the
    /// likelihood is `-inf`.
    #[error("parameter outside model domain: {0}")]
    Domain(String),

    /// The observed-data MLE sits on the boundary of the parameter space.
    #[error("observed-data MLE on parameter boundary: {0}")]
    Boundary(String),

    /// The observed lod is zero, so the ratio measure is undefined.
    #[error("relative information undefined: observed lod is zero")]
    UndefinedMeasure,

    /// The Monte Carlo denominator estimate is not strictly positive.
    #[error("unstable Monte Carlo denominator: mean {mean}, standard error {standard_error}, {n_effective} effective draws")]
    Instability {
        mean: f64,
        standard_error: f64,
        n_effective: usize,
    },

    /// Too few usable draws to form an estimate.
    #[error("estimation failed: {n_effective} finite draws out of {n_draws}")]
    EstimationFailure { n_effective: usize, n_draws: usize },

    /// The requested operation needs model structure that is not declared.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Exact enumeration was requested beyond the configured cap.
    #[error("exact oracle unavailable: {n_missing} missing trials exceeds cap {cap}")]
    OracleUnavailable { n_missing: u64, cap: u64 },

    /// Input data are invalid for the requested operation.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Data carry no information for the requested fit.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// The partial likelihood is monotone; the MLE diverges.
    #[error("monotone likelihood: coefficient estimate diverges ({0})")]
    Separation(String),

    /// The observed information matrix is singular.
    #[error("singular information matrix: {0}")]
    RankDeficient(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Validation failures (bad input or configuration) as opposed to numerical ones.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::InvalidData(_) | Error::Config(_) | Error::Unsupported(_)
        )
    }
}
