use thiserror::Error;

pub type Result<T> = std::result::Result<T, FloquetError>;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("parameter `{name}` out of domain: {reason}")]
    ParameterDomain { name: String, reason: String },

    #[error("harmonic cutoff M={requested} is smaller than the largest harmonic index {required}")]
    TruncationTooSmall { requested: usize, required: usize },

    #[error("found {found} of {expected} replica families; increase the harmonic cutoff (M={truncation})")]
    TooFewFamilies {
        found: usize,
        expected: usize,
        truncation: usize,
    },

    #[error("quasi-energies did not converge up to M={max_truncation} (last change {last_change:e})")]
    TruncationNotConverged {
        max_truncation: usize,
        last_change: f64,
    },

    #[error("unperturbed and perturbed solves used different cutoffs (M={unperturbed} vs M={perturbed})")]
    TruncationMismatch { unperturbed: usize, perturbed: usize },

    #[error("eigensolver failed on a {dim}x{dim} matrix (norm {norm:e}): {detail}")]
    EigenSolver { dim: usize, norm: f64, detail: String },

    #[error("propagator lost unitarity: |U^dag U - I| = {drift:e} exceeds {tolerance:e}")]
    UnitarityDrift { drift: f64, tolerance: f64 },

    #[error("trajectory is not periodic: endpoint mismatch {mismatch:e}")]
    NonPeriodic { mismatch: f64 },

    #[error("mode is not normalized (norm^2 = {0})")]
    Unnormalized(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
