use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lattice is coarser than the grid ({0}); use frame_reconstruct with a dual window")]
    CoarseLattice(String),

    #[error("not a frame: lower bound {lower:e} is below 1e-10 times upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },

    #[error("insufficient radial shells: {found} populated, {required} required")]
    InsufficientShells { found: usize, required: usize },

    #[error("type-I representation unavailable: |det A| = {det:e}")]
    TypeIUnavailable { det: f64 },

    #[error("truncation insufficient: tail bound {tail:e} >= 1 at order {order}")]
    TruncationInsufficient { tail: f64, order: usize },

    #[error("perturbation kernel is not Hermitian (defect {defect:e})")]
    NonHermitian { defect: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
