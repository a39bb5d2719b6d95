use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    /// A quantity that must be non-negative came out clearly negative.
    #[error("internal consistency: {0}")]
    Consistency(String),

    /// The target law does not have the state prior as its first marginal.
    #[error("wrong marginal: max deviation {max_dev:e} from the state prior")]
    WrongMarginal { max_dev: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
