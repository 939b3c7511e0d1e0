use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid radius law: {0}")]
    InvalidLaw(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("law has finite moments only below order {order}; this operation needs order > {needed}")]
    MomentTooLow { order: f64, needed: f64 },

    #[error("no renewal steps found")]
    NoRenewalsFound,

    #[error("enumeration budget exceeded: needs about {required:.3e} states, budget is {budget:.3e}")]
    BudgetExceeded { required: f64, budget: f64 },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
