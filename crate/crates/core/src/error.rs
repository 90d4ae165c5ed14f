use thiserror::Error;

/// Errors surfaced by the subsampling pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric overflow evaluating the variance function at point {point:?}")]
    NumericOverflow { point: Vec<f64> },

    #[error("separation detected while fitting the logistic model (coefficients diverging)")]
    Separation,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("grid would contain {candidates} candidates (budget {budget}); use MH design-space mode")]
    TooManyCandidates { candidates: usize, budget: usize },

    #[error("MH chain stalled: acceptance rate {rate:.6} over {proposals} proposals (bad proposal scale?)")]
    StalledChain { rate: f64, proposals: usize },

    #[error("no weighting of the candidate set yields a nonsingular information matrix")]
    InfeasibleDesign,

    #[error("reference design has criterion value 0")]
    InvalidReference,

    #[error("estimated design space is empty (all candidates classified as outliers)")]
    DesignSpaceEmpty,

    #[error("allocation shortfall: requested {requested} rows, only {available} available")]
    Shortfall { requested: usize, available: usize },

    #[error("at row {row}: {source}")]
    AtRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
