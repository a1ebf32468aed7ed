use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: classifier expects {expected} features, data has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("enumerated classifier is bound to a different dataset")]
    ForeignDataset,

    #[error("provider index {index} out of range for {n} providers")]
    ProviderOutOfRange { index: usize, n: usize },

    #[error("{n} providers exceeds the supported limit of {limit}")]
    TooManyProviders { n: usize, limit: usize },

    #[error("menu is empty")]
    EmptyMenu,

    #[error("search space of {size} profiles exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("inconsistent 2x2 game: {0}")]
    InconsistentGame(String),

    #[error("welfare is zero, concentration is undefined")]
    ZeroWelfare,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("objective became non-finite at iteration {iteration} (learning rate too large?)")]
    NonFiniteObjective { iteration: usize },

    #[error("learner kind mismatch: {0}")]
    KindMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("provider {provider} failed in round {round}: {source}")]
    Learner {
        provider: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),
}
