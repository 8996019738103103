use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {requested} exceeds the direction-number table maximum of {max}")]
    DimensionTooLarge { requested: usize, max: usize },

    #[error("block exponent {0} overflows the 32-bit sequence index")]
    BlockTooLarge(u32),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("factor index {factor} out of range for k = {k}")]
    FactorOutOfRange { factor: usize, k: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("empty point set")]
    EmptyPointSet,

    #[error("coordinate {0} lies outside the unit interval")]
    OutsideUnitCube(f64),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("zero output variance; indices are undefined")]
    ZeroVariance,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("missing evaluations for block {0}")]
    MissingBlock(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("budget: {0}")]
    Budget(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
