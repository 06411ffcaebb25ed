use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("row {row} has {found} values, expected {expected}")]
    RowArity { row: usize, expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("feature names do not match the fitted set")]
    FeatureMismatch,

    #[error("quality score {0} is not an integer in [0, 10]")]
    InvalidQuality(f64),

    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("series needs at least two values")]
    TooShort,

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("class {class} has no rows")]
    EmptyClass { class: usize },

    #[error("class {class} has {count} rows, needs at least {needed}")]
    ClassTooSmall { class: usize, count: usize, needed: usize },

    #[error("counts sum to zero")]
    ZeroTotal,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown hyperparameter `{name}` for {family}; valid keys: {}", valid.join(", "))]
    UnknownHyperparameter {
        family: String,
        name: String,
        valid: Vec<String>,
    },

    #[error("training labels must contain both -1 and +1")]
    SingleLabel,

    #[error("grid axis `{0}` has no values")]
    EmptyAxis(String),

    #[error("fit failed for configuration {config}: {source}")]
    Tuning { config: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
