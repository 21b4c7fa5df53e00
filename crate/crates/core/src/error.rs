//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("config encode error: {0}")]
    TomlEncode(#[from] toml::ser::Error),

    #[error("row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },

    #[error("csv header mismatch: expected [{expected}], found [{found}]")]
    SchemaMismatch { expected: String, found: String },

    #[error("unknown task id `{0}`")]
    UnknownTask(String),

    #[error("task `{0}` not present in the model roster")]
    TaskNotFound(String),

    #[error("weather feature `{feature}` has no observed values in {task}/{season}")]
    FeatureAllMissing {
        feature: &'static str,
        task: String,
        season: String,
    },

    #[error("weather feature `{0}` has zero variance")]
    ZeroVariance(&'static str),

    #[error("season label `{0}` is not a start year")]
    BadSeasonLabel(String),

    #[error("empty source task set")]
    EmptySourceSet,

    #[error("no supervised signal: no LTE-masked days and phenology weight is zero")]
    NoSupervisedSignal,

    #[error("no LTE samples available for evaluation")]
    NoLteSamples,

    #[error("{op} requires the {expected} model variant")]
    WrongVariant { op: &'static str, expected: &'static str },

    #[error("embedding dimension {found}, model expects {expected}")]
    EmbeddingDim { expected: usize, found: usize },

    #[error("weight vector length {weights} does not match task set length {entries}")]
    MisalignedWeights { entries: usize, weights: usize },

    #[error("task set is empty")]
    EmptyTaskSet,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{0}")]
    Other(String),
}
