use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layer `{layer}`: {reason}")]
    InvalidLayer { layer: String, reason: String },

    #[error("layer `{layer}`: channels_per_group {group} does not divide {channels} channels")]
    Divisibility {
        layer: String,
        group: u32,
        channels: u32,
    },

    #[error("network has no layers")]
    EmptyNetwork,

    #[error("layers `{prev}` -> `{next}` are not shape-compatible: {detail}")]
    ShapeMismatch {
        prev: String,
        next: String,
        detail: String,
    },

    #[error("invalid {name}: {value}")]
    InvalidMultiplier { name: &'static str, value: f64 },

    #[error("invalid array configuration: {0}")]
    InvalidArray(String),

    #[error("cannot average utilization over an empty list")]
    EmptyUtilization,

    #[error("layer `{0}` performs MACs but maps to zero active PEs")]
    Unmappable(String),

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("no sweep rows match {0}")]
    NoMatchingRows(String),

    #[error("comparison variant missing: {0}")]
    MissingVariant(String),

    #[error("field `{path}`: {source}")]
    Field {
        path: String,
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
