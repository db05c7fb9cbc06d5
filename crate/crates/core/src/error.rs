use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("small cell {index} centered at ({x:.1}, {y:.1}) lies outside the macro coverage of radius {radius}")]
    SmallCellOutsideMacro { index: usize, x: f64, y: f64, radius: f64 },

    #[error("could not place {wanted} small cells with separation {separation} m inside radius {radius} m")]
    SmallCellPlacement { wanted: usize, separation: f64, radius: f64 },

    #[error("station list is empty")]
    NoStations,

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("packet arrived at subframe {arrival}, after the query subframe {now}")]
    PacketFromFuture { arrival: u64, now: u64 },

    #[error("cannot select an action from an empty Q-value list")]
    EmptyActionSet,

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("requested {requested} samples from a replay memory holding {available}")]
    InsufficientSamples { requested: usize, available: usize },

    #[error("minibatch is empty")]
    EmptyMinibatch,

    #[error("action codebook of size {size} exceeds the cap of {cap}")]
    CodebookTooLarge { size: u128, cap: usize },

    #[error("codebook needs at least one device and one group (devices={devices}, groups={groups})")]
    EmptyCodebook { devices: usize, groups: usize },

    #[error("reward trace is empty")]
    EmptyTrace,

    #[error("no reports to aggregate")]
    NoReports,

    #[error("config parse error: {0}")]
    ConfigSyntax(String),

    #[error("invalid value for {field}: {reason}")]
    ConfigRange { field: String, reason: String },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn range(field: &str, reason: impl Into<String>) -> Self {
        Error::ConfigRange {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
