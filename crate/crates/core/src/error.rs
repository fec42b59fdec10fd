use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scan file size {0} is not a multiple of 16 bytes")]
    SizeNotMultipleOf16(u64),

    #[error("label file size {0} is not a multiple of 4 bytes")]
    SizeNotMultipleOf4(u64),

    #[error("non-finite value in point {index}")]
    NonFinitePoint { index: usize },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("degenerate scene spec: {0}")]
    DegenerateSpec(String),

    #[error("provenance index {index} out of range for {len} clean labels")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("clean cloud is empty")]
    EmptyCleanCloud,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("beam ids missing or misaligned: {0}")]
    MissingBeamIds(String),

    #[error("degenerate point at index {index}: {reason}")]
    DegeneratePoint { index: usize, reason: &'static str },

    #[error("too few points for clustering: {points} usable zenith values for {k} beams")]
    TooFewPoints { points: usize, k: usize },

    #[error("beam count {beams} is not divisible by target {target}")]
    IndivisibleBeamCount { beams: usize, target: usize },

    #[error("no instances of the requested classes found in source scan")]
    NoInstancesFound,

    #[error("degenerate field of view: up {up} <= down {down}")]
    DegenerateFov { up: f64, down: f64 },

    #[error("degenerate bounds: {0}")]
    DegenerateBounds(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label value {label} outside the confusion matrix ({classes} classes)")]
    LabelOutOfRange { label: u32, classes: usize },

    #[error("no valid classes in ground truth")]
    NoValidClasses,

    #[error("empty score list")]
    EmptyList,

    #[error("expected {expected} corruption scores, got {got}")]
    WrongCorruptionCount { expected: usize, got: usize },

    #[error("clean score must be positive")]
    ZeroCleanScore,

    #[error("scan {scan_id}: {source}")]
    Scan {
        scan_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_scan(self, scan_id: &str) -> Self {
        Error::Scan {
            scan_id: scan_id.to_owned(),
            source: Box::new(self),
        }
    }
}
