use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a byte payload could not be decoded into points or labels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("payload of {len} bytes is not a multiple of the {record_size}-byte record size; trailing record starts at offset {offset}")]
    Truncated {
        len: usize,
        record_size: usize,
        offset: usize,
    },
    #[error("non-finite value in point record at offset {offset}")]
    NonFinite { offset: usize },
}

impl DecodeError {
    /// Byte offset of the offending record.
    pub fn offset(&self) -> usize {
        match *self {
            DecodeError::Truncated { offset, .. } | DecodeError::NonFinite { offset } => offset,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sector: {0}")]
    InvalidSector(String),

    #[error("sector width {0} rad is outside [0, 2π]")]
    InvalidSectorWidth(f64),

    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid scale range [{lo}, {hi}]; need 0 < lo <= hi")]
    InvalidScaleRange { lo: f64, hi: f64 },

    #[error("length mismatch: {what} has {left} entries but {right} were expected")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: DecodeError,
    },

    #[error("scan {} has {points} points but label file {} has {labels} entries", scan.display(), label.display())]
    CountMismatch {
        scan: PathBuf,
        label: PathBuf,
        points: usize,
        labels: usize,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("pairing needs at least 2 scans, dataset has {0}")]
    TooFewScans(usize),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
