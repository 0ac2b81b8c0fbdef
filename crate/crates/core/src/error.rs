use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("payload holds {actual} bytes but dims require {expected}")]
    PayloadSize { expected: usize, actual: usize },

    /// Indices are 1-based, matching how layers, heads and rows are reported to users.
    #[error("row (l={layer},h={head},i={row}) sums to {sum}, outside 1 ± {tolerance}")]
    RowSum {
        layer: usize,
        head: usize,
        row: usize,
        sum: f64,
        tolerance: f64,
    },

    #[error("non-zero weight {value} above the diagonal at (l={layer},h={head},i={row},j={col})")]
    UpperTriangle {
        layer: usize,
        head: usize,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("invalid dimensions: {0}")]
    Dims(String),

    #[error("negative or non-finite entry {value} at ({row},{col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("token spans leave a gap at byte offset {0}")]
    SpanGap(usize),

    #[error("token spans overlap at byte offset {0}")]
    SpanOverlap(usize),

    #[error("span [{start},{end}) extends beyond prompt length {len}")]
    SpanBeyondEnd { start: usize, end: usize, len: usize },

    #[error("invalid span [{start},{end}): {reason}")]
    InvalidSpan {
        start: usize,
        end: usize,
        reason: &'static str,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no scroll state before fixation at t={0} ms")]
    MissingScrollState(f64),

    #[error("inadmissible event pair: t_j={t_j} s precedes end of first event {end_i} s")]
    InadmissiblePair { t_j: f64, end_i: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
