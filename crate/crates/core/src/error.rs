use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid radar grid: {0}")]
    InvalidGrid(String),

    #[error("invalid waveform parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("point {index} at ({r_bin}, {d_bin}, {a_bin}) lies outside the {grid} grid")]
    PointOutOfBounds {
        index: usize,
        r_bin: f64,
        d_bin: f64,
        a_bin: f64,
        grid: String,
    },

    #[error("degenerate geometry: range must be positive, got {0}")]
    DegenerateGeometry(f64),

    #[error("cube dimensions differ: {0} vs {1}")]
    DimensionMismatch(String, String),

    #[error("scene point set is empty")]
    EmptyScenePointSet,

    #[error("scene point ({0}, {1}, {2}) is outside the cube")]
    ScenePointOutOfBounds(usize, usize, usize),

    #[error("pad length {pad} is shorter than window length {window}")]
    PadTooShort { pad: usize, window: usize },

    #[error("insufficient isolated peaks: {0}")]
    InsufficientIsolatedPeaks(String),

    #[error("unknown actor id {id}; known ids: {known:?}")]
    UnknownActor { id: u64, known: Vec<u64> },

    #[error("need at least two images per set, got {0} and {1}")]
    TooFewImages(usize, usize),

    #[error("cube file: {0}")]
    CubeFormat(#[from] CubeFormatError),

    #[error("config {path}:{line}: {msg}")]
    Config { path: PathBuf, line: usize, msg: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failures specific to the binary cube format.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CubeFormatError {
    #[error("bad magic {0:?}, expected \"RADC\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("truncated header ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("NaN or infinite value at element {0}")]
    NonFiniteValue(usize),
    #[error("negative value at element {0}")]
    NegativeValue(usize),
    #[error("invalid dimensions {0}x{1}x{2}")]
    InvalidDims(u32, u32, u32),
}
