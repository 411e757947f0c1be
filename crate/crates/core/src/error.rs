use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid FGRID data at byte offset {offset}: {reason}")]
    Fgrid { offset: usize, reason: String },
    #[error("cannot decode image {path}: {reason}")]
    Image { path: PathBuf, reason: String },
    #[error("unsupported bit depth in {path}: {color_type}")]
    UnsupportedBitDepth { path: PathBuf, color_type: String },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("template ({t_rows}x{t_cols}) larger than image ({i_rows}x{i_cols})")]
    TemplateTooLarge {
        t_rows: usize,
        t_cols: usize,
        i_rows: usize,
        i_cols: usize,
    },
    #[error("channel count mismatch: image has {image}, template has {template}, expected 3")]
    ChannelMismatch { image: usize, template: usize },
    #[error("template required for trial {0}")]
    TemplateRequired(String),
    #[error("map file not found: {0}")]
    MissingMap(PathBuf),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("empty scanpath")]
    EmptyScanpath,
    #[error("degenerate scanpath: {0} fixation(s), at least 2 required")]
    DegenerateScanpath(usize),
    #[error("search space exhausted")]
    SearchExhausted,
    #[error("empty input")]
    EmptyInput,
    #[error("curve has {0} point(s), at least 2 required")]
    CurveTooShort(usize),
    #[error("correlation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance on one axis")]
    ZeroVariance,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
