use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("degenerate spectrum: eigenvalues {first} and {second} coincide within tolerance")]
    DegenerateSpectrum { first: f64, second: f64 },

    #[error("frequency response at n = {index} is too close to zero ({value:e})")]
    NearZeroResponse { index: usize, value: f64 },

    #[error("nonpositive variance at n = {index} ({value:e})")]
    NonpositiveVariance { index: usize, value: f64 },

    #[error("vertex {0} has no incident edge in the source graph")]
    IsolatedVertex(usize),

    #[error("component {0} has no vertices")]
    EmptyComponent(usize),

    #[error("empty signal ensemble")]
    EmptyEnsemble,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by the filesystem rather than by the inputs' content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
