use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // Geometry
    #[error("matrix is not orthonormal: residual {residual:e} exceeds tolerance {tol:e}")]
    NotOrthonormal { residual: f64, tol: f64 },
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("tangent vectors are based at different frames")]
    BaseMismatch,
    #[error("singular value decomposition did not converge")]
    SvdFailure,
    #[error("requested {requested} items but at most {max} are available")]
    CountTooLarge { requested: usize, max: usize },
    #[error("matrix is rank deficient (smallest/largest singular value ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    // Secants and objective
    #[error("vector has no component larger than the sign tolerance")]
    ZeroVector,
    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("secant set is empty")]
    EmptySecantSet,
    #[error("need at least {need} secants, got {have}")]
    TooFewSecants { have: usize, need: usize },

    // Optimizer
    #[error("manifold dimension must be nonnegative, got {0}")]
    NegativeDimension(i64),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // Classification
    #[error("class {label}: {source}")]
    Class {
        label: u32,
        #[source]
        source: Box<Error>,
    },
    #[error("no class models supplied")]
    NoModels,
    #[error("label {0} has no fitted model")]
    UnknownLabel(u32),
    #[error("test set is empty")]
    EmptyTestSet,

    // Files
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}, column {column}: cannot parse {text:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        text: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("image file has {images} entries but label file has {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("file is truncated: {0}")]
    TruncatedFile(String),
    #[error("unsupported model version {found:?}, expected {expected:?}")]
    VersionMismatch { expected: String, found: String },
    #[error("model frame is invalid: {0}")]
    CorruptFrame(Box<Error>),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a class label to an error raised while fitting or scoring that class.
    pub fn for_class(self, label: u32) -> Self {
        Error::Class {
            label,
            source: Box::new(self),
        }
    }

    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Class { source, .. } => source.kind(),
            Error::NotOrthonormal { .. }
            | Error::SvdFailure
            | Error::RankDeficient { .. }
            | Error::ZeroVector
            | Error::NotUnit { .. } => ErrorKind::Numerical,
            Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::NegativeDimension(_) => {
                ErrorKind::Usage
            }
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}
