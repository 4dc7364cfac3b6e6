use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },

    #[error("class index {value} at ({x}, {y}) is out of range for {num_classes} classes")]
    ClassOutOfRange {
        value: u8,
        x: u32,
        y: u32,
        num_classes: usize,
    },

    #[error("class count mismatch: {0} vs {1}")]
    ClassCountMismatch(usize, usize),

    #[error("no class has a nonzero union")]
    EmptyMatrix,

    #[error("vote stack is empty")]
    EmptyStack,

    #[error("member `{member}` does not match the stack: {reason}")]
    MemberShapeMismatch { member: String, reason: String },

    #[error("invalid contrast factor {0}: must be > 0")]
    InvalidFactor(f64),

    #[error("expected {expected} channel(s), got {actual}")]
    ChannelMismatch { expected: u8, actual: u8 },

    #[error("buffer length {actual} does not match {expected} for the stated shape")]
    BufferLength { expected: usize, actual: usize },

    #[error("invalid class set: {0}")]
    InvalidClassSet(String),

    #[error("invalid augmentation spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: duplicate record ({scene_id}, {frame_id})")]
    DuplicateRecord {
        path: PathBuf,
        line: usize,
        scene_id: String,
        frame_id: String,
    },

    #[error("{path}:{line}: unknown split `{value}`")]
    UnknownSplit {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("`{name}` has no counterpart in {missing_in}")]
    MissingCounterpart { name: String, missing_in: PathBuf },

    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Context {
        path: PathBuf,
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

    /// Attaches the file that produced this error.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::Decode { .. } | Error::Parse { .. }) => e,
            other => Error::Context {
                path: path.into(),
                source: Box::new(other),
            },
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Context { source, .. } => source.is_io(),
            _ => false,
        }
    }

    /// Strips file context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}
