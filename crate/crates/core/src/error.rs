use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing directory {}", .0.display())]
    MissingDirectory(PathBuf),

    #[error("no decodable frames in {}", .0.display())]
    EmptyDirectory(PathBuf),

    #[error("frame {} is {got_w}x{got_h}, expected {want_w}x{want_h}", .path.display())]
    FrameDimensions {
        path: PathBuf,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("cannot decode frame {}: {reason}", .path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("cannot write {}: {source}", .path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("io error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value encountered: {0}")]
    Divergence(String),

    #[error("hidden-state store has no entry for video {video} frame {index}")]
    MissingStoreEntry { video: usize, index: i64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("csv {}:{line}: {reason}", .path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        reason: String,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable category, used by the CLI's one-line error format.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::MissingDirectory(_) => "missing-directory",
            Error::EmptyDirectory(_) => "empty-directory",
            Error::FrameDimensions { .. } => "frame-dimensions",
            Error::Decode { .. } => "decode",
            Error::Write { .. } => "write",
            Error::Io { .. } => "io",
            Error::Divergence(_) => "divergence",
            Error::MissingStoreEntry { .. } => "missing-store-entry",
            Error::Checkpoint(_) => "checkpoint",
            Error::Config(_) => "config",
            Error::Csv { .. } => "csv",
        }
    }
}
