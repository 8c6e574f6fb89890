use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid orbital elements: {0}")]
    Domain(String),

    #[error("architecture mismatch: {0}")]
    Architecture(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("{path}: unsupported format version {found} (expected {expected})")]
    Version {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: CRC mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Crc {
        path: PathBuf,
        stored: u32,
        computed: u32,
    },

    #[error("{path}: truncated file ({detail})")]
    Truncated { path: PathBuf, detail: String },

    #[error("{path}: malformed file ({detail})")]
    Malformed { path: PathBuf, detail: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category used by the CLI for its error prefix
    /// and exit code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::Contract(_) | Error::Architecture(_) => "CONFIG",
            Error::BadMagic { .. }
            | Error::Version { .. }
            | Error::Crc { .. }
            | Error::Truncated { .. }
            | Error::Malformed { .. } => "DATA",
            Error::Numeric(_) | Error::Domain(_) | Error::Dimension { .. } => "NUMERIC",
            Error::Io { .. } | Error::Csv(_) => "IO",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "CONFIG" => 2,
            "DATA" => 3,
            "NUMERIC" => 4,
            _ => 5,
        }
    }
}
