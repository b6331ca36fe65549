//! Crate-wide error type and result alias.

use std::path::PathBuf;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library and the command-line tool.
///
/// The process exit code is derived from the variant: configuration
/// problems exit with 1, numerical or I/O failures with 2. Partial scan
/// completion is not an error (the scan carries per-point failure records)
/// and maps to exit code 3 in the driver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated an operation precondition (bad dimension, empty
    /// input, non-finite value, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration file problem. `line` is 1-based when the offending
    /// line is known.
    #[error("config error{}: {message}", line_suffix(.line))]
    Config {
        /// 1-based line number in the config file, when known.
        line: Option<u32>,
        /// Human-readable description naming the offending key or value.
        message: String,
    },

    /// A numerical routine failed to converge or produced an unusable
    /// result. The message carries matrix diagnostics where available.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An index outside the current window sits within the resonance guard
    /// of the target energy; the caller must widen the window to absorb it.
    #[error("resonance guard violated by basis index {index}")]
    Resonance {
        /// Offending basis index.
        index: usize,
    },

    /// Filesystem failure, with the path that failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        /// Path of the file or directory involved.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },

    /// A cache entry exists but fails its checksum or header validation.
    /// Callers treat this as a miss and recompute.
    #[error("corrupt cache entry at {path}: {reason}")]
    CacheCorrupt {
        /// Path of the corrupt entry.
        path: PathBuf,
        /// What failed (magic, version, checksum, truncation).
        reason: String,
    },

    /// A deviation-minimum location was requested but the curve keeps
    /// decreasing through the end of the grid.
    #[error("minimum of {curve} not bracketed by the scan grid")]
    UnbracketedMinimum {
        /// Which curve ("Delta_f" or "Delta_p").
        curve: &'static str,
    },
}

fn line_suffix(line: &Option<u32>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

impl Error {
    /// Exit code for the command-line driver: 1 for configuration errors,
    /// 2 for everything else that aborts a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidInput(_) => 1,
            _ => 2,
        }
    }

    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
