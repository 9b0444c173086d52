use std::path::{Path, PathBuf};

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or a missing input source.
    #[error("usage: {0}")]
    Usage(String),

    /// Inputs that are readable but inconsistent.
    #[error("validation: {0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    AtPath { path: PathBuf, source: vigil::Error },

    #[error(transparent)]
    Engine(#[from] vigil::Error),
}

fn engine_code(e: &vigil::Error) -> i32 {
    use vigil::Error::*;
    match e {
        Io(_) | Format { .. } | Integrity { .. } | Unsupported(_) => EXIT_IO,
        Numeric { .. } => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::AtPath { source, .. } | CliError::Engine(source) => engine_code(source),
        }
    }
}

/// Attaches the offending path to an error.
pub trait AtPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> AtPath<T> for Result<T, vigil::Error> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|source| CliError::AtPath {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl<T> AtPath<T> for Result<T, std::io::Error> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
