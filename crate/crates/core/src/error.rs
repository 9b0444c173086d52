use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch on {axis}: expected {expected}, got {actual} ({context})")]
    Dimension {
        axis: &'static str,
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("integrity check failed: stored crc {stored:#010x}, computed {computed:#010x}")]
    Integrity { stored: u32, computed: u32 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("frame {frame}: {message}")]
    Frame { frame: u64, message: String },

    #[error("input order error: {0}")]
    InputOrder(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("numeric failure at epoch {epoch}, batch {batch}: loss {loss} or its gradient is not finite")]
    Numeric { epoch: usize, batch: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(axis: &'static str, expected: usize, actual: usize, context: impl Into<String>) -> Self {
        Error::Dimension {
            axis,
            expected,
            actual,
            context: context.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
