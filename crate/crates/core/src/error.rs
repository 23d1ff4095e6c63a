use std::fmt;

/// Position of a token inside HQL source text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}:{}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("already exists: {0}")]
    AlreadyExists(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("syntax error at {position} near '{token}': {message}")]
    Syntax {
        position: Position,
        token: String,
        message: String,
    },

    #[error("unsupported at {position}: {keyword}")]
    UnsupportedStatement { position: Position, keyword: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("execution error in {vertex}: {message}")]
    Execution { vertex: String, message: String },

    #[error("write error: {0}")]
    Write(String),

    #[error("invalid option {key}={value}: {message}")]
    InvalidOption {
        key: String,
        value: String,
        message: String,
    },

    #[error("checksum mismatch for query: {0}")]
    ChecksumMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn execution(vertex: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Execution {
            vertex: vertex.into(),
            message: message.into(),
        }
    }

    /// Source position, for errors raised by the HQL front end.
    pub fn position(&self) -> Option<Position> {
        match self {
            Error::Syntax { position, .. } | Error::UnsupportedStatement { position, .. } => {
                Some(*position)
            }
            _ => None,
        }
    }
}
