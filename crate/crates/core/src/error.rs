use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised anywhere in the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Tensor or matrix dimensions do not fit the operation.
    Shape(String),
    /// A configuration violates one of its invariants.
    Config(String),
    /// An index (class, position, token) is out of range.
    Index(String),
    /// A non-finite value showed up; `coordinate` names the offending entry when known.
    Numeric {
        coordinate: Option<usize>,
        message: String,
    },
    /// Caller supplied input that cannot be processed (empty corpus, empty sentence, ...).
    Input(String),
    /// Malformed annotated data. Lines and columns are 1-based.
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// A layer, side or representation is not present in a trace.
    Lookup(String),
    /// Training diverged.
    Training { epoch: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Index(m) => write!(f, "index error: {m}"),
            Error::Numeric {
                coordinate: Some(c),
                message,
            } => write!(f, "numeric error at coordinate {c}: {message}"),
            Error::Numeric {
                coordinate: None,
                message,
            } => write!(f, "numeric error: {message}"),
            Error::Input(m) => write!(f, "input error: {m}"),
            Error::Parse {
                line,
                column,
                message,
            } => write!(f, "parse error at line {line}, column {column}: {message}"),
            Error::Lookup(m) => write!(f, "lookup error: {m}"),
            Error::Training { epoch, message } => {
                write!(f, "training error in epoch {epoch}: {message}")
            }
        }
    }
}

impl core::error::Error for Error {}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
