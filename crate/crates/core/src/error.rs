use std::fmt;
use std::io;

/// A syntax problem on one N-Triples line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number, 0 when the line was parsed in isolation.
    pub line: u64,
    /// 1-based byte column.
    pub column: usize,
    pub reason: String,
}

impl ParseError {
    pub(crate) fn new(column: usize, reason: impl Into<String>) -> Self {
        ParseError { line: 0, column, reason: reason.into() }
    }

    pub(crate) fn at_line(mut self, line: u64) -> Self {
        self.line = line;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.reason)
        } else {
            write!(f, "column {}: {}", self.column, self.reason)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed N-Triples: {0}")]
    MalformedLine(ParseError),
    #[error("input not strictly sorted: {0}")]
    NotSorted(String),
    #[error("duplicate triple {0}")]
    DuplicateTriple(String),
    #[error("subject ids not contiguous: expected {expected}, found {found}")]
    SubjectGap { expected: u64, found: u64 },
    #[error("id {id} out of range 1..={max}")]
    IdOutOfRange { id: u64, max: u64 },
    #[error("bad magic number")]
    BadMagic,
    #[error("unsupported format version {0:?}")]
    VersionUnsupported(String),
    #[error("checksum mismatch in {0} section")]
    ChecksumMismatch(&'static str),
    #[error("file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("mapping incomplete: {0}")]
    MappingIncomplete(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::MalformedLine(e)
    }
}
