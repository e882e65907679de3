use std::fmt;

use thiserror::Error;

use super::ast::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Lex,
    Parse,
    NameResolution,
    Type,
    Range,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Lex => "lex",
            ErrorKind::Parse => "parse",
            ErrorKind::NameResolution => "name-resolution",
            ErrorKind::Type => "type",
            ErrorKind::Range => "range",
        })
    }
}

/// A located diagnostic for malformed model source.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind} error: {message}")]
pub struct SourceError {
    pub kind: ErrorKind,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl SourceError {
    pub fn new(kind: ErrorKind, loc: Loc, message: impl Into<String>) -> Self {
        SourceError {
            kind,
            line: loc.line,
            column: loc.col,
            message: message.into(),
        }
    }

    pub fn position(&self) -> (u32, u32) {
        (self.line, self.column)
    }
}
