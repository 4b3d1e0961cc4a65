use std::io;
use std::path::PathBuf;

use lagoon_core::forcing::ForcingError;
use lagoon_core::mesh::MeshError;

/// Exit status for a completed command.
pub const EXIT_OK: i32 = 0;
/// Exit status for any fault: bad input, IO failure, solver breakdown.
pub const EXIT_FAULT: i32 = 1;
/// Exit status when the stability gate refuses the configured step.
pub const EXIT_GATE: i32 = 2;

/// Location of a problem inside a text file.
#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub path: String,
    pub line: usize,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.path, self.line)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("cannot read {what} {path}: {source}")]
    Read {
        what: &'static str,
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{at}: {message}")]
    Parse { at: Location, message: String },

    #[error("mesh {path}: {source}")]
    Mesh {
        path: PathBuf,
        #[source]
        source: MeshError,
    },

    #[error("forcing {path}: {source}")]
    Forcing {
        path: PathBuf,
        #[source]
        source: ForcingError,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Sim(#[from] lagoon_core::Error),
}

impl AppError {
    pub fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse {
            at: Location {
                path: path.to_string(),
                line,
            },
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Sim(e) if e.is_gate_violation() => EXIT_GATE,
            _ => EXIT_FAULT,
        }
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn read_text(path: &std::path::Path, what: &'static str) -> Result<String, AppError> {
    std::fs::read_to_string(path).map_err(|source| AppError::Read {
        what,
        path: path.to_path_buf(),
        source,
    })
}
