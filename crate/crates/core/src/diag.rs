use std::fmt;
use std::path::PathBuf;

/// Source position attached to every statement.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Location {
    pub file: String,
    pub line: usize,
}

impl Location {
    pub fn new(file: impl Into<String>, line: usize) -> Self {
        Location { file: file.into(), line }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub loc: Location,
    pub message: String,
}

impl Diagnostic {
    pub fn new(loc: Location, message: impl Into<String>) -> Self {
        Diagnostic { loc, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&diagnose(&self.message, &self.loc.file, self.loc.line))
    }
}

/// `<file> Line <n> --> <message>`
pub fn diagnose(message: &str, file: &str, line: usize) -> String {
    format!("{file} Line {line} --> {message}")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Preprocess(Diagnostic),
    #[error("{}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Compile { diagnostics: Vec<Diagnostic>, summary: String },
    #[error("{0}")]
    Runtime(Diagnostic),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no .end")]
    NoEnd,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn message_shape() {
        assert_eq!(
            diagnose("Illegal position for operator: ^10", "ex1.frm", 3),
            "ex1.frm Line 3 --> Illegal position for operator: ^10"
        );
        let d = Diagnostic::new(Location::new("a.frm", 12), "anything");
        assert_eq!(d.to_string(), "a.frm Line 12 --> anything");
    }
}
