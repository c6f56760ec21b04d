//! Exit codes, error reports and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use fracwave::report::{to_json, SCHEMA_VERSION};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("verification failed: {0}")]
    Fail(String),
    #[error("{0}")]
    Divergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<fracwave::Error> for CliError {
    fn from(e: fracwave::Error) -> Self {
        match e {
            fracwave::Error::Divergence { .. } | fracwave::Error::BlowUp { .. } => Self::Divergence(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl CliError {
    /// 1 validation (and i/o), 2 verification FAIL, 3 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Io(_) => 1,
            Self::Fail(_) => 2,
            Self::Divergence(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Validation(_) => "validation",
            Self::Fail(_) => "verification_failed",
            Self::Divergence(_) => "divergence",
            Self::Io(_) => "io",
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema_version: u32,
    command: &'a str,
    kind: &'a str,
    message: String,
    exit_code: i32,
}

pub fn error_json(command: &str, error: &CliError) -> String {
    let report = ErrorReport {
        schema_version: SCHEMA_VERSION,
        command,
        kind: error.kind(),
        message: error.to_string(),
        exit_code: error.exit_code(),
    };
    to_json(&report).expect("error report serializes")
}

/// Output directory; files are written to a temporary sibling and renamed.
pub struct OutDir {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.flush()?;
        tmp.persist(&path).map_err(|e| CliError::Io(format!("cannot write {}: {}", path.display(), e.error)))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = to_json(value).map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &text)
    }
}
