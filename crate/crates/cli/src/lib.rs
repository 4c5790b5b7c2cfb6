//! Command implementations behind the `nitrial` binary. Each command
//! returns `Result<_, CliError>`; the binary maps the error to its exit code.

pub mod analyze;
pub mod config;
pub mod report;
pub mod simulate;

use std::fmt;
use std::path::Path;

pub use analyze::{cmd_analyze, read_dataset, AnalysisConfigFile, AnalysisOutput, AnalysisRow, LabelledPrior};
pub use config::{resolve_rule, StudyConfigFile};
pub use report::{cmd_report, ReportFormat};
pub use simulate::{cmd_dump_catalog, cmd_simulate, dump_sample};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration, schema violation or unreadable input (exit 2).
    Config(String),
    /// Failure while running a study or writing outputs (exit 3).
    Runtime(String),
    /// Every requested estimator failed (exit 4).
    AllEstimatorsFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::AllEstimatorsFailed => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::AllEstimatorsFailed => write!(f, "every estimator failed"),
        }
    }
}

impl std::error::Error for CliError {}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}
