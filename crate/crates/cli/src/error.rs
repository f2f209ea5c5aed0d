//! CLI error type and the machine-readable record a failing invocation
//! emits on stderr and into `<out>/error.json`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Errors surfaced by the command implementations.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown names, empty seed lists, unsupported
    /// combinations. Exits with the usage status code.
    Usage(String),
    /// Input artifacts that should exist but do not.
    MissingArtifacts(Vec<PathBuf>),
    /// Every requested seed failed; per-seed records were still written.
    AllSeedsFailed(Vec<(u64, String)>),
    /// Orchestration failure outside the core library.
    Runtime(String),
    /// Anything bubbling up from the core library.
    Core(hydrorl::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Stable machine-readable failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::MissingArtifacts(_) => "missing-artifacts",
            CliError::AllSeedsFailed(_) => "all-seeds-failed",
            CliError::Runtime(_) => "runtime",
            CliError::Core(e) => match e {
                hydrorl::Error::DimensionMismatch(_) => "dimension-mismatch",
                hydrorl::Error::Domain(_) => "domain",
                hydrorl::Error::Config(_) => "config",
                hydrorl::Error::Diverged { .. } => "diverged",
                hydrorl::Error::TimeStep(_) => "time-step",
                hydrorl::Error::Contract(_) => "contract",
                hydrorl::Error::Backend(_) => "backend",
                hydrorl::Error::Io(_) => "io",
                hydrorl::Error::Serde(_) => "serde",
            },
            CliError::Io(_) => "io",
            CliError::Json(_) => "serde",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::MissingArtifacts(paths) => {
                let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                write!(f, "missing artifacts: {}", list.join(", "))
            }
            CliError::AllSeedsFailed(failures) => {
                let list: Vec<String> = failures
                    .iter()
                    .map(|(seed, e)| format!("seed {seed}: {e}"))
                    .collect();
                write!(f, "every seed failed: {}", list.join("; "))
            }
            CliError::Runtime(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hydrorl::Error> for CliError {
    fn from(e: hydrorl::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

/// One-line JSON record written for a failed invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub error: String,
    /// Absent unless the failure is a missing-artifact or all-seeds report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_seeds: Option<Vec<u64>>,
}

impl ErrorRecord {
    pub fn new(e: &CliError) -> Self {
        let missing = match e {
            CliError::MissingArtifacts(paths) => {
                Some(paths.iter().map(|p| p.display().to_string()).collect())
            }
            _ => None,
        };
        let failed_seeds = match e {
            CliError::AllSeedsFailed(failures) => {
                Some(failures.iter().map(|(s, _)| *s).collect())
            }
            _ => None,
        };
        ErrorRecord {
            kind: e.kind().to_string(),
            error: e.to_string(),
            missing,
            failed_seeds,
        }
    }

    /// Persist as `error.json` inside `dir` (best effort for callers).
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join("error.json"), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2_the_rest_exit_1() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::MissingArtifacts(vec![]).exit_code(), 1);
        assert_eq!(
            CliError::Core(hydrorl::Error::Config("x".into())).exit_code(),
            1
        );
    }

    #[test]
    fn record_carries_missing_paths_and_failed_seeds() {
        let e = CliError::MissingArtifacts(vec![PathBuf::from("a/b.json")]);
        let r = ErrorRecord::new(&e);
        assert_eq!(r.kind, "missing-artifacts");
        assert_eq!(r.missing.as_deref(), Some(&["a/b.json".to_string()][..]));

        let e = CliError::AllSeedsFailed(vec![(3, "diverged".into()), (7, "boom".into())]);
        let r = ErrorRecord::new(&e);
        assert_eq!(r.failed_seeds.as_deref(), Some(&[3, 7][..]));
        let line = serde_json::to_string(&r).unwrap();
        assert!(line.contains("\"kind\":\"all-seeds-failed\""));
    }
}
