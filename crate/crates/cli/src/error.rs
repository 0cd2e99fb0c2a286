use std::path::PathBuf;

use plapwave_core::Violation;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("parameters outside the strict regime:\n  {}", format_violations(.0))]
    Regime(Vec<Violation>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("[{}] {}", x.anchor, x.message))
        .collect::<Vec<_>>()
        .join("\n  ")
}
