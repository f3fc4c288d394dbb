//! Configuration, persistence and figures, plus the command implementations
//! behind the CLI.

pub mod archive;
pub mod commands;
pub mod config;
pub mod svg;
pub mod tables;

use std::path::Path;

use thiserror::Error;

pub use archive::{Checkpoint, Manifest};
pub use commands::{CliError, CommandOutput, Overrides};
pub use config::RunConfig;
pub use svg::{render_bar_chart, render_heatmap, ColorMode};
pub use tables::MatrixTable;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("cannot render an empty matrix")]
    EmptyMatrix,
    #[error("render: {0}")]
    Render(String),
    #[error("{path}: {message}")]
    BadTable { path: String, message: String },
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
}

impl ReportError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
