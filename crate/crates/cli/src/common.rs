//! Shared CLI plumbing: exit-code mapping, dataset loading, worker pool.

use esb_core::{Dataset, Error};
use std::path::Path;

/// Error carrying the process exit code: 2 input, 3 numerical, 4 guard.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SingularGram { .. } | Error::InitSingular => 3,
            Error::TooManyModels { .. } | Error::TooManySupports { .. } => 4,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DataFormat {
    Csv,
    Bin,
}

impl DataFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataFormat::Csv => "csv",
            DataFormat::Bin => "bin",
        }
    }
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset, CliError> {
    let d = match format {
        DataFormat::Csv => Dataset::from_csv(path),
        DataFormat::Bin => Dataset::from_binary(path),
    }
    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(d)
}

/// Caps the worker pool at `ESB_THREADS` when set.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("ESB_THREADS") {
        if let Ok(k) = v.trim().parse::<usize>() {
            if k >= 1 {
                // a second initialization (e.g. in tests) is harmless
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

/// Writes pretty JSON plus a trailing newline and echoes the path.
pub fn write_json_out(path: &Path, value: &serde_json::Value) -> CliResult {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::input(e.to_string()))?;
        }
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::input(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::input(e.to_string()))?;
    println!("wrote {}", path.display());
    Ok(())
}
