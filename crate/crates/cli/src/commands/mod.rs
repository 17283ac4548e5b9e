pub mod data;
pub mod evaluate;
pub mod ingest;
pub mod query;
pub mod train;

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `name` in the directory holding `file`.
pub fn sibling(file: &Path, name: &str) -> PathBuf {
    file.parent().unwrap_or(Path::new("")).join(name)
}
