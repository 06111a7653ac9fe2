use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tempfile::TempDir;

/// Placeholder in run commands replaced by the absolute path of the entry
/// file inside the run directory.
pub const BIN_PATH: &str = "{bin_path}";

/// The executable form of a submission: a native binary, or sources plus the
/// interpreter command that runs them.
#[derive(Clone)]
pub struct Artifact {
    dir: Arc<TempDir>,
    entry: String,
    run_command: Vec<String>,
    pub language_id: Option<String>,
    pub size: u64,
    pub compile_log: String,
}

impl Artifact {
    /// Wraps files already placed in `dir`. `entry` is the file substituted
    /// for `{bin_path}` in `run_command`.
    pub fn new(
        dir: TempDir,
        entry: impl Into<String>,
        run_command: Vec<String>,
        language_id: Option<String>,
        compile_log: String,
    ) -> std::io::Result<Self> {
        let size = dir_size(dir.path())?;
        Ok(Artifact {
            dir: Arc::new(dir),
            entry: entry.into(),
            run_command,
            language_id,
            size,
            compile_log,
        })
    }

    pub fn dir(&self) -> &Path {
        self.dir.path()
    }

    pub fn entry(&self) -> &str {
        &self.entry
    }

    pub fn entry_path(&self) -> PathBuf {
        self.dir.path().join(&self.entry)
    }

    /// Command line for running the artifact from `run_dir`.
    pub fn command_in(&self, run_dir: &Path) -> Vec<String> {
        let bin = run_dir.join(&self.entry);
        let bin = bin.to_string_lossy();
        self.run_command
            .iter()
            .map(|arg| arg.replace(BIN_PATH, &bin))
            .collect()
    }
}

impl fmt::Debug for Artifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Artifact")
            .field("dir", &self.dir.path())
            .field("entry", &self.entry)
            .field("run_command", &self.run_command)
            .field("language_id", &self.language_id)
            .field("size", &self.size)
            .finish()
    }
}

fn dir_size(path: &Path) -> std::io::Result<u64> {
    let mut total = 0;
    for entry in std::fs::read_dir(path)? {
        let entry = entry?;
        let meta = entry.metadata()?;
        total += if meta.is_dir() {
            dir_size(&entry.path())?
        } else {
            meta.len()
        };
    }
    Ok(total)
}
