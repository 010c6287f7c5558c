//! Atomic output files and the run manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use edmpc::config::Config;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

/// A file named in a manifest with its content digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path, name: String) -> CliResult<Self> {
        let data = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: name,
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        })
    }
}

/// Everything needed to replay a command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: Command,
    pub config: Config,
    pub seeds: Vec<u64>,
    /// Input files, paths as given on the command line.
    pub inputs: Vec<FileRecord>,
    /// Output files, relative to the output directory.
    pub outputs: Vec<FileRecord>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// Files written by one command. Each file appears atomically; on failure
/// [`OutputSet::discard`] removes everything written so far.
pub struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> CliResult<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    /// Writes `name` through a temporary file renamed into place.
    pub fn write<F>(&mut self, name: &str, fill: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> edmpc::Result<()>,
    {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file_mut());
            fill(&mut w)?;
            w.flush()?;
        }
        tmp.persist(self.dir.join(name)).map_err(|e| CliError::Data(e.to_string()))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn records(&self) -> CliResult<Vec<FileRecord>> {
        self.written
            .iter()
            .map(|n| FileRecord::of(&self.dir.join(n), n.clone()))
            .collect()
    }

    pub fn write_manifest(&mut self, manifest: &RunManifest) -> CliResult<()> {
        let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Data(e.to_string()))?;
        self.write(MANIFEST_NAME, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// Removes every file written so far, and the directory if this set
    /// created it.
    pub fn discard(self) {
        for name in &self.written {
            let _ = fs::remove_file(self.dir.join(name));
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
