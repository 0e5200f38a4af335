use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CliError, RunConfig};

/// Output directory of one command. Tracks every artifact so the manifest
/// can hash them at the end.
pub struct RunDir {
    root: PathBuf,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: &'a [String],
    seed: u64,
    /// Snapshot of the effective configuration, replayable with `--config`.
    config: &'a str,
    artifacts: Vec<ArtifactEntry>,
}

#[derive(Serialize)]
struct ArtifactEntry {
    path: String,
    sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self {
            root,
            artifacts: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Opens an artifact for streaming writes.
    pub fn open(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = File::create(&path).map_err(io_err(&path))?;
        self.track(name);
        Ok(BufWriter::new(file))
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.track(name);
        Ok(path)
    }

    fn track(&mut self, name: &str) {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
    }

    /// Writes `config.toml` and `manifest.toml`; the manifest hashes every
    /// artifact, the config snapshot included.
    pub fn finish(
        mut self,
        command: &str,
        args: &[String],
        cfg: &RunConfig,
    ) -> Result<PathBuf, CliError> {
        let config = cfg.to_toml();
        self.write("config.toml", &config)?;
        let mut artifacts = Vec::with_capacity(self.artifacts.len());
        for name in &self.artifacts {
            let path = self.path(name);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            artifacts.push(ArtifactEntry {
                path: name.clone(),
                sha256: sha256_hex(&bytes),
            });
        }
        let manifest = Manifest {
            command,
            args,
            seed: cfg.seed,
            config: &config,
            artifacts,
        };
        let text = toml::to_string(&manifest).expect("manifest is serialisable");
        let path = self.path("manifest.toml");
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }
}
