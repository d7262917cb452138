//! Atomic artifact writing with run manifests.
//!
//! Every command that produces files stages them in an [`ArtifactSet`] and
//! flushes them in one step: each file is written to a temporary sibling and
//! renamed into place, then a `<first-output>.manifest.json` records the
//! command, resolved configuration, seed, tool version, wall-clock duration
//! and a SHA-256 digest of every artifact. Replaying the same command with
//! the same seed reproduces the artifacts bit-exactly; the duration field is
//! the one tolerance-tagged exception.

use std::error::Error;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct OutputDigest {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: Option<u64>,
    config: serde_json::Value,
    duration_seconds: f64,
    outputs: Vec<OutputDigest>,
}

pub struct ArtifactSet {
    staged: Vec<(PathBuf, Vec<u8>)>,
}

impl ArtifactSet {
    pub fn new() -> Self {
        ArtifactSet { staged: Vec::new() }
    }

    pub fn add_text(&mut self, path: &Path, text: String) {
        self.staged.push((path.to_path_buf(), text.into_bytes()));
    }

    /// Stages pretty-printed JSON with a trailing newline.
    pub fn add_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), Box<dyn Error>> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.staged.push((path.to_path_buf(), bytes));
        Ok(())
    }

    /// Writes every staged artifact atomically, then the manifest next to
    /// the first artifact.
    pub fn write_with_manifest(
        self,
        command: &str,
        seed: Option<u64>,
        config: serde_json::Value,
        started: Instant,
    ) -> Result<(), Box<dyn Error>> {
        let mut outputs = Vec::with_capacity(self.staged.len());
        for (path, bytes) in &self.staged {
            write_atomic(path, bytes)?;
            let mut hasher = Sha256::new();
            hasher.update(bytes);
            let digest = hasher.finalize();
            let sha256: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            outputs.push(OutputDigest {
                path: path.display().to_string(),
                sha256,
                bytes: bytes.len() as u64,
            });
        }
        let Some((first, _)) = self.staged.first() else {
            return Ok(());
        };
        let manifest = RunManifest {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            config,
            duration_seconds: started.elapsed().as_secs_f64(),
            outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&manifest_path(first), &bytes)?;
        Ok(())
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Box<dyn Error>> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent)
        .map_err(|e| format!("creating temporary file in {}: {e}", parent.display()))?;
    tmp.write_all(bytes)
        .map_err(|e| format!("writing {}: {e}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| format!("renaming into {}: {e}", path.display()))?;
    Ok(())
}
