//! Working-directory layout, the writer lock and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::models::ModelKind;
use crate::{Error, Result};

pub const LOCK_FILE: &str = ".lock";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct Workdir {
    pub root: PathBuf,
}

impl Workdir {
    pub fn new(root: PathBuf) -> Self {
        Workdir { root }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn model_dir(&self, kind: ModelKind) -> PathBuf {
        self.root.join("models").join(kind.name())
    }

    /// Fails when another writer holds the directory.
    pub fn lock(&self) -> Result<LockGuard> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let path = self.path(LOCK_FILE);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(LockGuard { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Contract(format!(
                    "workdir {} is locked by another writer (delete {} if it is stale)",
                    self.root.display(),
                    path.display()
                )))
            }
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    /// Path to a stage input that must already exist.
    pub fn require(&self, rel: &str, producer: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::Contract(format!(
                "{} is missing; run `copg {producer}` first",
                p.display()
            )))
        }
    }
}

#[derive(Debug)]
pub struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub finished_at: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_version: String,
    pub formats: Vec<String>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn load(work: &Workdir) -> Result<RunManifest> {
        let p = work.path(MANIFEST_FILE);
        if !p.exists() {
            return Ok(RunManifest::default());
        }
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Contract(format!("{}: {e}", p.display())))
    }

    /// Records digests of `inputs` and `outputs` (paths inside the workdir
    /// are stored relative to it) and saves the manifest.
    pub fn record(
        work: &Workdir,
        config_hash: &str,
        stage: &str,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<()> {
        let mut m = RunManifest::load(work)?;
        m.config_hash = config_hash.to_string();
        m.artifact_version = crate::VERSION.to_string();
        m.formats = crate::FORMAT_VERSIONS
            .iter()
            .map(|s| s.to_string())
            .collect();
        let digests = |files: &[PathBuf]| -> Result<BTreeMap<String, String>> {
            files
                .iter()
                .filter(|p| p.is_file())
                .map(|p| {
                    let key = p
                        .strip_prefix(&work.root)
                        .unwrap_or(p)
                        .display()
                        .to_string();
                    Ok((key, sha256_file(p)?))
                })
                .collect()
        };
        m.stages.insert(
            stage.to_string(),
            StageRecord {
                inputs: digests(inputs)?,
                outputs: digests(outputs)?,
                finished_at: chrono::Utc::now().to_rfc3339(),
            },
        );
        let p = work.path(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Contract(e.to_string()))?;
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let w = Workdir::new(dir.path().join("w"));
        let g = w.lock().unwrap();
        assert!(w.lock().is_err());
        drop(g);
        assert!(w.lock().is_ok());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_records_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let w = Workdir::new(dir.path().to_path_buf());
        let out = w.path("a.txt");
        fs::write(&out, "x").unwrap();
        RunManifest::record(&w, "h", "ingest", &[], &[out]).unwrap();
        let m = RunManifest::load(&w).unwrap();
        assert_eq!(m.stages["ingest"].outputs.keys().next().unwrap(), "a.txt");
    }
}
