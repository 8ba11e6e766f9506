//! Run manifests: everything needed to repeat a run and check its inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use usrecon_core::seed::{self, stream};
use usrecon_core::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// Master seed and the sub-seed of each random stream.
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

fn unreadable(path: &Path, e: std::io::Error) -> Error {
    Error::Parse {
        origin: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// Digest of a file, or of a directory as the digest of its
/// `name sha256` listing over regular files sorted by name.
pub fn sha256_file(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut names: Vec<(String, PathBuf)> = Vec::new();
        for entry in std::fs::read_dir(path).map_err(|e| unreadable(path, e))? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                names.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
            }
        }
        names.sort();
        let mut listing = String::new();
        for (name, p) in names {
            listing.push_str(&format!("{name} {}\n", sha256_file(&p)?));
        }
        return Ok(hex::encode(Sha256::digest(listing.as_bytes())));
    }
    let bytes = std::fs::read(path).map_err(|e| unreadable(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digest(role: &str, path: &Path) -> Result<FileDigest> {
    Ok(FileDigest {
        role: role.into(),
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
    })
}

pub fn seed_table(master: u64) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    m.insert("master".into(), master);
    for (name, tag) in [
        ("fps", stream::FPS),
        ("queries", stream::QUERIES),
        ("generator_init", stream::GENERATOR_INIT),
        ("discriminator_init", stream::DISCRIMINATOR_INIT),
        ("batches", stream::BATCHES),
        ("census_probes", stream::CENSUS_PROBES),
        ("surface_samples", stream::SURFACE_SAMPLES),
    ] {
        m.insert(name.into(), seed::derive(master, tag));
    }
    m
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>, master_seed: u64) -> Self {
        Self {
            tool: "usrecon".into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config,
            seeds: seed_table(master_seed),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn input(&self, role: &str) -> Option<&FileDigest> {
        self.inputs.iter().find(|d| d.role == role)
    }

    /// Fails when an input file no longer matches its recorded digest.
    pub fn verify_inputs(&self) -> Result<()> {
        for d in &self.inputs {
            let now = sha256_file(&d.path)?;
            if now != d.sha256 {
                return Err(Error::InvalidInput(format!(
                    "{} ({}) changed since the manifest was written: sha256 {now}, recorded {}",
                    d.path.display(),
                    d.role,
                    d.sha256
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Invariant(e.to_string()))?;
        Ok(std::fs::write(path, json + "\n")?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            origin: path.display().to_string(),
            msg: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            origin: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            msg: e.to_string(),
        })
    }
}
