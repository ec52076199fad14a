use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::checkpoint::write_json;
use crate::error::{io_err, P2gError, Result};

pub const STAGE_MANIFEST: &str = "stage.json";

/// Package version plus `git describe` of the build tree.
pub fn version() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("P2G_GIT_DESCRIBE"))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io_err(dir))?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Hex sha256 of a file, or of a directory as the sorted list of
/// `(relative path, file digest)` pairs beneath it.
pub fn hash_path(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(P2gError::MissingPrerequisite(format!("{} does not exist", path.display())));
    }
    if path.is_file() {
        let bytes = fs::read(path).map_err(io_err(path))?;
        return Ok(format!("{:x}", Sha256::digest(bytes)));
    }
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(path).expect("file below root");
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(hash_path(&f)?.as_bytes());
        h.update([b'\n']);
    }
    Ok(format!("{:x}", h.finalize()))
}

/// Written into every stage output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// Digest of each consumed artifact, keyed by its path below the run directory.
    pub inputs: BTreeMap<String, String>,
}

pub fn write_manifest(run_root: &Path, out_dir: &Path, stage: &str, config: &ExperimentConfig, inputs: &[PathBuf]) -> Result<()> {
    let mut hashes = BTreeMap::new();
    for p in inputs {
        let key = p.strip_prefix(run_root).unwrap_or(p).to_string_lossy().into_owned();
        hashes.insert(key, hash_path(p)?);
    }
    let manifest = StageManifest {
        stage: stage.into(),
        version: version(),
        config_hash: config.content_hash(),
        config: config.clone(),
        inputs: hashes,
    };
    write_json(&out_dir.join(STAGE_MANIFEST), &manifest)
}
