//! Parameter checkpoints: one PSNT file per named parameter plus a JSON
//! manifest that fixes their order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tensorcore::{psnt, ParamSet, Real};

use crate::error::{io_err, json_err, P2gError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct Manifest {
    params: Vec<String>,
    meta: Value,
}

fn file_name(param: &str) -> String {
    format!("{param}.psnt")
}

pub fn write_params<T: Real>(dir: &Path, params: &ParamSet<T>, meta: Value) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut names = Vec::with_capacity(params.len());
    for p in params.iter() {
        let path = dir.join(file_name(&p.name));
        psnt::write(&path, &p.value).map_err(|e| match e {
            tensorcore::TensorError::Io(source) => P2gError::Io { path: path.clone(), source },
            other => other.into(),
        })?;
        names.push(p.name.clone());
    }
    write_json(&dir.join(MANIFEST), &Manifest { params: names, meta })
}

/// Reads a checkpoint, converting stored values to `T` when the precision differs.
pub fn read_params<T: Real>(dir: &Path) -> Result<(ParamSet<T>, Value)> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(P2gError::MissingPrerequisite(format!("no checkpoint at {}", dir.display())));
    }
    let manifest: Manifest = read_json(&manifest_path)?;
    let mut params = ParamSet::new();
    for name in manifest.params {
        let path = dir.join(file_name(&name));
        let value = psnt::read(&path).map_err(|e| match e {
            tensorcore::TensorError::Io(source) => P2gError::Io { path: path.clone(), source },
            other => other.into(),
        })?;
        params.add(name, value);
    }
    Ok((params, manifest.meta))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}
