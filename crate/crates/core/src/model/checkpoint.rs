//! Checkpoints: raw little-endian `f64` parameters (`params.bin`) next to a TOML manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelConfig, RecurrentVsr};
use crate::error::{Error, Result};

pub const PARAMS_FILE: &str = "params.bin";
pub const MANIFEST_FILE: &str = "manifest.toml";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub iteration: u64,
    pub seed: u64,
    pub config_hash: String,
    pub param_count: usize,
    pub params_sha256: String,
    pub model: ModelConfig,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_checkpoint(model: &RecurrentVsr, dir: &Path, iteration: u64, seed: u64, config_hash: &str) -> Result<CheckpointManifest> {
    fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let bytes: Vec<u8> = model.params().iter().flat_map(|v| v.to_le_bytes()).collect();
    let manifest = CheckpointManifest {
        format_version: FORMAT_VERSION,
        iteration,
        seed,
        config_hash: config_hash.to_string(),
        param_count: model.num_params(),
        params_sha256: hex::encode(Sha256::digest(&bytes)),
        model: model.config().clone(),
    };
    let params_path = dir.join(PARAMS_FILE);
    fs::write(&params_path, &bytes).map_err(|source| Error::Write {
        path: params_path.clone(),
        source,
    })?;
    let text = toml::to_string(&manifest).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, text).map_err(|source| Error::Write {
        path: manifest_path,
        source,
    })?;
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<(RecurrentVsr, CheckpointManifest)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: CheckpointManifest =
        toml::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }
    let params_path = dir.join(PARAMS_FILE);
    let bytes = fs::read(&params_path).map_err(io_err(&params_path))?;
    if hex::encode(Sha256::digest(&bytes)) != manifest.params_sha256 {
        return Err(Error::Checkpoint(format!("{} does not match its manifest digest", params_path.display())));
    }
    if bytes.len() != manifest.param_count * 8 {
        return Err(Error::Checkpoint("parameter count mismatch".into()));
    }
    let params = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    let model = RecurrentVsr::from_params(manifest.model.clone(), params)?;
    Ok((model, manifest))
}
