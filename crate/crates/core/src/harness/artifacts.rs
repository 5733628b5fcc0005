use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const RUN_RECORD: &str = "run.toml";
pub const LOSS_LOG: &str = "loss.csv";
pub const TIME_LEDGER: &str = "time_ledger.txt";
pub const CHECKPOINTS: &str = "checkpoints";

/// Provenance written next to every artifact set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    /// Always `single-worker`: data preparation and training share one thread.
    pub mode: String,
    pub workers: usize,
    pub version: String,
}

/// A self-describing output directory.
#[derive(Clone, Debug)]
pub struct RunDir {
    path: PathBuf,
    config_hash: String,
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

impl RunDir {
    /// Creates `path` and writes the resolved config snapshot and run record into it.
    pub fn create(path: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        create_dir(path)?;
        let config_hash = cfg.hash();
        write_file(
            &path.join(CONFIG_SNAPSHOT),
            &format!("# config_hash={config_hash}\n{}", cfg.to_toml()),
        )?;
        let record = RunRecord {
            name: cfg.name.clone(),
            seed: cfg.seed,
            config_hash: config_hash.clone(),
            mode: "single-worker".into(),
            workers: 1,
            version: env!("CARGO_PKG_VERSION").into(),
        };
        write_file(
            &path.join(RUN_RECORD),
            &toml::to_string(&record).expect("run record serializes"),
        )?;
        Ok(Self {
            path: path.to_path_buf(),
            config_hash,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}

/// Reloads the config snapshot of an artifact directory.
pub fn load_snapshot(dir: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&dir.join(CONFIG_SNAPSHOT))
}
