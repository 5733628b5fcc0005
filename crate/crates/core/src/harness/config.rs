use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::bptt::TrainConfig;
use crate::error::{Error, Result};
use crate::model::{InitKind, ModelConfig};
use crate::synthgen::SyntheticSet;

/// Environment variable naming the root directory for relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "VSRLAB_OUTPUT_ROOT";

const PRESETS: &[(&str, &str)] = &[
    ("frvsr-paper", include_str!("../../../../presets/frvsr-paper.cfg")),
    ("desk-scale", include_str!("../../../../presets/desk-scale.cfg")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationConfig {
    pub sigma: f64,
    pub scale: usize,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        Self { sigma: 1.5, scale: 4 }
    }
}

/// A named evaluation set: HR frame directories and/or a generated set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSetConfig {
    pub name: String,
    #[serde(default)]
    pub dirs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSet>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// HR frame directories used for training.
    pub train_dirs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSet>,
    pub test_sets: Vec<TestSetConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Recurrent state the model starts from at evaluation time.
    pub init: InitKind,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { init: InitKind::Zeros }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub seed: u64,
    /// Relative paths resolve against the output root.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub degradation: DegradationConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn default_name() -> String {
    "run".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text)?)
    }

    pub fn from_table(table: Table) -> Result<Self> {
        let cfg: Self = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(one_line(e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `text`, applies `key=value` overrides, then validates.
    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table = parse_table(text)?;
        apply_overrides(&mut table, overrides)?;
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read(path)?)
    }

    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        Self::from_str_with_overrides(&read(path)?, overrides)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_toml_str(preset_text(name)?)
    }

    pub fn preset_with_overrides(name: &str, overrides: &[String]) -> Result<Self> {
        Self::from_str_with_overrides(preset_text(name)?, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.training.validate()?;
        if self.degradation.scale != self.model.scale {
            return Err(Error::Config(format!(
                "degradation.scale {} differs from model.scale {}",
                self.degradation.scale, self.model.scale
            )));
        }
        if self.degradation.sigma.is_nan() || self.degradation.sigma <= 0.0 {
            return Err(Error::Config("degradation.sigma must be positive".into()));
        }
        let synthetic_seeds = self
            .data
            .synthetic
            .iter()
            .chain(self.data.test_sets.iter().filter_map(|t| t.synthetic.as_ref()))
            .map(|s| s.seed);
        if std::iter::once(self.seed).chain(synthetic_seeds).any(|s| s > i64::MAX as u64) {
            return Err(Error::Config(format!("seeds must not exceed {} (TOML integers are signed)", i64::MAX)));
        }
        for set in &self.data.test_sets {
            if set.dirs.is_empty() && set.synthetic.is_none() {
                return Err(Error::Config(format!("test set `{}` has no dirs and no synthetic source", set.name)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialized form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// First 12 hex digits of [`hash`](Self::hash).
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }

    /// `output_dir`, placed under `root` when it is relative.
    pub fn resolved_output_dir(&self, root: Option<&Path>) -> PathBuf {
        match root {
            Some(root) if self.output_dir.is_relative() => root.join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset `{name}` (available: {})",
                preset_names().collect::<Vec<_>>().join(", ")
            ))
        })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| Error::Config(one_line(&e.to_string())))
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Applies dotted `key=value` overrides; numeric segments index into arrays.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}` is not of the form key=value")))?;
        let key = key.trim();
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("malformed override key `{key}`")));
        }
        set_path(table, &parts, parse_value(raw.trim()), key)?;
    }
    Ok(())
}

fn set_path(table: &mut Table, parts: &[&str], value: Value, key: &str) -> Result<()> {
    let (head, rest) = parts.split_first().expect("non-empty key");
    if rest.is_empty() {
        table.insert(head.to_string(), value);
        return Ok(());
    }
    let slot = table
        .entry(head.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    set_in_value(slot, rest, value, key)
}

fn set_in_value(slot: &mut Value, parts: &[&str], value: Value, key: &str) -> Result<()> {
    match slot {
        Value::Table(t) => set_path(t, parts, value, key),
        Value::Array(items) => {
            let (head, rest) = parts.split_first().expect("non-empty key");
            let idx: usize = head
                .parse()
                .map_err(|_| Error::Config(format!("override `{key}`: `{head}` is not an array index")))?;
            let len = items.len();
            let item = items
                .get_mut(idx)
                .ok_or_else(|| Error::Config(format!("override `{key}`: index {idx} out of range ({len} items)")))?;
            if rest.is_empty() {
                *item = value;
                Ok(())
            } else {
                set_in_value(item, rest, value, key)
            }
        }
        _ => Err(Error::Config(format!("override `{key}` descends into a scalar"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bptt::Strategy;

    #[test]
    fn presets_parse_and_validate() {
        for name in preset_names() {
            let cfg = ExperimentConfig::preset(name).unwrap();
            let back = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn frvsr_preset_matches_training_defaults() {
        let cfg = ExperimentConfig::preset("frvsr-paper").unwrap();
        assert_eq!(cfg.training.clip_len, 15);
        assert_eq!(cfg.training.crop, 64);
        assert_eq!(cfg.training.batch, 4);
        assert_eq!(cfg.training.iterations, 500_000);
        assert_eq!(cfg.training.learning_rate, 1e-4);
        assert_eq!(cfg.degradation, DegradationConfig { sigma: 1.5, scale: 4 });
    }

    #[test]
    fn overrides_apply_and_change_hash() {
        let base = ExperimentConfig::preset("desk-scale").unwrap();
        let cfg = ExperimentConfig::preset_with_overrides(
            "desk-scale",
            &["training.strategy=ri".into(), "training.reuse=3".into(), "name=\"x y\"".into()],
        )
        .unwrap();
        assert_eq!(cfg.training.strategy, Strategy::Ri);
        assert_eq!(cfg.training.reuse, 3);
        assert_eq!(cfg.name, "x y");
        assert_ne!(base.hash(), cfg.hash());
        let bare = ExperimentConfig::preset_with_overrides("desk-scale", &["name=plain".into()]).unwrap();
        assert_eq!(bare.name, "plain");
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::preset_with_overrides("desk-scale", &["training.bogus_key=1".into()]).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
        let err = ExperimentConfig::from_toml_str("seed = 1\nwat = 2\n").unwrap_err();
        assert!(err.to_string().contains("wat"), "{err}");
    }

    #[test]
    fn malformed_overrides() {
        let mut t = Table::new();
        assert!(apply_overrides(&mut t, &["novalue".into()]).is_err());
        assert!(apply_overrides(&mut t, &["a..b=1".into()]).is_err());
        t.insert("s".into(), Value::Integer(1));
        assert!(apply_overrides(&mut t, &["s.x=1".into()]).is_err());
    }

    #[test]
    fn scale_mismatch_rejected() {
        assert!(ExperimentConfig::preset_with_overrides("desk-scale", &["degradation.scale=2".into()]).is_err());
    }

    #[test]
    fn relative_output_dir_uses_root() {
        let cfg = ExperimentConfig::preset("desk-scale").unwrap();
        let dir = cfg.resolved_output_dir(Some(Path::new("/tmp/root")));
        assert!(dir.starts_with("/tmp/root"));
    }
}
