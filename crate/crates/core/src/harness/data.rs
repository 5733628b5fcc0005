use std::path::Path;

use super::config::{DegradationConfig, ExperimentConfig, TestSetConfig};
use crate::bptt::VideoPair;
use crate::error::{Error, Result};
use crate::synthgen::SyntheticSet;
use crate::videocore::{degrade, load_video, save_video, VideoTensor};

/// A named list of (HR, LR) videos.
#[derive(Clone, Debug)]
pub struct NamedSet {
    pub name: String,
    pub videos: Vec<VideoPair>,
}

fn dir_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

pub fn pair_from_hr(name: impl Into<String>, hr: VideoTensor, deg: &DegradationConfig) -> Result<VideoPair> {
    let lr = degrade(&hr, deg.sigma, deg.scale)?;
    VideoPair::new(name, hr, lr)
}

/// Loads HR frame directories and degrades each into its LR counterpart.
pub fn load_hr_pairs<P: AsRef<Path>>(dirs: &[P], deg: &DegradationConfig) -> Result<Vec<VideoPair>> {
    dirs.iter()
        .map(|d| pair_from_hr(dir_name(d.as_ref()), load_video(d.as_ref())?, deg))
        .collect()
}

pub fn synthetic_pairs(set: &SyntheticSet, prefix: &str, deg: &DegradationConfig) -> Result<Vec<VideoPair>> {
    set.generate()?
        .into_iter()
        .enumerate()
        .map(|(i, hr)| pair_from_hr(format!("{prefix}-{i:03}"), hr, deg))
        .collect()
}

/// Training videos: configured directories followed by the generated set, if any.
pub fn training_data(cfg: &ExperimentConfig) -> Result<Vec<VideoPair>> {
    let mut out = load_hr_pairs(&cfg.data.train_dirs, &cfg.degradation)?;
    if let Some(set) = &cfg.data.synthetic {
        out.extend(synthetic_pairs(set, "train", &cfg.degradation)?);
    }
    if out.is_empty() {
        return Err(Error::Config(
            "no training data: set data.train_dirs or data.synthetic".into(),
        ));
    }
    Ok(out)
}

pub fn test_set(set: &TestSetConfig, deg: &DegradationConfig) -> Result<NamedSet> {
    let mut videos = load_hr_pairs(&set.dirs, deg)?;
    if let Some(syn) = &set.synthetic {
        videos.extend(synthetic_pairs(syn, &set.name, deg)?);
    }
    if videos.is_empty() {
        return Err(Error::Config(format!("test set `{}` is empty", set.name)));
    }
    Ok(NamedSet {
        name: set.name.clone(),
        videos,
    })
}

pub fn test_sets(cfg: &ExperimentConfig) -> Result<Vec<NamedSet>> {
    cfg.data.test_sets.iter().map(|s| test_set(s, &cfg.degradation)).collect()
}

/// Degrades an HR frame directory into an LR frame directory.
pub fn degrade_dir(input: &Path, output: &Path, sigma: f64, scale: usize) -> Result<VideoTensor> {
    let lr = degrade(&load_video(input)?, sigma, scale)?;
    save_video(&lr, output)?;
    Ok(lr)
}
