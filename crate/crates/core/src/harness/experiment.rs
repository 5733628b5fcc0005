use std::path::{Path, PathBuf};

use super::artifacts::{create_dir, write_file, RunDir, CHECKPOINTS, LOSS_LOG, TIME_LEDGER};
use super::config::ExperimentConfig;
use super::data::{training_data, NamedSet};
use crate::bptt::{run_training, write_loss_log, CheckpointSink, TimeLedger, TrainStatus};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_set, super_resolve, write_frame_csv, write_summary_csv, SetEvaluation};
use crate::model::{load_checkpoint, InitKind, RecurrentVsr};
use crate::videocore::{load_video, save_video, VideoTensor};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const FRAMES_DIR: &str = "frames";
pub const STATUS_FILE: &str = "status.txt";

const TRAIN_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of the training stream (crops, clip starts, random states), distinct from the init seed.
pub fn training_seed(seed: u64) -> u64 {
    seed ^ TRAIN_SEED_SALT
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub dir: PathBuf,
    pub config_hash: String,
    pub model: RecurrentVsr,
    pub status: TrainStatus,
    pub iterations: usize,
    pub stores_built: usize,
    pub ledger: TimeLedger,
    pub final_checkpoint: Option<PathBuf>,
}

/// Trains from `cfg` and writes the config snapshot, run record, loss log, time ledger
/// and checkpoints into `dir`. Divergence is reported in the summary, not as an error.
pub fn train_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<TrainSummary> {
    cfg.validate()?;
    let data = training_data(cfg)?;
    let run = RunDir::create(dir, cfg)?;
    let model = RecurrentVsr::new(cfg.model.clone(), cfg.seed)?;
    let ckpt_dir = run.join(CHECKPOINTS);
    let sink = CheckpointSink {
        dir: &ckpt_dir,
        config_hash: run.config_hash(),
    };
    let outcome = run_training(model, &data, &cfg.training, training_seed(cfg.seed), Some(sink))?;
    write_loss_log(&run.join(LOSS_LOG), &outcome.log, run.config_hash())?;
    write_file(&run.join(TIME_LEDGER), &outcome.ledger.to_text(run.config_hash()))?;
    let status = match &outcome.status {
        TrainStatus::Completed => "completed".to_string(),
        TrainStatus::Diverged { iteration, reason } => format!("diverged iteration={iteration} reason={reason}"),
    };
    let status = format!("# config_hash={}\n{status}\n", run.config_hash());
    write_file(&run.join(STATUS_FILE), &status)?;
    Ok(TrainSummary {
        dir: dir.to_path_buf(),
        config_hash: run.config_hash().to_string(),
        final_checkpoint: outcome.checkpoints.last().cloned(),
        iterations: outcome.log.len(),
        model: outcome.model,
        status: outcome.status,
        stores_built: outcome.stores_built,
        ledger: outcome.ledger,
    })
}

/// Loads a checkpoint and checks it against the requested scale.
pub fn load_model_for_scale(checkpoint: &Path, scale: usize) -> Result<RecurrentVsr> {
    let (model, _) = load_checkpoint(checkpoint)?;
    if model.scale() != scale {
        return Err(Error::Config(format!(
            "checkpoint scale {} does not match requested scale {scale}",
            model.scale()
        )));
    }
    Ok(model)
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Evaluates every set, writing one per-frame CSV per video under `frames/` and one summary CSV.
pub fn evaluate_to_dir(
    model: &RecurrentVsr,
    sets: &[NamedSet],
    init: InitKind,
    dir: &Path,
    config_hash: &str,
) -> Result<Vec<(String, SetEvaluation)>> {
    if sets.is_empty() {
        return Err(Error::Config("no test sets to evaluate".into()));
    }
    let frames = dir.join(FRAMES_DIR);
    create_dir(&frames)?;
    let mut results = Vec::with_capacity(sets.len());
    for set in sets {
        let eval = evaluate_set(model, &set.videos, init)?;
        for series in &eval.videos {
            let file = format!("{}__{}.csv", sanitize(&set.name), sanitize(&series.video_id));
            write_frame_csv(&frames.join(file), series, config_hash)?;
        }
        results.push((set.name.clone(), eval));
    }
    write_summary_csv(&dir.join(SUMMARY_CSV), &results, config_hash)?;
    Ok(results)
}

/// Super-resolves LR frame directories without ground truth; one output directory per input.
pub fn super_resolve_dirs<P: AsRef<Path>>(
    model: &RecurrentVsr,
    inputs: &[P],
    init: InitKind,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    inputs
        .iter()
        .map(|input| {
            let input = input.as_ref();
            let lr = load_video(input)?;
            let sr = VideoTensor::new(super_resolve(model, &lr, init)?)?;
            let name = input
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "video".into());
            let target = out.join(sanitize(&name));
            save_video(&sr, &target)?;
            Ok(target)
        })
        .collect()
}
