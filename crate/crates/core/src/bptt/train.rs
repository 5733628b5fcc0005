use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clip::{crop_epoch, random_crop, sample_clip, ClipSpec, CropRect, EpochPlan, VideoPair};
use super::loss::LossValue;
use super::optim::{Adam, LrSchedule};
use super::step::{pi_step, ri_step, StepSettings};
use super::store::build_store;
use crate::error::{Error, Result};
use crate::model::{save_checkpoint, InitKind, RecurrentVsr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Random-initialization truncated BPTT.
    Ri,
    /// Partial-initialization truncated BPTT with a per-epoch hidden-state store.
    Pi,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Ri => "ri",
            Strategy::Pi => "pi",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ri" => Ok(Strategy::Ri),
            "pi" => Ok(Strategy::Pi),
            other => Err(Error::Config(format!("unknown strategy `{other}` (expected ri or pi)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub strategy: Strategy,
    /// Clip draws per video per epoch (`R`).
    pub reuse: usize,
    pub clip_len: usize,
    /// Square crop side in LR pixels.
    pub crop: usize,
    pub batch: usize,
    pub iterations: u64,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub init: InitKind,
    pub warp_weight: f64,
    /// Save a checkpoint every this many iterations (0: only at the end).
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Pi,
            reuse: 16,
            clip_len: 15,
            crop: 64,
            batch: 4,
            iterations: 500_000,
            learning_rate: 1e-4,
            schedule: LrSchedule::Step {
                milestones: vec![150_000, 300_000],
                factor: 0.5,
            },
            init: InitKind::UniformNoise,
            warp_weight: 1.0,
            checkpoint_every: 50_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reuse == 0 || self.clip_len == 0 || self.crop == 0 || self.batch == 0 {
            return Err(Error::Config("reuse, clip_len, crop and batch must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return Err(Error::Config("learning_rate must be non-negative".into()));
        }
        Ok(())
    }

    pub fn epoch_plan(&self, videos: usize) -> EpochPlan {
        EpochPlan {
            videos,
            reuse: self.reuse,
            clip_len: self.clip_len,
            crop: self.crop,
            batch: self.batch,
        }
    }
}

/// One row of the loss log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: u64,
    pub epoch: usize,
    pub strategy: Strategy,
    pub loss: f64,
    pub content_loss: f64,
    pub warp_loss: f64,
    pub lr: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTiming {
    pub epoch: usize,
    /// Wall time of the store-building feed-forward pass (0 for RI).
    pub t_ff_ms: f64,
    /// Planned iterations in the epoch.
    pub n_it: usize,
    /// Iterations actually run (the last epoch may be cut short by the budget).
    pub executed: usize,
    pub step_ms_total: f64,
}

impl EpochTiming {
    pub fn amortized_ms(&self) -> f64 {
        self.t_ff_ms / self.n_it as f64
    }

    pub fn mean_step_ms(&self) -> f64 {
        if self.executed == 0 {
            0.0
        } else {
            self.step_ms_total / self.executed as f64
        }
    }
}

/// Per-epoch timing with the feed-forward cost spread over the epoch's iterations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeLedger {
    pub epochs: Vec<EpochTiming>,
}

impl TimeLedger {
    pub fn total_iterations(&self) -> usize {
        self.epochs.iter().map(|e| e.executed).sum()
    }

    /// Mean measured step time over all iterations.
    pub fn mean_step_ms(&self) -> f64 {
        let n = self.total_iterations();
        if n == 0 {
            return 0.0;
        }
        self.epochs.iter().map(|e| e.step_ms_total).sum::<f64>() / n as f64
    }

    /// Median over epochs of `T_ff / N_it`.
    pub fn amortized_ms(&self) -> f64 {
        let mut v: Vec<f64> = self.epochs.iter().map(EpochTiming::amortized_ms).collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        if v.len().is_multiple_of(2) {
            (v[mid - 1] + v[mid]) / 2.0
        } else {
            v[mid]
        }
    }

    /// Per-iteration training cost: measured step time plus the amortized feed-forward time.
    pub fn per_iteration_ms(&self) -> f64 {
        self.mean_step_ms() + self.amortized_ms()
    }

    pub fn to_text(&self, config_hash: &str) -> String {
        let mut s = format!("# config_hash={config_hash}\n");
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "epoch={} t_ff_ms={:.3} n_it={} executed={} amortized_ms={:.3} mean_step_ms={:.3}",
                e.epoch,
                e.t_ff_ms,
                e.n_it,
                e.executed,
                e.amortized_ms(),
                e.mean_step_ms()
            );
        }
        let _ = writeln!(
            s,
            "total iterations={} amortized_ms={:.3} mean_step_ms={:.3} per_iteration_ms={:.3}",
            self.total_iterations(),
            self.amortized_ms(),
            self.mean_step_ms(),
            self.per_iteration_ms()
        );
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainStatus {
    Completed,
    /// Training stopped at `iteration`; the returned model holds the last good parameters.
    Diverged { iteration: u64, reason: String },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: RecurrentVsr,
    pub log: Vec<LossRecord>,
    pub ledger: TimeLedger,
    pub checkpoints: Vec<PathBuf>,
    pub status: TrainStatus,
    pub stores_built: usize,
}

/// Where checkpoints go and what they are stamped with.
#[derive(Clone, Debug)]
pub struct CheckpointSink<'a> {
    pub dir: &'a Path,
    pub config_hash: &'a str,
}

impl CheckpointSink<'_> {
    fn save(&self, model: &RecurrentVsr, iteration: u64, seed: u64) -> Result<PathBuf> {
        let dir = self.dir.join(format!("iter_{iteration:08}"));
        save_checkpoint(model, &dir, iteration, seed, self.config_hash)?;
        Ok(dir)
    }
}

fn check_data(data: &[VideoPair], cfg: &TrainConfig, scale: usize) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    for v in data {
        if v.frame_count() < cfg.clip_len {
            return Err(Error::Config(format!(
                "video `{}` has {} frames, fewer than clip_len {}",
                v.name,
                v.frame_count(),
                cfg.clip_len
            )));
        }
        if v.lr.width() < cfg.crop || v.lr.height() < cfg.crop {
            return Err(Error::Config(format!("video `{}` is smaller than the crop", v.name)));
        }
        if v.hr.width() != v.lr.width() * scale || v.hr.height() != v.lr.height() * scale {
            return Err(Error::Config(format!("video `{}` HR/LR sizes disagree with scale {scale}", v.name)));
        }
    }
    Ok(())
}

/// Runs the epoch loop for either strategy until `cfg.iterations` updates have been made.
///
/// PI epochs: crop every video once, build the hidden-state store with the current
/// parameters, then make `N·R` clip draws starting from stored states. RI epochs make the
/// same number of draws with a fresh crop and a random initial state per draw.
pub fn run_training(
    mut model: RecurrentVsr,
    data: &[VideoPair],
    cfg: &TrainConfig,
    seed: u64,
    sink: Option<CheckpointSink<'_>>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_data(data, cfg, model.scale())?;
    let plan = cfg.epoch_plan(data.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut optimizer = Adam::new(model.num_params());
    let mut log = Vec::with_capacity(cfg.iterations as usize);
    let mut ledger = TimeLedger::default();
    let mut checkpoints = Vec::new();
    let mut stores_built = 0;
    let mut iteration: u64 = 0;
    let mut epoch = 0;
    let mut status = TrainStatus::Completed;

    'epochs: while iteration < cfg.iterations {
        let mut timing = EpochTiming {
            epoch,
            t_ff_ms: 0.0,
            n_it: plan.iterations(),
            executed: 0,
            step_ms_total: 0.0,
        };
        let (crops, store) = match cfg.strategy {
            Strategy::Pi => {
                let crops = crop_epoch(data, cfg.crop, &mut rng)?;
                let t0 = Instant::now();
                let store = match build_store(&model, data, &crops, cfg.init, &mut rng, epoch) {
                    Ok(s) => s,
                    Err(Error::Divergence(reason)) => {
                        status = TrainStatus::Diverged { iteration, reason };
                        ledger.epochs.push(timing);
                        break 'epochs;
                    }
                    Err(e) => return Err(e),
                };
                timing.t_ff_ms = t0.elapsed().as_secs_f64() * 1e3;
                stores_built += 1;
                (crops, Some(store))
            }
            Strategy::Ri => (Vec::new(), None),
        };

        let order = plan.video_order(&mut rng);
        for batch in order.chunks(plan.batch) {
            if iteration >= cfg.iterations {
                break;
            }
            let t0 = Instant::now();
            let lr = cfg.schedule.lr_at(cfg.learning_rate, iteration, cfg.iterations);
            let settings = StepSettings {
                learning_rate: lr,
                warp_weight: cfg.warp_weight,
            };
            let clips = batch
                .iter()
                .map(|&v| {
                    let pair = &data[v];
                    let start = sample_clip(pair.frame_count(), cfg.clip_len, &mut rng)?;
                    let crop: CropRect = match cfg.strategy {
                        Strategy::Pi => crops[v],
                        Strategy::Ri => random_crop(pair.lr.width(), pair.lr.height(), cfg.crop, &mut rng)?,
                    };
                    Ok(ClipSpec {
                        video: v,
                        start,
                        len: cfg.clip_len,
                        crop,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let last_good = model.params().to_vec();
            let result: Result<LossValue> = match &store {
                Some(store) => pi_step(&mut model, data, &clips, store, &mut optimizer, settings),
                None => ri_step(&mut model, data, &clips, cfg.init, &mut rng, &mut optimizer, settings),
            };
            let value = match result {
                Ok(v) => v,
                Err(Error::Divergence(reason)) => {
                    model.params_mut().copy_from_slice(&last_good);
                    status = TrainStatus::Diverged { iteration, reason };
                    ledger.epochs.push(timing);
                    break 'epochs;
                }
                Err(e) => return Err(e),
            };
            let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
            timing.executed += 1;
            timing.step_ms_total += wall_ms;
            log.push(LossRecord {
                iteration,
                epoch,
                strategy: cfg.strategy,
                loss: value.total,
                content_loss: value.content,
                warp_loss: value.warp,
                lr,
                wall_ms,
            });
            iteration += 1;
            if let Some(sink) = &sink {
                if cfg.checkpoint_every > 0 && iteration.is_multiple_of(cfg.checkpoint_every) && iteration < cfg.iterations {
                    checkpoints.push(sink.save(&model, iteration, seed)?);
                }
            }
        }
        ledger.epochs.push(timing);
        epoch += 1;
    }

    if let Some(sink) = &sink {
        if status == TrainStatus::Completed || iteration > 0 {
            checkpoints.push(sink.save(&model, iteration, seed)?);
        }
    }
    Ok(TrainOutcome {
        model,
        log,
        ledger,
        checkpoints,
        status,
        stores_built,
    })
}

/// Writes the loss log as CSV with a leading `# config_hash=` comment line.
pub fn write_loss_log(path: &Path, records: &[LossRecord], config_hash: &str) -> Result<()> {
    let mut out = format!("# config_hash={config_hash}\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    if records.is_empty() {
        out.push_str("iteration,epoch,strategy,loss,content_loss,warp_loss,lr,wall_ms\n");
    }
    out.push_str(&String::from_utf8(body).expect("utf8 csv"));
    fs::write(path, out).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}
