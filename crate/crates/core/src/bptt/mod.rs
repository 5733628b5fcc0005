//! Truncated backpropagation-through-time for the recurrent SR model.
//!
//! Two ways to start a clip: from a random state (RI) or from a state cached by a
//! once-per-epoch feed-forward pass over the whole cropped video (PI). The cache is
//! built from the parameters at the start of the epoch and reused for `R` draws per
//! video while the parameters keep moving.

mod clip;
mod loss;
mod optim;
mod step;
mod store;
mod train;

pub use clip::{crop_epoch, random_crop, sample_clip, ClipSpec, CropRect, EpochPlan, VideoPair};
pub use loss::{loss, loss_gradients, ClipTerms, LossValue};
pub use optim::{Adam, LrSchedule};
pub use step::{
    batch_gradient, clip_gradient, pi_gradient, pi_step, random_inits, ri_step, stored_inits, StepSettings,
};
pub use store::{build_store, HiddenStateStore};
pub use train::{
    run_training, write_loss_log, CheckpointSink, EpochTiming, LossRecord, Strategy, TimeLedger, TrainConfig,
    TrainOutcome, TrainStatus,
};
