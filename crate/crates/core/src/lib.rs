//! Training and stress-testing laboratory for recurrent video super-resolution.
//!
//! * [`videocore`]: video tensors, frame directories, BT.601 luma, HR to LR degradation.
//! * [`synthgen`]: probe videos and palindrome extension.
//! * [`model`]: compact flow-warp recurrent SR network with explicit recurrent state.
//! * [`bptt`]: truncated BPTT from random or cached initial states.
//! * [`metrics`]: PSNR/SSIM on luma, per-frame histories and set aggregates.
//! * [`harness`]: configs, run artifacts, evaluation, the trade-off sweep, plots.

pub mod bptt;
pub mod error;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod model;
pub mod synthgen;
pub mod videocore;

pub use error::{Error, Result};
pub use image::Image;
pub use model::{ConditionSpec, InitKind, ModelConfig, RecurrentState, RecurrentVsr};
pub use videocore::VideoTensor;
