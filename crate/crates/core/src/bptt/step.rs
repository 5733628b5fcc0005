//! Truncated-BPTT updates. Random-initialization and partial-initialization training
//! differ only in where each clip's initial state comes from; both go through
//! [`batch_gradient`].

use rand::Rng;

use super::clip::{ClipSpec, VideoPair};
use super::loss::{loss, loss_gradients, ClipTerms, LossValue};
use super::optim::Adam;
use super::store::HiddenStateStore;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{init_state, InitKind, RecurrentState, RecurrentVsr};

/// Loss and parameter gradient of one clip unrolled from `init`. The gradient reaching
/// `init` is dropped: the clip's initial state is a constant.
pub fn clip_gradient(
    model: &RecurrentVsr,
    lr: &[Image],
    hr: &[Image],
    init: &RecurrentState,
    warp_weight: f64,
) -> Result<(LossValue, Vec<f64>)> {
    let mut state = init.clone();
    let mut tapes = Vec::with_capacity(lr.len());
    let mut srs = Vec::with_capacity(lr.len());
    let mut flows = Vec::with_capacity(lr.len());
    let mut prev_lr = Vec::with_capacity(lr.len());
    for frame in lr {
        prev_lr.push(state.prev_lr.clone().unwrap_or_else(|| frame.clone()));
        let (sr, next, tape) = model.advance_recorded(frame, &state)?;
        flows.push(tape.flow.clone());
        srs.push(sr);
        tapes.push(tape);
        state = next;
    }
    let terms = ClipTerms {
        sr: &srs,
        hr,
        flows: &flows,
        prev_lr: &prev_lr,
        lr,
    };
    let value = loss(&terms, warp_weight)?;
    if !value.is_finite() {
        return Err(Error::Divergence("non-finite clip loss".into()));
    }
    let (d_sr, d_flow) = loss_gradients(&terms, warp_weight)?;
    let mut grad = vec![0.0; model.num_params()];
    let mut carried: Option<Image> = None;
    for t in (0..lr.len()).rev() {
        let mut g = d_sr[t].clone();
        if let Some(c) = &carried {
            g.add_assign(c);
        }
        carried = Some(model.backward_step(&tapes[t], &g, d_flow[t].as_ref(), &mut grad));
    }
    Ok((value, grad))
}

/// Mean loss and mean gradient over a batch of clips with the given initial states.
pub fn batch_gradient(
    model: &RecurrentVsr,
    data: &[VideoPair],
    clips: &[ClipSpec],
    inits: &[RecurrentState],
    warp_weight: f64,
) -> Result<(LossValue, Vec<f64>)> {
    if clips.is_empty() || clips.len() != inits.len() {
        return Err(Error::invalid("batch needs one initial state per clip"));
    }
    let mut grad = vec![0.0; model.num_params()];
    let mut losses = Vec::with_capacity(clips.len());
    for (clip, init) in clips.iter().zip(inits) {
        let (lr, hr) = clip.frames(data, model.scale())?;
        let (value, g) = clip_gradient(model, &lr, &hr, init, warp_weight)?;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
        losses.push(value);
    }
    let n = clips.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((LossValue::mean(&losses), grad))
}

/// Fresh `init_kind` states for each clip, drawn from `rng` in clip order.
pub fn random_inits<R: Rng + ?Sized>(
    model: &RecurrentVsr,
    clips: &[ClipSpec],
    init_kind: InitKind,
    rng: &mut R,
) -> Vec<RecurrentState> {
    clips
        .iter()
        .map(|c| init_state(init_kind, model.state_shape(c.crop.h, c.crop.w), rng))
        .collect()
}

/// Stored states for frame `start − 1` of each clip (index −1 for clips starting at 0).
pub fn stored_inits(store: &HiddenStateStore, clips: &[ClipSpec]) -> Result<Vec<RecurrentState>> {
    clips
        .iter()
        .map(|c| {
            match store.crop(c.video) {
                Some(crop) if crop == c.crop => {}
                Some(crop) => {
                    return Err(Error::invalid(format!(
                        "clip crop {:?} differs from the stored crop {crop:?} of video {}",
                        c.crop, c.video
                    )))
                }
                None => {
                    return Err(Error::MissingStoreEntry {
                        video: c.video,
                        index: c.start as i64 - 1,
                    })
                }
            }
            store.get(c.video, c.start as i64 - 1).cloned()
        })
        .collect()
}

/// Gradient used by [`pi_step`], exposed for verification.
pub fn pi_gradient(
    model: &RecurrentVsr,
    data: &[VideoPair],
    clips: &[ClipSpec],
    store: &HiddenStateStore,
    warp_weight: f64,
) -> Result<(LossValue, Vec<f64>)> {
    let inits = stored_inits(store, clips)?;
    batch_gradient(model, data, clips, &inits, warp_weight)
}

/// Settings shared by both update rules.
#[derive(Clone, Copy, Debug)]
pub struct StepSettings {
    pub learning_rate: f64,
    pub warp_weight: f64,
}

/// Random-initialization update: every clip starts from a fresh random state.
pub fn ri_step<R: Rng + ?Sized>(
    model: &mut RecurrentVsr,
    data: &[VideoPair],
    clips: &[ClipSpec],
    init_kind: InitKind,
    rng: &mut R,
    optimizer: &mut Adam,
    settings: StepSettings,
) -> Result<LossValue> {
    let inits = random_inits(model, clips, init_kind, rng);
    let (value, grad) = batch_gradient(model, data, clips, &inits, settings.warp_weight)?;
    optimizer.step(model.params_mut(), &grad, settings.learning_rate)?;
    Ok(value)
}

/// Partial-initialization update: every clip starts from the cached state of the frame
/// before it.
pub fn pi_step(
    model: &mut RecurrentVsr,
    data: &[VideoPair],
    clips: &[ClipSpec],
    store: &HiddenStateStore,
    optimizer: &mut Adam,
    settings: StepSettings,
) -> Result<LossValue> {
    let (value, grad) = pi_gradient(model, data, clips, store, settings.warp_weight)?;
    optimizer.step(model.params_mut(), &grad, settings.learning_rate)?;
    Ok(value)
}
