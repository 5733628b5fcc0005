#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vsrlab_core::bptt::{loss, loss_gradients, ClipTerms, CropRect, LossValue, VideoPair};
use vsrlab_core::model::frame_number_channel;
use vsrlab_core::synthgen::{SyntheticKind, SyntheticSet};
use vsrlab_core::videocore::degrade;
use vsrlab_core::{ConditionSpec, Image, ModelConfig, RecurrentState, RecurrentVsr};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small flow-warp model with every layer width set to `width`.
pub fn model_config(width: usize, blocks: usize, condition: bool) -> ModelConfig {
    ModelConfig {
        flow_widths: vec![width, width],
        sr_width: width,
        sr_blocks: blocks,
        condition: ConditionSpec {
            enabled: condition,
            t_max_norm: 30,
        },
        ..ModelConfig::default()
    }
}

pub fn model(width: usize, blocks: usize, condition: bool, seed: u64) -> RecurrentVsr {
    RecurrentVsr::new(model_config(width, blocks, condition), seed).unwrap()
}

/// Generated HR videos of `lr_h`×`lr_w`·4 pixels paired with their ×4 degradations.
pub fn toy_data(kind: SyntheticKind, videos: usize, frames: usize, lr_h: usize, lr_w: usize, seed: u64) -> Vec<VideoPair> {
    let set = SyntheticSet {
        kind,
        videos,
        frames,
        height: lr_h * 4,
        width: lr_w * 4,
        seed,
        slide: 2,
    };
    set.generate()
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, hr)| {
            let lr = degrade(&hr, 1.5, 4).unwrap();
            VideoPair::new(format!("v{i}"), hr, lr).unwrap()
        })
        .collect()
}

pub fn cropped_frames(pair: &VideoPair, crop: CropRect) -> (Vec<Image>, Vec<Image>) {
    let lr = pair
        .lr
        .frames()
        .iter()
        .map(|f| f.crop(crop.x, crop.y, crop.w, crop.h).unwrap())
        .collect();
    let hr = pair
        .hr
        .frames()
        .iter()
        .map(|f| f.crop(crop.x * 4, crop.y * 4, crop.w * 4, crop.h * 4).unwrap())
        .collect();
    (lr, hr)
}

/// Forward pass written against `step` with an explicitly built condition channel.
pub fn rerun(model: &RecurrentVsr, frames: &[Image], init: &RecurrentState) -> Vec<RecurrentState> {
    let spec = model.config().condition;
    let mut state = init.clone();
    let mut out = Vec::with_capacity(frames.len());
    for (t, f) in frames.iter().enumerate() {
        let cond = spec
            .enabled
            .then(|| frame_number_channel(t, &spec, f.height(), f.width()));
        let (_, next) = model.step(f, &state, cond.as_ref()).unwrap();
        out.push(next.clone());
        state = next;
    }
    out
}

/// Gradient of the loss on frames `t .. t + l` of the whole video, unrolled from the
/// very first frame, with the backward signal cut between frames `t − 1` and `t`.
pub fn severed_unroll_gradient(
    model: &RecurrentVsr,
    lr: &[Image],
    hr: &[Image],
    init: &RecurrentState,
    t: usize,
    l: usize,
    warp_weight: f64,
) -> (LossValue, Vec<f64>) {
    let n = lr.len();
    let mut state = init.clone();
    let mut tapes = Vec::new();
    let mut srs = Vec::new();
    let mut flows = Vec::new();
    let mut prev = Vec::new();
    for f in lr {
        prev.push(state.prev_lr.clone().unwrap_or_else(|| f.clone()));
        let (sr, next, tape) = model.advance_recorded(f, &state).unwrap();
        flows.push(tape.flow.clone());
        srs.push(sr);
        tapes.push(tape);
        state = next;
    }
    let window = t..t + l;
    let terms = ClipTerms {
        sr: &srs[window.clone()],
        hr: &hr[window.clone()],
        flows: &flows[window.clone()],
        prev_lr: &prev[window.clone()],
        lr: &lr[window.clone()],
    };
    let value = loss(&terms, warp_weight).unwrap();
    let (d_sr, d_flow) = loss_gradients(&terms, warp_weight).unwrap();
    let mut grad = vec![0.0; model.num_params()];
    let mut carried = Image::zeros(srs[0].height(), srs[0].width(), srs[0].channels());
    for k in (0..n).rev() {
        let mut g = carried.clone();
        let mut df = None;
        if window.contains(&k) {
            g.add_assign(&d_sr[k - t]);
            df = d_flow[k - t].as_ref();
        }
        carried = model.backward_step(&tapes[k], &g, df, &mut grad);
        if k == t {
            // stop-gradient: nothing flows into frames before the clip
            carried = Image::zeros(carried.height(), carried.width(), carried.channels());
        }
    }
    (value, grad)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn states_bitwise_equal(a: &RecurrentState, b: &RecurrentState) -> bool {
    let bits = |img: &Image| img.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    a.tag == b.tag
        && bits(&a.prev_sr) == bits(&b.prev_sr)
        && match (&a.prev_lr, &b.prev_lr) {
            (Some(x), Some(y)) => bits(x) == bits(y),
            (None, None) => true,
            _ => false,
        }
}
