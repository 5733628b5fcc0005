//! Deterministic fixtures shared by the benchmarks.

use vsrlab_core::bptt::VideoPair;
use vsrlab_core::synthgen::{procedural_frame, SyntheticKind, SyntheticSet};
use vsrlab_core::videocore::degrade;
use vsrlab_core::{ConditionSpec, Image, ModelConfig, RecurrentVsr};

/// Width-16 model with three residual blocks, the size used for CPU-scale runs.
pub fn desk_model() -> RecurrentVsr {
    let config = ModelConfig {
        flow_widths: vec![16, 16, 16],
        sr_width: 16,
        sr_blocks: 3,
        condition: ConditionSpec {
            enabled: false,
            t_max_norm: 300,
        },
        ..ModelConfig::default()
    };
    RecurrentVsr::new(config, 7).expect("valid bench model")
}

pub fn frame(height: usize, width: usize, seed: u64) -> Image {
    procedural_frame(height, width, 3, seed)
}

/// Smooth flow field with displacements of at most two pixels.
pub fn flow(height: usize, width: usize) -> Image {
    Image::from_fn(height, width, 2, |y, x, c| {
        let phase = if c == 0 { x as f64 * 0.3 } else { y as f64 * 0.2 };
        2.0 * phase.sin()
    })
}

/// Mixed synthetic videos of `lr`×`lr` LR frames with their HR sources.
pub fn videos(count: usize, frames: usize, lr: usize) -> Vec<VideoPair> {
    SyntheticSet {
        kind: SyntheticKind::Mixed,
        videos: count,
        frames,
        height: lr * 4,
        width: lr * 4,
        seed: 5,
        slide: 2,
    }
    .generate()
    .expect("synthetic set")
    .into_iter()
    .enumerate()
    .map(|(i, hr)| {
        let lr = degrade(&hr, 1.5, 4).expect("degrade");
        VideoPair::new(format!("b{i}"), hr, lr).expect("pair")
    })
    .collect()
}
