//! Compact flow-warp recurrent super-resolution network.
//!
//! Each step estimates LR optical flow between the previous and current LR frames,
//! upsamples it, warps the previous SR estimate with it, and feeds the current LR
//! frame, an optional frame-number channel and the space-to-depth rearranged warped
//! estimate through a residual SR network. The previous SR estimate is the entire
//! recurrent state.

mod checkpoint;
mod conv;
pub mod ops;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};

use self::conv::Conv3x3;
use self::ops::{
    depth_to_space, leaky_relu_backward, leaky_relu_image, resize_bilinear, space_to_depth,
    upscale_flow, upscale_flow_backward, warp, warp_backward,
};
use crate::error::{Error, Result};
use crate::image::Image;

/// Tag of a state that precedes the first frame of a video.
pub const SENTINEL_INIT: i64 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub enabled: bool,
    /// Frame index mapped to 1.0; later frames clamp to 1.0.
    pub t_max_norm: usize,
}

impl Default for ConditionSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            t_max_norm: 300,
        }
    }
}

/// Constant one-channel image holding `min(t / t_max_norm, 1)`.
pub fn frame_number_channel(t: usize, spec: &ConditionSpec, h: usize, w: usize) -> Image {
    let v = (t as f64 / spec.t_max_norm.max(1) as f64).min(1.0);
    Image::filled(h, w, 1, v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub channels: usize,
    pub scale: usize,
    /// Hidden widths of the flow estimator; a final 2-channel layer is appended.
    pub flow_widths: Vec<usize>,
    pub sr_width: usize,
    pub sr_blocks: usize,
    /// Flow saturation bound in LR pixels.
    pub max_flow: f64,
    pub leaky_slope: f64,
    /// Add a bilinear upsampling of the LR frame to the SR output.
    pub lr_skip: bool,
    pub condition: ConditionSpec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: 3,
            scale: 4,
            flow_widths: vec![16, 16, 16],
            sr_width: 16,
            sr_blocks: 3,
            max_flow: 10.0,
            leaky_slope: 0.2,
            lr_skip: true,
            condition: ConditionSpec::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.scale == 0 || self.sr_width == 0 {
            return Err(Error::Config("model channels, scale and sr_width must be positive".into()));
        }
        if self.flow_widths.contains(&0) {
            return Err(Error::Config("flow widths must be positive".into()));
        }
        if self.max_flow.is_nan() || self.max_flow <= 0.0 {
            return Err(Error::Config("max_flow must be positive".into()));
        }
        if self.condition.t_max_norm < 1 {
            return Err(Error::Config("condition.t_max_norm must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zeros,
    UniformNoise,
}

/// Everything carried from one frame to the next.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState {
    /// Previous SR estimate `[H·scale, W·scale, C]`, unclamped.
    pub prev_sr: Image,
    /// LR frame the estimate was produced from; `None` before the first frame,
    /// in which case the flow estimator sees the current frame twice.
    pub prev_lr: Option<Image>,
    /// Frame index of `prev_sr`, or [`SENTINEL_INIT`].
    pub tag: i64,
}

impl RecurrentState {
    /// Index of the frame this state will be combined with.
    pub fn next_frame_index(&self) -> usize {
        (self.tag + 1).max(0) as usize
    }
}

/// Fresh pre-video state of SR shape `(height, width, channels)`.
pub fn init_state<R: Rng + ?Sized>(kind: InitKind, shape: (usize, usize, usize), rng: &mut R) -> RecurrentState {
    let (h, w, c) = shape;
    let prev_sr = match kind {
        InitKind::Zeros => Image::zeros(h, w, c),
        InitKind::UniformNoise => {
            let data = (0..h * w * c).map(|_| rng.random::<f64>()).collect();
            Image::from_vec(h, w, c, data).expect("sized")
        }
    };
    RecurrentState {
        prev_sr,
        prev_lr: None,
        tag: SENTINEL_INIT,
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Layers {
    flow: Vec<Conv3x3>,
    sr_in: Conv3x3,
    blocks: Vec<(Conv3x3, Conv3x3)>,
    sr_out: Conv3x3,
    len: usize,
}

impl Layers {
    fn build(cfg: &ModelConfig) -> Self {
        let mut offset = 0;
        let mut next = |cin, cout| {
            let conv = Conv3x3 { cin, cout, offset };
            offset += conv.param_len();
            conv
        };
        let c = cfg.channels;
        let s2 = cfg.scale * cfg.scale;
        let mut flow = Vec::new();
        let mut cin = 2 * c;
        for &wd in &cfg.flow_widths {
            flow.push(next(cin, wd));
            cin = wd;
        }
        flow.push(next(cin, 2));
        let cond = usize::from(cfg.condition.enabled);
        let sr_in = next(c + cond + c * s2, cfg.sr_width);
        let blocks = (0..cfg.sr_blocks)
            .map(|_| (next(cfg.sr_width, cfg.sr_width), next(cfg.sr_width, cfg.sr_width)))
            .collect();
        let sr_out = next(cfg.sr_width, c * s2);
        Layers {
            flow,
            sr_in,
            blocks,
            sr_out,
            len: offset,
        }
    }

    fn all(&self) -> impl Iterator<Item = &Conv3x3> {
        self.flow
            .iter()
            .chain(std::iter::once(&self.sr_in))
            .chain(self.blocks.iter().flat_map(|(a, b)| [a, b]))
            .chain(std::iter::once(&self.sr_out))
    }
}

/// Intermediate values of one recorded step, consumed by [`RecurrentVsr::backward_step`].
#[derive(Clone, Debug)]
pub struct StepTape {
    lr_shape: (usize, usize),
    flow_cols: Vec<Vec<f64>>,
    flow_pre: Vec<Image>,
    flow_tanh: Image,
    /// LR flow `[h, w, 2]`.
    pub flow: Image,
    hr_flow: Image,
    prev_sr: Image,
    sr_in_cols: Vec<f64>,
    sr_in_pre: Image,
    block_cols: Vec<(Vec<f64>, Image, Vec<f64>)>,
    sr_out_cols: Vec<f64>,
}

/// Model parameters plus the fixed architecture they index into.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentVsr {
    config: ModelConfig,
    layers: Layers,
    params: Vec<f64>,
}

impl RecurrentVsr {
    /// He-uniform initialization; output layers start small so the initial model is
    /// close to bilinear upsampling with near-zero flow.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layers = Layers::build(&config);
        let mut params = vec![0.0; layers.len];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let small: Vec<Conv3x3> = std::iter::once(*layers.flow.last().expect("flow layer"))
            .chain(layers.blocks.iter().map(|(_, b)| *b))
            .chain(std::iter::once(layers.sr_out))
            .collect();
        for conv in layers.all() {
            let gain = if small.contains(conv) { 0.1 } else { 1.0 };
            let bound = gain * (6.0 / (9 * conv.cin) as f64).sqrt();
            for p in &mut params[conv.offset..conv.offset + conv.weight_len()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(Self {
            config,
            layers,
            params,
        })
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layers = Layers::build(&config);
        if params.len() != layers.len {
            return Err(Error::Checkpoint(format!(
                "architecture expects {} parameters, got {}",
                layers.len,
                params.len()
            )));
        }
        Ok(Self {
            config,
            layers,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn scale(&self) -> usize {
        self.config.scale
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// SR-resolution state shape for an LR frame of `h × w`.
    pub fn state_shape(&self, h: usize, w: usize) -> (usize, usize, usize) {
        (h * self.config.scale, w * self.config.scale, self.config.channels)
    }

    /// Dense LR flow `[h, w, 2]`, bounded by `max_flow` through a scaled tanh.
    pub fn flow_estimate(&self, prev_lr: &Image, cur_lr: &Image) -> Result<Image> {
        prev_lr.expect_shape(cur_lr, "flow_estimate inputs")?;
        Ok(self.flow_forward(prev_lr, cur_lr, None))
    }

    fn flow_forward(&self, prev_lr: &Image, cur_lr: &Image, mut tape: Option<&mut StepTape>) -> Image {
        let p = &self.params;
        let slope = self.config.leaky_slope;
        let mut x = Image::concat_channels(&[prev_lr, cur_lr]).expect("same size");
        let last = self.layers.flow.len() - 1;
        for (i, conv) in self.layers.flow.iter().enumerate() {
            let (z, cols) = conv.forward(p, &x, tape.is_some());
            if let Some(t) = tape.as_deref_mut() {
                t.flow_cols.push(cols.expect("recorded"));
            }
            if i < last {
                x = leaky_relu_image(&z, slope);
                if let Some(t) = tape.as_deref_mut() {
                    t.flow_pre.push(z);
                }
            } else {
                let th = z.map(f64::tanh);
                let m = self.config.max_flow;
                x = th.map(|v| m * v);
                if let Some(t) = tape.as_deref_mut() {
                    t.flow_tanh = th;
                }
            }
        }
        x
    }

    fn check_inputs(&self, lr: &Image, state: &RecurrentState, cond: Option<&Image>) -> Result<()> {
        let (h, w, c) = lr.shape();
        if c != self.config.channels {
            return Err(Error::shape(format!(
                "LR frame has {c} channels, model expects {}",
                self.config.channels
            )));
        }
        if state.prev_sr.shape() != self.state_shape(h, w) {
            return Err(Error::shape(format!(
                "state {:?} inconsistent with LR frame {:?} at scale {}",
                state.prev_sr.shape(),
                lr.shape(),
                self.config.scale
            )));
        }
        if let Some(p) = &state.prev_lr {
            lr.expect_shape(p, "state.prev_lr vs LR frame")?;
        }
        match (self.config.condition.enabled, cond) {
            (true, Some(ch)) if ch.shape() == (h, w, 1) => Ok(()),
            (true, Some(ch)) => Err(Error::shape(format!("condition channel {:?}", ch.shape()))),
            (true, None) => Err(Error::invalid("model is frame-number conditioned; channel missing")),
            (false, Some(_)) => Err(Error::invalid("model is not conditioned; unexpected channel")),
            (false, None) => Ok(()),
        }
    }

    fn forward_impl(
        &self,
        lr: &Image,
        state: &RecurrentState,
        cond: Option<&Image>,
        record: bool,
    ) -> Result<(Image, Image, Option<StepTape>)> {
        self.check_inputs(lr, state, cond)?;
        let (h, w, _) = lr.shape();
        let scale = self.config.scale;
        let slope = self.config.leaky_slope;
        let p = &self.params;
        let mut tape = record.then(|| StepTape {
            lr_shape: (h, w),
            flow_cols: Vec::new(),
            flow_pre: Vec::new(),
            flow_tanh: Image::zeros(0, 0, 0),
            flow: Image::zeros(0, 0, 0),
            hr_flow: Image::zeros(0, 0, 0),
            prev_sr: Image::zeros(0, 0, 0),
            sr_in_cols: Vec::new(),
            sr_in_pre: Image::zeros(0, 0, 0),
            block_cols: Vec::new(),
            sr_out_cols: Vec::new(),
        });

        let prev_lr = state.prev_lr.as_ref().unwrap_or(lr);
        let flow = self.flow_forward(prev_lr, lr, tape.as_mut());
        let hr_flow = upscale_flow(&flow, scale)?;
        let warped = warp(&state.prev_sr, &hr_flow)?;
        let packed = space_to_depth(&warped, scale)?;
        let sr_input = match cond {
            Some(ch) => Image::concat_channels(&[lr, ch, &packed])?,
            None => Image::concat_channels(&[lr, &packed])?,
        };

        let (z, cols) = self.layers.sr_in.forward(p, &sr_input, record);
        let mut hid = leaky_relu_image(&z, slope);
        if let Some(t) = tape.as_mut() {
            t.sr_in_cols = cols.expect("recorded");
            t.sr_in_pre = z;
        }
        for (c1, c2) in &self.layers.blocks {
            let (u, cols1) = c1.forward(p, &hid, record);
            let v = leaky_relu_image(&u, slope);
            let (r, cols2) = c2.forward(p, &v, record);
            hid.add_assign(&r);
            if let Some(t) = tape.as_mut() {
                t.block_cols.push((cols1.expect("recorded"), u, cols2.expect("recorded")));
            }
        }
        let (o, cols) = self.layers.sr_out.forward(p, &hid, record);
        let mut sr = depth_to_space(&o, scale)?;
        if self.config.lr_skip {
            sr.add_assign(&resize_bilinear(lr, h * scale, w * scale));
        }
        if !sr.is_finite() || !flow.is_finite() {
            return Err(Error::Divergence("non-finite SR output or flow".into()));
        }
        if let Some(t) = tape.as_mut() {
            t.sr_out_cols = cols.expect("recorded");
            t.flow = flow.clone();
            t.hr_flow = hr_flow;
            t.prev_sr = state.prev_sr.clone();
        }
        Ok((sr, flow, tape))
    }

    fn next_state(sr: &Image, lr: &Image, state: &RecurrentState) -> RecurrentState {
        RecurrentState {
            prev_sr: sr.clone(),
            prev_lr: Some(lr.clone()),
            tag: state.tag + 1,
        }
    }

    /// One recurrent step: `(LR frame, state, optional condition) → (SR frame, next state)`.
    pub fn step(&self, lr: &Image, state: &RecurrentState, cond: Option<&Image>) -> Result<(Image, RecurrentState)> {
        let (sr, _, _) = self.forward_impl(lr, state, cond, false)?;
        let next = Self::next_state(&sr, lr, state);
        Ok((sr, next))
    }

    /// Condition channel for the frame following `state`, if the model is conditioned.
    pub fn condition_for(&self, state: &RecurrentState, h: usize, w: usize) -> Option<Image> {
        self.config
            .condition
            .enabled
            .then(|| frame_number_channel(state.next_frame_index(), &self.config.condition, h, w))
    }

    /// [`RecurrentVsr::step`] with the frame-number channel derived from the state tag.
    pub fn advance(&self, lr: &Image, state: &RecurrentState) -> Result<(Image, RecurrentState)> {
        let cond = self.condition_for(state, lr.height(), lr.width());
        self.step(lr, state, cond.as_ref())
    }

    /// Like [`RecurrentVsr::advance`] but records what the backward pass needs.
    pub fn advance_recorded(&self, lr: &Image, state: &RecurrentState) -> Result<(Image, RecurrentState, StepTape)> {
        let cond = self.condition_for(state, lr.height(), lr.width());
        let (sr, _, tape) = self.forward_impl(lr, state, cond.as_ref(), true)?;
        let next = Self::next_state(&sr, lr, state);
        Ok((sr, next, tape.expect("recorded")))
    }

    /// Backpropagates one step. `d_sr` is the gradient on this step's SR output (including
    /// whatever the following step sent back through the state); `d_flow` is any extra
    /// gradient on the LR flow. Parameter gradients accumulate into `grad`; the return
    /// value is the gradient with respect to the incoming state's `prev_sr`.
    pub fn backward_step(&self, tape: &StepTape, d_sr: &Image, d_flow: Option<&Image>, grad: &mut [f64]) -> Image {
        let p = &self.params;
        let slope = self.config.leaky_slope;
        let scale = self.config.scale;
        let c = self.config.channels;
        let (h, w) = tape.lr_shape;

        let d_o = space_to_depth(d_sr, scale).expect("divisible");
        let mut d_hid = self
            .layers
            .sr_out
            .backward(p, &tape.sr_out_cols, (h, w), &d_o, grad, true)
            .expect("input grad");
        for ((c1, c2), (cols1, u, cols2)) in self.layers.blocks.iter().zip(&tape.block_cols).rev() {
            let mut d_v = c2.backward(p, cols2, (h, w), &d_hid, grad, true).expect("input grad");
            leaky_relu_backward(u, &mut d_v, slope);
            let d_in = c1.backward(p, cols1, (h, w), &d_v, grad, true).expect("input grad");
            d_hid.add_assign(&d_in);
        }
        leaky_relu_backward(&tape.sr_in_pre, &mut d_hid, slope);
        let d_input = self
            .layers
            .sr_in
            .backward(p, &tape.sr_in_cols, (h, w), &d_hid, grad, true)
            .expect("input grad");
        let cond = usize::from(self.config.condition.enabled);
        let parts = d_input
            .split_channels(&[c + cond, c * scale * scale])
            .expect("channel layout");
        let d_warped = depth_to_space(&parts[1], scale).expect("divisible");
        let (d_prev, d_hr_flow) = warp_backward(&tape.prev_sr, &tape.hr_flow, &d_warped, true);
        let mut d_flow_total = upscale_flow_backward(&d_hr_flow, scale);
        if let Some(extra) = d_flow {
            d_flow_total.add_assign(extra);
        }

        // d/dz of max_flow·tanh(z)
        let m = self.config.max_flow;
        let mut d_z = d_flow_total;
        for (g, &t) in d_z.data_mut().iter_mut().zip(tape.flow_tanh.data()) {
            *g *= m * (1.0 - t * t);
        }
        for (i, conv) in self.layers.flow.iter().enumerate().rev() {
            let want = i > 0;
            let d_x = conv.backward(p, &tape.flow_cols[i], (h, w), &d_z, grad, want);
            if let Some(mut d_x) = d_x {
                leaky_relu_backward(&tape.flow_pre[i - 1], &mut d_x, slope);
                d_z = d_x;
            }
        }
        d_prev.expect("image grad")
    }
}
