use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::videocore::VideoTensor;

/// Paired HR ground truth and its degraded LR counterpart.
#[derive(Clone, Debug)]
pub struct VideoPair {
    pub name: String,
    pub hr: VideoTensor,
    pub lr: VideoTensor,
}

impl VideoPair {
    pub fn new(name: impl Into<String>, hr: VideoTensor, lr: VideoTensor) -> Result<Self> {
        if hr.frame_count() != lr.frame_count() {
            return Err(Error::shape(format!(
                "HR has {} frames, LR has {}",
                hr.frame_count(),
                lr.frame_count()
            )));
        }
        Ok(Self {
            name: name.into(),
            hr,
            lr,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.lr.frame_count()
    }
}

/// Rectangle in LR pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// One truncated-BPTT work item: frames `start .. start + len` of `video`, cropped to `crop`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClipSpec {
    pub video: usize,
    pub start: usize,
    pub len: usize,
    pub crop: CropRect,
}

impl ClipSpec {
    /// LR and HR frames of the clip.
    pub fn frames(&self, data: &[VideoPair], scale: usize) -> Result<(Vec<Image>, Vec<Image>)> {
        let pair = data
            .get(self.video)
            .ok_or_else(|| Error::invalid(format!("no video {}", self.video)))?;
        if self.len == 0 || self.start + self.len > pair.frame_count() {
            return Err(Error::invalid(format!(
                "clip {}..{} outside video of {} frames",
                self.start,
                self.start + self.len,
                pair.frame_count()
            )));
        }
        let c = self.crop;
        let mut lr = Vec::with_capacity(self.len);
        let mut hr = Vec::with_capacity(self.len);
        for t in self.start..self.start + self.len {
            lr.push(pair.lr.frame(t).crop(c.x, c.y, c.w, c.h)?);
            hr.push(pair.hr.frame(t).crop(c.x * scale, c.y * scale, c.w * scale, c.h * scale)?);
        }
        Ok((lr, hr))
    }
}

/// Uniform position of a `size × size` window inside a `w × h` frame.
pub fn random_crop<R: Rng + ?Sized>(w: usize, h: usize, size: usize, rng: &mut R) -> Result<CropRect> {
    if size == 0 || size > w || size > h {
        return Err(Error::invalid(format!("crop {size} larger than {w}x{h} frame")));
    }
    Ok(CropRect {
        x: rng.random_range(0..=w - size),
        y: rng.random_range(0..=h - size),
        w: size,
        h: size,
    })
}

/// One crop per video, fixed for all of that video's frames.
pub fn crop_epoch<R: Rng + ?Sized>(videos: &[VideoPair], size: usize, rng: &mut R) -> Result<Vec<CropRect>> {
    videos
        .iter()
        .map(|v| random_crop(v.lr.width(), v.lr.height(), size, rng))
        .collect()
}

/// Uniform start frame in `0 ..= frames - len`.
pub fn sample_clip<R: Rng + ?Sized>(frames: usize, len: usize, rng: &mut R) -> Result<usize> {
    if len == 0 || frames < len {
        return Err(Error::invalid(format!(
            "cannot take a {len}-frame clip from {frames} frames"
        )));
    }
    Ok(rng.random_range(0..=frames - len))
}

/// Per-epoch bookkeeping: `videos · reuse` clip draws split into batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpochPlan {
    pub videos: usize,
    pub reuse: usize,
    pub clip_len: usize,
    pub crop: usize,
    pub batch: usize,
}

impl EpochPlan {
    pub fn draws(&self) -> usize {
        self.videos * self.reuse
    }

    /// Training iterations per epoch.
    pub fn iterations(&self) -> usize {
        self.draws().div_ceil(self.batch)
    }

    /// Video order for one epoch: `reuse` passes over independently shuffled video lists,
    /// so consecutive draws (and thus batches) come from distinct videos where possible.
    pub fn video_order<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.draws());
        for _ in 0..self.reuse {
            let mut pass: Vec<usize> = (0..self.videos).collect();
            pass.shuffle(rng);
            order.extend(pass);
        }
        order
    }
}
