//! Video tensors, frame-directory I/O, luma conversion and the HR→LR degradation.

mod color;
mod degrade;
mod io;

pub use color::rgb_to_y;
pub use degrade::{degrade, degrade_frame, gaussian_kernel};
pub use io::{frame_file_name, list_frame_files, load_frame, load_video, save_video};

use crate::error::{Error, Result};
use crate::image::Image;

/// `[T, H, W, C]` video with intensities in `[0, 1]` and `C ∈ {1, 3}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoTensor {
    frames: Vec<Image>,
}

impl VideoTensor {
    pub fn new(frames: Vec<Image>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("video must have at least one frame"))?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::invalid("frames must be at least 1x1"));
        }
        if shape.2 != 1 && shape.2 != 3 {
            return Err(Error::invalid(format!(
                "video frames must have 1 or 3 channels, got {}",
                shape.2
            )));
        }
        for (t, f) in frames.iter().enumerate() {
            if f.shape() != shape {
                return Err(Error::shape(format!(
                    "frame {t} has shape {:?}, frame 0 has {:?}",
                    f.shape(),
                    shape
                )));
            }
            if !f.in_unit_range() {
                return Err(Error::invalid(format!("frame {t} has values outside [0,1]")));
            }
        }
        Ok(Self { frames })
    }

    /// Clamps every frame into `[0, 1]` before wrapping; used for model outputs.
    pub fn from_clamped(frames: Vec<Image>) -> Result<Self> {
        Self::new(frames.iter().map(Image::clamp01).collect())
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn channels(&self) -> usize {
        self.frames[0].channels()
    }

    /// `[T, H, W, C]`
    pub fn shape(&self) -> [usize; 4] {
        [
            self.frame_count(),
            self.height(),
            self.width(),
            self.channels(),
        ]
    }

    pub fn frame(&self, t: usize) -> &Image {
        &self.frames[t]
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Image> {
        self.frames
    }

    /// Temporal concatenation.
    pub fn concat(parts: &[VideoTensor]) -> Result<VideoTensor> {
        VideoTensor::new(parts.iter().flat_map(|v| v.frames.iter().cloned()).collect())
    }

    /// Same spatial window in every frame.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<VideoTensor> {
        let frames = self
            .frames
            .iter()
            .map(|f| f.crop(x, y, w, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(VideoTensor { frames })
    }

    pub fn max_abs_diff(&self, other: &VideoTensor) -> f64 {
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}
