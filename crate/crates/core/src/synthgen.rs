//! Probe videos with exactly controlled length, motion and intensity change, the
//! palindrome extension used to build long test videos, and procedural textures
//! for self-contained training and test sets.
//!
//! Frame indices are 0-based everywhere except in [`palindrome_source_frame`],
//! which mirrors the conventional `f_1 … f_N` numbering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::videocore::VideoTensor;

/// `T` copies of one frame.
pub fn make_static(frame: &Image, frames: usize) -> Result<VideoTensor> {
    if frames < 1 {
        return Err(Error::invalid("static video needs at least one frame"));
    }
    VideoTensor::new(vec![frame.clone(); frames])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlidePath {
    HorizontalPingpong,
    DiagonalPingpong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlideSpec {
    pub window_w: usize,
    pub window_h: usize,
    /// Pixels advanced per frame.
    pub slide: usize,
    pub path: SlidePath,
}

/// Position after travelling `distance` pixels along a segment of length `range`,
/// bouncing at both ends.
pub fn pingpong(distance: usize, range: usize) -> usize {
    if range == 0 {
        return 0;
    }
    let m = distance % (2 * range);
    if m <= range {
        m
    } else {
        2 * range - m
    }
}

/// Top-left corner `(x, y)` of the window at frame `t`.
pub fn slide_offset(spec: &SlideSpec, frame_w: usize, frame_h: usize, t: usize) -> (usize, usize) {
    let d = t * spec.slide;
    let x = pingpong(d, frame_w - spec.window_w);
    let y = match spec.path {
        SlidePath::HorizontalPingpong => 0,
        SlidePath::DiagonalPingpong => pingpong(d, frame_h - spec.window_h),
    };
    (x, y)
}

/// A window cropped from `frame` and moved by `spec.slide` pixels per frame.
pub fn make_sliding(frame: &Image, spec: &SlideSpec, frames: usize) -> Result<VideoTensor> {
    if frames < 1 {
        return Err(Error::invalid("sliding video needs at least one frame"));
    }
    let (h, w, _) = frame.shape();
    if spec.window_w == 0 || spec.window_h == 0 || spec.window_w > w || spec.window_h > h {
        return Err(Error::invalid(format!(
            "window {}x{} does not fit a {w}x{h} frame",
            spec.window_w, spec.window_h
        )));
    }
    let out = (0..frames)
        .map(|t| {
            let (x, y) = slide_offset(spec, w, h, t);
            frame.crop(x, y, spec.window_w, spec.window_h)
        })
        .collect::<Result<Vec<_>>>()?;
    VideoTensor::new(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSpec {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Frames per full dark→bright→dark cycle.
    pub period: usize,
}

impl GammaSpec {
    fn validate(&self) -> Result<()> {
        if !(self.gamma_min > 0.0 && self.gamma_min <= self.gamma_max) || self.period == 0 {
            return Err(Error::invalid(format!("invalid gamma spec {self:?}")));
        }
        Ok(())
    }

    /// Triangular wave starting at `gamma_min` and peaking at `gamma_max` half a period later.
    pub fn gamma_at(&self, t: usize) -> f64 {
        let phase = (t % self.period) as f64 / self.period as f64;
        let tri = 1.0 - (1.0 - 2.0 * phase).abs();
        self.gamma_min + (self.gamma_max - self.gamma_min) * tri
    }
}

/// Static video whose frames are gamma-corrected by a time-varying exponent.
pub fn make_gamma(frame: &Image, spec: &GammaSpec, frames: usize) -> Result<VideoTensor> {
    spec.validate()?;
    if frames < 1 {
        return Err(Error::invalid("gamma video needs at least one frame"));
    }
    let out = (0..frames)
        .map(|t| {
            let g = spec.gamma_at(t);
            frame.map(|v| v.powf(g))
        })
        .collect();
    VideoTensor::new(out)
}

/// 1-based source frame for output frame `i` (1-based) of the palindrome sequence
/// `f1, f2, …, fN, fN-1, …, f2, f1, f2, …`.
pub fn palindrome_source_frame(i: usize, n: usize) -> usize {
    debug_assert!(i >= 1 && n >= 2);
    let period = 2 * n - 2;
    let m = (i - 1) % period;
    1 + m.min(period - m)
}

/// Extends a clip to `target_len` frames by bouncing between its ends.
pub fn make_palindrome(video: &VideoTensor, target_len: usize) -> Result<VideoTensor> {
    let n = video.frame_count();
    if n < 2 {
        return Err(Error::invalid("palindrome needs a source video of at least 2 frames"));
    }
    if target_len < 1 {
        return Err(Error::invalid("palindrome target length must be positive"));
    }
    let frames = (1..=target_len)
        .map(|i| video.frame(palindrome_source_frame(i, n) - 1).clone())
        .collect();
    VideoTensor::new(frames)
}

/// Deterministic texture: a sum of oriented sinusoids overlaid with flat discs and bars.
pub fn procedural_frame(height: usize, width: usize, channels: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    struct Wave {
        fx: f64,
        fy: f64,
        phase: f64,
        amp: Vec<f64>,
    }
    let waves: Vec<Wave> = (0..6)
        .map(|_| {
            let freq = rng.random_range(0.04..0.45);
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            Wave {
                fx: freq * angle.cos(),
                fy: freq * angle.sin(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                amp: (0..channels).map(|_| rng.random_range(0.3..1.0)).collect(),
            }
        })
        .collect();
    let mut img = Image::from_fn(height, width, channels, |y, x, c| {
        waves
            .iter()
            .map(|w| w.amp[c] * (w.fx * x as f64 + w.fy * y as f64 + w.phase).sin())
            .sum::<f64>()
    });
    let (lo, hi) = img
        .data()
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = (hi - lo).max(1e-12);
    img = img.map(|v| 0.1 + 0.8 * (v - lo) / span);

    let shapes = rng.random_range(3..8);
    for _ in 0..shapes {
        let cy = rng.random_range(0.0..height as f64);
        let cx = rng.random_range(0.0..width as f64);
        let r = rng.random_range(2.0..(height.min(width) as f64 / 4.0).max(3.0));
        let disc = rng.random_bool(0.5);
        let color: Vec<f64> = (0..channels).map(|_| rng.random_range(0.0..1.0)).collect();
        for y in 0..height {
            for x in 0..width {
                let (dy, dx) = (y as f64 - cy, x as f64 - cx);
                let inside = if disc {
                    dy * dy + dx * dx <= r * r
                } else {
                    dy.abs() <= r * 0.4 && dx.abs() <= r
                };
                if inside {
                    for (c, &v) in color.iter().enumerate() {
                        img.set(y, x, c, v);
                    }
                }
            }
        }
    }
    img
}

/// Kinds of procedurally generated video sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Static, slow, fast and brightness-varying videos in rotation.
    Mixed,
    Static,
    Sliding,
}

/// A reproducible set of HR videos built from procedural textures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSet {
    pub kind: SyntheticKind,
    pub videos: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    /// Per-frame displacement for `sliding` sets.
    #[serde(default = "default_slide")]
    pub slide: usize,
}

fn default_slide() -> usize {
    2
}

impl SyntheticSet {
    pub fn generate(&self) -> Result<Vec<VideoTensor>> {
        if self.videos == 0 || self.frames == 0 {
            return Err(Error::invalid("synthetic set needs at least one video and frame"));
        }
        (0..self.videos)
            .map(|v| {
                let seed = self.seed.wrapping_mul(1_000_003).wrapping_add(v as u64);
                match self.kind {
                    SyntheticKind::Static => {
                        make_static(&procedural_frame(self.height, self.width, 3, seed), self.frames)
                    }
                    SyntheticKind::Sliding => self.sliding(seed, self.slide, v),
                    SyntheticKind::Mixed => match v % 4 {
                        0 => make_static(
                            &procedural_frame(self.height, self.width, 3, seed),
                            self.frames,
                        ),
                        1 => self.sliding(seed, 1, v),
                        2 => self.sliding(seed, 4, v),
                        _ => make_gamma(
                            &procedural_frame(self.height, self.width, 3, seed),
                            &GammaSpec {
                                gamma_min: 0.6,
                                gamma_max: 1.6,
                                period: 40,
                            },
                            self.frames,
                        ),
                    },
                }
            })
            .collect()
    }

    fn sliding(&self, seed: u64, slide: usize, v: usize) -> Result<VideoTensor> {
        let margin = self.width / 2;
        let source = procedural_frame(self.height + margin, self.width + margin, 3, seed);
        let spec = SlideSpec {
            window_w: self.width,
            window_h: self.height,
            slide,
            path: if v.is_multiple_of(2) {
                SlidePath::HorizontalPingpong
            } else {
                SlidePath::DiagonalPingpong
            },
        };
        make_sliding(&source, &spec, self.frames)
    }
}
