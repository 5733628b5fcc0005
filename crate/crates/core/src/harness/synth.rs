use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::artifacts::write_file;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::synthgen::{
    make_gamma, make_palindrome, make_sliding, make_static, procedural_frame, GammaSpec, SlidePath, SlideSpec,
};
use crate::videocore::{load_frame, load_video, save_video, VideoTensor};

pub const MANIFEST: &str = "manifest.toml";

/// Where a generator's seed frame comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrameSource {
    /// First frame of an image file or frame directory.
    File { path: PathBuf },
    Procedural { height: usize, width: usize, seed: u64 },
}

impl FrameSource {
    pub fn load(&self) -> Result<Image> {
        match self {
            FrameSource::File { path } => {
                if path.is_dir() {
                    return Ok(load_video(path)?.frame(0).clone());
                }
                load_frame(path)
            }
            FrameSource::Procedural { height, width, seed } => Ok(procedural_frame(*height, *width, 3, *seed)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum SynthRequest {
    Static {
        source: FrameSource,
        length: usize,
    },
    Sliding {
        source: FrameSource,
        length: usize,
        slide: usize,
        window_w: usize,
        window_h: usize,
        path: SlidePath,
    },
    Gamma {
        source: FrameSource,
        length: usize,
        gamma_min: f64,
        gamma_max: f64,
        period: usize,
    },
    Palindrome {
        input: PathBuf,
        length: usize,
    },
}

impl SynthRequest {
    pub fn generator(&self) -> &'static str {
        match self {
            SynthRequest::Static { .. } => "static",
            SynthRequest::Sliding { .. } => "sliding",
            SynthRequest::Gamma { .. } => "gamma",
            SynthRequest::Palindrome { .. } => "palindrome",
        }
    }

    pub fn generate(&self) -> Result<VideoTensor> {
        match self {
            SynthRequest::Static { source, length } => make_static(&source.load()?, *length),
            SynthRequest::Sliding {
                source,
                length,
                slide,
                window_w,
                window_h,
                path,
            } => make_sliding(
                &source.load()?,
                &SlideSpec {
                    window_w: *window_w,
                    window_h: *window_h,
                    slide: *slide,
                    path: *path,
                },
                *length,
            ),
            SynthRequest::Gamma {
                source,
                length,
                gamma_min,
                gamma_max,
                period,
            } => make_gamma(
                &source.load()?,
                &GammaSpec {
                    gamma_min: *gamma_min,
                    gamma_max: *gamma_max,
                    period: *period,
                },
                *length,
            ),
            SynthRequest::Palindrome { input, length } => make_palindrome(&load_video(input)?, *length),
        }
    }
}

/// Writes the generated frames and a `manifest.toml` recording the request into `out`.
pub fn run_synth(request: &SynthRequest, out: &Path) -> Result<VideoTensor> {
    let video = request.generate()?;
    save_video(&video, out)?;
    let manifest = toml::to_string(request).map_err(|e| Error::invalid(e.to_string()))?;
    write_file(&out.join(MANIFEST), &format!("frames = {}\n{manifest}", video.frame_count()))?;
    Ok(video)
}
