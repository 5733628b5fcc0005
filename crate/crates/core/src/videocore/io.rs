use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, RgbImage};

use super::VideoTensor;
use crate::error::{Error, Result};
use crate::image::Image;

/// Zero-padded frame file name for temporal index `t`.
pub fn frame_file_name(t: usize) -> String {
    format!("{t:08}.png")
}

/// PNG files in `dir`, lexicographically ordered. Other files are ignored.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let entries = fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Decodes one PNG (or other supported) frame into `[0, 1]` values.
pub fn load_frame(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let to_unit = |b: &u8| *b as f64 / 255.0;
    match img {
        DynamicImage::ImageLuma8(g) => Image::from_vec(h, w, 1, g.as_raw().iter().map(to_unit).collect()),
        other => {
            let rgb = other.to_rgb8();
            Image::from_vec(h, w, 3, rgb.as_raw().iter().map(to_unit).collect())
        }
    }
}

/// Reads every PNG frame of `dir` in lexicographic order, scaling 8-bit values into `[0, 1]`.
pub fn load_video(dir: &Path) -> Result<VideoTensor> {
    let files = list_frame_files(dir)?;
    if files.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    let mut frames: Vec<Image> = Vec::with_capacity(files.len());
    for path in &files {
        let frame = load_frame(path)?;
        if let Some(first) = frames.first() {
            if first.shape() != frame.shape() {
                return Err(Error::FrameDimensions {
                    path: path.clone(),
                    want_w: first.width(),
                    want_h: first.height(),
                    got_w: frame.width(),
                    got_h: frame.height(),
                });
            }
        }
        frames.push(frame);
    }
    VideoTensor::new(frames)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes one PNG per frame with zero-padded numeric names, creating `dir` if needed.
pub fn save_video(video: &VideoTensor, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    for (t, frame) in video.frames().iter().enumerate() {
        let path = dir.join(frame_file_name(t));
        let (h, w, c) = frame.shape();
        let bytes: Vec<u8> = frame.data().iter().map(|&v| quantize(v)).collect();
        let dynimg = if c == 1 {
            DynamicImage::ImageLuma8(GrayImage::from_raw(w as u32, h as u32, bytes).expect("sized buffer"))
        } else {
            DynamicImage::ImageRgb8(RgbImage::from_raw(w as u32, h as u32, bytes).expect("sized buffer"))
        };
        dynimg.save(&path).map_err(|e| Error::Write {
            path: path.clone(),
            source: std::io::Error::other(e.to_string()),
        })?;
    }
    Ok(())
}
