//! PSNR and SSIM on the BT.601 luma plane, per-frame quality histories and set means.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bptt::VideoPair;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{init_state, InitKind, RecurrentVsr};
use crate::videocore::{gaussian_kernel, rgb_to_y, VideoTensor};

/// PSNR reported for identical frames.
pub const PSNR_CAP: f64 = 100.0;

const SSIM_WINDOW_SIGMA: f64 = 1.5;
const SSIM_WINDOW: usize = 11;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn check_luma(a: &Image, b: &Image) -> Result<()> {
    a.expect_shape(b, "metric inputs")?;
    if a.channels() != 1 {
        return Err(Error::shape("luma metrics need single-channel planes"));
    }
    Ok(())
}

/// PSNR between two `[0, 1]` luma planes, measured on the 0–255 scale.
pub fn psnr_luma(a: &Image, b: &Image) -> Result<f64> {
    check_luma(a, b)?;
    let n = a.data().len() as f64;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = 255.0 * (x - y);
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP))
}

/// PSNR on the luma of two RGB frames, after clamping both into `[0, 1]`.
pub fn psnr_y(a: &Image, b: &Image) -> Result<f64> {
    a.expect_shape(b, "psnr_y")?;
    psnr_luma(&rgb_to_y(&a.clamp01())?, &rgb_to_y(&b.clamp01())?)
}

/// Separable "valid" filtering of a single-channel plane with a symmetric kernel.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (oh, ow) = (h + 1 - n, w + 1 - n);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Single-scale SSIM of two `[0, 1]` luma planes on the 0–255 scale: 11×11 Gaussian
/// window (σ = 1.5), K1 = 0.01, K2 = 0.03, mean over the valid region.
pub fn ssim_luma(a: &Image, b: &Image) -> Result<f64> {
    check_luma(a, b)?;
    let (h, w, _) = a.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::shape(format!(
            "SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let x: Vec<f64> = a.data().iter().map(|v| v * 255.0).collect();
    let y: Vec<f64> = b.data().iter().map(|v| v * 255.0).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let k = gaussian_window();
    let (mu_x, _, _) = filter_valid(&x, h, w, &k);
    let (mu_y, _, _) = filter_valid(&y, h, w, &k);
    let (s_xx, _, _) = filter_valid(&xx, h, w, &k);
    let (s_yy, _, _) = filter_valid(&yy, h, w, &k);
    let (s_xy, _, _) = filter_valid(&xy, h, w, &k);
    let c1 = (K1 * 255.0).powi(2);
    let c2 = (K2 * 255.0).powi(2);
    let n = mu_x.len() as f64;
    let sum: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = s_xx[i] - mx * mx;
            let vy = s_yy[i] - my * my;
            let cov = s_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(sum / n)
}

fn gaussian_window() -> Vec<f64> {
    // σ = 1.5 truncated at radius 5 is exactly the 11-tap window
    let k = gaussian_kernel(SSIM_WINDOW_SIGMA);
    debug_assert_eq!(k.len(), SSIM_WINDOW);
    k
}

/// SSIM on the luma of two RGB frames, after clamping both into `[0, 1]`.
pub fn ssim_y(a: &Image, b: &Image) -> Result<f64> {
    a.expect_shape(b, "ssim_y")?;
    ssim_luma(&rgb_to_y(&a.clamp01())?, &rgb_to_y(&b.clamp01())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetric {
    pub video_id: String,
    pub frame: usize,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub video_id: String,
    pub records: Vec<FrameMetric>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

impl MetricSeries {
    pub fn from_records(video_id: impl Into<String>, records: Vec<FrameMetric>) -> Self {
        let n = records.len().max(1) as f64;
        let mean_psnr = records.iter().map(|r| r.psnr).sum::<f64>() / n;
        let mean_ssim = records.iter().map(|r| r.ssim).sum::<f64>() / n;
        Self {
            video_id: video_id.into(),
            records,
            mean_psnr,
            mean_ssim,
        }
    }

    pub fn psnr(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.psnr).collect()
    }
}

/// Evaluation start state: zeros, or uniform noise from a fixed seed.
pub fn evaluation_state(model: &RecurrentVsr, init: InitKind, h: usize, w: usize) -> crate::model::RecurrentState {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    init_state(init, model.state_shape(h, w), &mut rng)
}

/// Runs the model over every frame of `lr` in order and returns clamped SR frames.
pub fn super_resolve(model: &RecurrentVsr, lr: &VideoTensor, init: InitKind) -> Result<Vec<Image>> {
    let mut state = evaluation_state(model, init, lr.height(), lr.width());
    let mut out = Vec::with_capacity(lr.frame_count());
    for frame in lr.frames() {
        let (sr, next) = model.advance(frame, &state)?;
        out.push(sr.clamp01());
        state = next;
    }
    Ok(out)
}

/// PSNR/SSIM of every frame when the model runs sequentially over the whole video.
pub fn per_frame_history(
    model: &RecurrentVsr,
    video_id: &str,
    lr: &VideoTensor,
    hr: &VideoTensor,
    init: InitKind,
) -> Result<MetricSeries> {
    if lr.frame_count() != hr.frame_count() {
        return Err(Error::shape(format!(
            "LR has {} frames, HR has {}",
            lr.frame_count(),
            hr.frame_count()
        )));
    }
    let scale = model.scale();
    if hr.height() != lr.height() * scale || hr.width() != lr.width() * scale {
        return Err(Error::shape(format!(
            "HR {}x{} is not {scale}x LR {}x{}",
            hr.width(),
            hr.height(),
            lr.width(),
            lr.height()
        )));
    }
    let mut state = evaluation_state(model, init, lr.height(), lr.width());
    let mut records = Vec::with_capacity(lr.frame_count());
    for (t, (l, h)) in lr.frames().iter().zip(hr.frames()).enumerate() {
        let (sr, next) = model.advance(l, &state)?;
        let sr = sr.clamp01();
        records.push(FrameMetric {
            video_id: video_id.to_string(),
            frame: t,
            psnr: psnr_y(&sr, h)?,
            ssim: ssim_y(&sr, h)?,
        });
        state = next;
    }
    Ok(MetricSeries::from_records(video_id, records))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetEvaluation {
    pub videos: Vec<MetricSeries>,
    /// Unweighted mean over videos of per-video means.
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

pub fn evaluate_set(model: &RecurrentVsr, dataset: &[VideoPair], init: InitKind) -> Result<SetEvaluation> {
    if dataset.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let videos = dataset
        .iter()
        .map(|p| per_frame_history(model, &p.name, &p.lr, &p.hr, init))
        .collect::<Result<Vec<_>>>()?;
    let n = videos.len() as f64;
    let mean_psnr = videos.iter().map(|v| v.mean_psnr).sum::<f64>() / n;
    let mean_ssim = videos.iter().map(|v| v.mean_ssim).sum::<f64>() / n;
    Ok(SetEvaluation {
        videos,
        mean_psnr,
        mean_ssim,
    })
}

fn write_text(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn with_header(config_hash: &str, body: Vec<u8>) -> String {
    format!("# config_hash={config_hash}\n{}", String::from_utf8(body).expect("utf8 csv"))
}

/// `video_id,frame,psnr,ssim`
pub fn write_frame_csv(path: &Path, series: &MetricSeries, config_hash: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &series.records {
        w.serialize(r).map_err(|e| Error::invalid(e.to_string()))?;
    }
    write_text(path, with_header(config_hash, w.into_inner().map_err(|e| Error::invalid(e.to_string()))?))
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    set: &'a str,
    video_id: &'a str,
    frames: usize,
    mean_psnr: f64,
    mean_ssim: f64,
}

/// `set,video_id,frames,mean_psnr,mean_ssim`; one row per video plus a `*` row per set.
pub fn write_summary_csv(path: &Path, sets: &[(String, SetEvaluation)], config_hash: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (name, eval) in sets {
        for v in &eval.videos {
            w.serialize(SummaryRow {
                set: name,
                video_id: &v.video_id,
                frames: v.records.len(),
                mean_psnr: v.mean_psnr,
                mean_ssim: v.mean_ssim,
            })
            .map_err(|e| Error::invalid(e.to_string()))?;
        }
        w.serialize(SummaryRow {
            set: name,
            video_id: "*",
            frames: eval.videos.iter().map(|v| v.records.len()).sum(),
            mean_psnr: eval.mean_psnr,
            mean_ssim: eval.mean_ssim,
        })
        .map_err(|e| Error::invalid(e.to_string()))?;
    }
    write_text(path, with_header(config_hash, w.into_inner().map_err(|e| Error::invalid(e.to_string()))?))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either input is constant or lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let (a, b) = (rx[i] - mx, ry[i] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
