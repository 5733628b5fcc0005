use super::VideoTensor;
use crate::error::{Error, Result};
use crate::image::Image;

/// Sampled Gaussian truncated at radius `ceil(3σ)` and renormalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Mirror index without repeating the edge sample (`d c b | a b c d | c b a`).
#[inline]
fn reflect(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let m = i.rem_euclid(period);
    if m < n as i64 {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Blurs one frame and keeps every `scale`-th pixel starting at (0, 0).
pub fn degrade_frame(frame: &Image, kernel: &[f64], scale: usize) -> Result<Image> {
    let (h, w, c) = frame.shape();
    if scale == 0 || h % scale != 0 || w % scale != 0 {
        return Err(Error::invalid(format!(
            "frame {h}x{w} not divisible by scale {scale}"
        )));
    }
    let radius = (kernel.len() / 2) as i64;
    let (oh, ow) = (h / scale, w / scale);

    // horizontal pass, only at the columns that survive decimation
    let mut rows = vec![0.0; h * ow * c];
    for y in 0..h {
        for ox in 0..ow {
            let cx = (ox * scale) as i64;
            let dst = &mut rows[(y * ow + ox) * c..(y * ow + ox + 1) * c];
            for (j, &kw) in kernel.iter().enumerate() {
                let sx = reflect(cx + j as i64 - radius, w);
                let src = frame.pixel(y, sx);
                for ch in 0..c {
                    dst[ch] += kw * src[ch];
                }
            }
        }
    }

    let mut out = Image::zeros(oh, ow, c);
    let od = out.data_mut();
    for oy in 0..oh {
        let cy = (oy * scale) as i64;
        for (j, &kw) in kernel.iter().enumerate() {
            let sy = reflect(cy + j as i64 - radius, h);
            let src = &rows[sy * ow * c..(sy + 1) * ow * c];
            let dst = &mut od[oy * ow * c..(oy + 1) * ow * c];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kw * s;
            }
        }
    }
    Ok(out)
}

/// Gaussian blur (std `sigma`, reflection borders) followed by `scale`× decimation of every frame.
pub fn degrade(hr: &VideoTensor, sigma: f64, scale: usize) -> Result<VideoTensor> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let frames = hr
        .frames()
        .iter()
        .map(|f| degrade_frame(f, &kernel, scale).map(|f| f.clamp01()))
        .collect::<Result<Vec<_>>>()?;
    VideoTensor::new(frames)
}
