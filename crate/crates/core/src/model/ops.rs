//! Differentiable image operators used by the recurrent step. Each forward has a
//! matching `*_backward` that maps an output gradient to input gradients.

use crate::error::{Error, Result};
use crate::image::Image;

#[inline]
pub fn leaky_relu(z: f64, slope: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        slope * z
    }
}

pub fn leaky_relu_image(z: &Image, slope: f64) -> Image {
    z.map(|v| leaky_relu(v, slope))
}

/// In-place `grad *= f'(pre)`.
pub fn leaky_relu_backward(pre: &Image, grad: &mut Image, slope: f64) {
    for (g, &z) in grad.data_mut().iter_mut().zip(pre.data()) {
        if z <= 0.0 {
            *g *= slope;
        }
    }
}

/// One axis of a half-pixel-centred bilinear resize.
#[derive(Clone, Copy)]
struct Tap {
    i0: usize,
    i1: usize,
    w: f64,
}

fn resize_taps(src: usize, dst: usize) -> Vec<Tap> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = (s.floor() as usize).min(src.saturating_sub(2));
            let i1 = (i0 + 1).min(src - 1);
            Tap { i0, i1, w: s - i0 as f64 }
        })
        .collect()
}

/// Bilinear resize with half-pixel centres and edge clamping.
pub fn resize_bilinear(img: &Image, out_h: usize, out_w: usize) -> Image {
    let (h, w, c) = img.shape();
    let ty = resize_taps(h, out_h);
    let tx = resize_taps(w, out_w);
    let mut out = Image::zeros(out_h, out_w, c);
    let od = out.data_mut();
    for (y, a) in ty.iter().enumerate() {
        for (x, b) in tx.iter().enumerate() {
            let o = (y * out_w + x) * c;
            let p00 = img.pixel(a.i0, b.i0);
            let p01 = img.pixel(a.i0, b.i1);
            let p10 = img.pixel(a.i1, b.i0);
            let p11 = img.pixel(a.i1, b.i1);
            for ch in 0..c {
                let top = p00[ch] * (1.0 - b.w) + p01[ch] * b.w;
                let bot = p10[ch] * (1.0 - b.w) + p11[ch] * b.w;
                od[o + ch] = top * (1.0 - a.w) + bot * a.w;
            }
        }
    }
    out
}

/// Adjoint of [`resize_bilinear`].
pub fn resize_bilinear_backward(grad_out: &Image, in_h: usize, in_w: usize) -> Image {
    let (out_h, out_w, c) = grad_out.shape();
    let ty = resize_taps(in_h, out_h);
    let tx = resize_taps(in_w, out_w);
    let mut grad = Image::zeros(in_h, in_w, c);
    for (y, a) in ty.iter().enumerate() {
        for (x, b) in tx.iter().enumerate() {
            let g = grad_out.pixel(y, x).to_vec();
            for (ch, gv) in g.iter().enumerate() {
                let top = gv * (1.0 - a.w);
                let bot = gv * a.w;
                let i = grad.index(a.i0, b.i0, ch);
                grad.data_mut()[i] += top * (1.0 - b.w);
                let i = grad.index(a.i0, b.i1, ch);
                grad.data_mut()[i] += top * b.w;
                let i = grad.index(a.i1, b.i0, ch);
                grad.data_mut()[i] += bot * (1.0 - b.w);
                let i = grad.index(a.i1, b.i1, ch);
                grad.data_mut()[i] += bot * b.w;
            }
        }
    }
    grad
}

/// Bilinear spatial upsampling of a flow field by `scale`, converting LR pixel units to HR units.
pub fn upscale_flow(flow: &Image, scale: usize) -> Result<Image> {
    if flow.channels() != 2 {
        return Err(Error::shape("flow must have 2 channels"));
    }
    if scale == 0 {
        return Err(Error::invalid("scale must be at least 1"));
    }
    let s = scale as f64;
    Ok(resize_bilinear(flow, flow.height() * scale, flow.width() * scale).map(|v| v * s))
}

pub fn upscale_flow_backward(grad_out: &Image, scale: usize) -> Image {
    let s = scale as f64;
    let g = resize_bilinear_backward(grad_out, grad_out.height() / scale, grad_out.width() / scale);
    g.map(|v| v * s)
}

/// Clamped sample coordinate along one axis: `(i0, i1, frac, inside)`.
#[inline]
fn sample_axis(pos: f64, n: usize) -> (usize, usize, f64, bool) {
    let max = (n - 1) as f64;
    let inside = pos > 0.0 && pos < max;
    let p = pos.clamp(0.0, max);
    let i0 = (p.floor() as usize).min(n.saturating_sub(2));
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, p - i0 as f64, inside)
}

fn check_warp(img: &Image, flow: &Image) -> Result<()> {
    if flow.channels() != 2 || img.height() != flow.height() || img.width() != flow.width() {
        return Err(Error::shape(format!(
            "warp: image {:?} vs flow {:?}",
            img.shape(),
            flow.shape()
        )));
    }
    Ok(())
}

/// Backward warp: `out(y, x) = img(y + flow_y, x + flow_x)` with bilinear sampling and
/// border clamping. Flow channel 0 is the x displacement, channel 1 the y displacement.
pub fn warp(img: &Image, flow: &Image) -> Result<Image> {
    check_warp(img, flow)?;
    let (h, w, c) = img.shape();
    let mut out = Image::zeros(h, w, c);
    let od = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            let f = flow.pixel(y, x);
            let (x0, x1, wx, _) = sample_axis(x as f64 + f[0], w);
            let (y0, y1, wy, _) = sample_axis(y as f64 + f[1], h);
            let (p00, p01, p10, p11) = (img.pixel(y0, x0), img.pixel(y0, x1), img.pixel(y1, x0), img.pixel(y1, x1));
            let o = (y * w + x) * c;
            for ch in 0..c {
                let top = p00[ch] * (1.0 - wx) + p01[ch] * wx;
                let bot = p10[ch] * (1.0 - wx) + p11[ch] * wx;
                od[o + ch] = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    Ok(out)
}

/// Gradients of [`warp`] with respect to the image and the flow.
pub fn warp_backward(img: &Image, flow: &Image, grad_out: &Image, want_image_grad: bool) -> (Option<Image>, Image) {
    let (h, w, c) = img.shape();
    let mut g_img = want_image_grad.then(|| Image::zeros(h, w, c));
    let mut g_flow = Image::zeros(h, w, 2);
    for y in 0..h {
        for x in 0..w {
            let f = flow.pixel(y, x);
            let (x0, x1, wx, in_x) = sample_axis(x as f64 + f[0], w);
            let (y0, y1, wy, in_y) = sample_axis(y as f64 + f[1], h);
            let (p00, p01, p10, p11) = (img.pixel(y0, x0), img.pixel(y0, x1), img.pixel(y1, x0), img.pixel(y1, x1));
            let g = grad_out.pixel(y, x);
            let (mut dfx, mut dfy) = (0.0, 0.0);
            for ch in 0..c {
                let top = p00[ch] * (1.0 - wx) + p01[ch] * wx;
                let bot = p10[ch] * (1.0 - wx) + p11[ch] * wx;
                dfy += g[ch] * (bot - top);
                dfx += g[ch] * ((1.0 - wy) * (p01[ch] - p00[ch]) + wy * (p11[ch] - p10[ch]));
            }
            if in_x {
                g_flow.set(y, x, 0, dfx);
            }
            if in_y {
                g_flow.set(y, x, 1, dfy);
            }
            if let Some(gi) = g_img.as_mut() {
                for ch in 0..c {
                    let gv = g[ch];
                    let d = gi.data_mut();
                    d[(y0 * w + x0) * c + ch] += gv * (1.0 - wy) * (1.0 - wx);
                    d[(y0 * w + x1) * c + ch] += gv * (1.0 - wy) * wx;
                    d[(y1 * w + x0) * c + ch] += gv * wy * (1.0 - wx);
                    d[(y1 * w + x1) * c + ch] += gv * wy * wx;
                }
            }
        }
    }
    (g_img, g_flow)
}

/// `[H, W, C] → [H/f, W/f, C·f²]`; block offset `(dy, dx)` lands in channel group `dy·f + dx`.
pub fn space_to_depth(img: &Image, factor: usize) -> Result<Image> {
    let (h, w, c) = img.shape();
    if factor == 0 || h % factor != 0 || w % factor != 0 {
        return Err(Error::invalid(format!(
            "space_to_depth: {h}x{w} not divisible by {factor}"
        )));
    }
    let (oh, ow, oc) = (h / factor, w / factor, c * factor * factor);
    let mut out = Image::zeros(oh, ow, oc);
    let od = out.data_mut();
    for y in 0..oh {
        for x in 0..ow {
            for dy in 0..factor {
                for dx in 0..factor {
                    let src = img.pixel(y * factor + dy, x * factor + dx);
                    let o = (y * ow + x) * oc + (dy * factor + dx) * c;
                    od[o..o + c].copy_from_slice(src);
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`space_to_depth`].
pub fn depth_to_space(img: &Image, factor: usize) -> Result<Image> {
    let (h, w, oc) = img.shape();
    if factor == 0 || oc % (factor * factor) != 0 {
        return Err(Error::invalid(format!(
            "depth_to_space: {oc} channels not divisible by {}",
            factor * factor
        )));
    }
    let c = oc / (factor * factor);
    let (ow, _) = (w * factor, h * factor);
    let mut out = Image::zeros(h * factor, w * factor, c);
    let od = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            let src = img.pixel(y, x);
            for dy in 0..factor {
                for dx in 0..factor {
                    let o = ((y * factor + dy) * ow + x * factor + dx) * c;
                    let s = (dy * factor + dx) * c;
                    od[o..o + c].copy_from_slice(&src[s..s + c]);
                }
            }
        }
    }
    Ok(out)
}
