use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::ops::{warp, warp_backward};

/// Clip loss split into its two terms; `total = content + warp_weight · warp`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub content: f64,
    pub warp: f64,
}

impl LossValue {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.content.is_finite() && self.warp.is_finite()
    }

    pub(crate) fn mean(values: &[LossValue]) -> LossValue {
        let n = values.len() as f64;
        let mut acc = LossValue::default();
        for v in values {
            acc.total += v.total;
            acc.content += v.content;
            acc.warp += v.warp;
        }
        LossValue {
            total: acc.total / n,
            content: acc.content / n,
            warp: acc.warp / n,
        }
    }
}

/// Per-frame inputs of the clip loss.
pub struct ClipTerms<'a> {
    pub sr: &'a [Image],
    pub hr: &'a [Image],
    /// LR flow predicted at each step.
    pub flows: &'a [Image],
    /// LR frame the flow points back to (the previous frame, or the current one at a video start).
    pub prev_lr: &'a [Image],
    pub lr: &'a [Image],
}

fn check(terms: &ClipTerms<'_>) -> Result<()> {
    let l = terms.sr.len();
    if l == 0
        || terms.hr.len() != l
        || terms.flows.len() != l
        || terms.prev_lr.len() != l
        || terms.lr.len() != l
    {
        return Err(Error::shape("loss: every per-frame list must have the clip length"));
    }
    for t in 0..l {
        terms.sr[t].expect_shape(&terms.hr[t], "loss: SR vs HR")?;
        terms.prev_lr[t].expect_shape(&terms.lr[t], "loss: previous vs current LR")?;
    }
    Ok(())
}

fn mse(a: &Image, b: &Image) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data().len() as f64
}

/// Mean SR/HR squared error over the clip plus `warp_weight` times the mean squared
/// error between the flow-warped previous LR frame and the current LR frame.
pub fn loss(terms: &ClipTerms<'_>, warp_weight: f64) -> Result<LossValue> {
    check(terms)?;
    let l = terms.sr.len() as f64;
    let mut content = 0.0;
    let mut warp_term = 0.0;
    for t in 0..terms.sr.len() {
        content += mse(&terms.sr[t], &terms.hr[t]);
        if warp_weight != 0.0 {
            let w = warp(&terms.prev_lr[t], &terms.flows[t])?;
            warp_term += mse(&w, &terms.lr[t]);
        }
    }
    let content = content / l;
    let warp_term = warp_term / l;
    Ok(LossValue {
        total: content + warp_weight * warp_term,
        content,
        warp: warp_term,
    })
}

/// Gradients of [`loss`] with respect to every SR frame and every flow.
pub fn loss_gradients(terms: &ClipTerms<'_>, warp_weight: f64) -> Result<(Vec<Image>, Vec<Option<Image>>)> {
    check(terms)?;
    let l = terms.sr.len() as f64;
    let d_sr = terms
        .sr
        .iter()
        .zip(terms.hr)
        .map(|(s, h)| {
            let k = 2.0 / (l * s.data().len() as f64);
            let data = s.data().iter().zip(h.data()).map(|(a, b)| k * (a - b)).collect();
            Image::from_vec(s.height(), s.width(), s.channels(), data).expect("sized")
        })
        .collect();
    let mut d_flow = Vec::with_capacity(terms.sr.len());
    for t in 0..terms.sr.len() {
        if warp_weight == 0.0 {
            d_flow.push(None);
            continue;
        }
        let w = warp(&terms.prev_lr[t], &terms.flows[t])?;
        let k = 2.0 * warp_weight / (l * w.data().len() as f64);
        let g = w.map(|v| v * k);
        let mut g = g;
        for (gv, c) in g.data_mut().iter_mut().zip(terms.lr[t].data()) {
            *gv -= k * c;
        }
        let (_, df) = warp_backward(&terms.prev_lr[t], &terms.flows[t], &g, false);
        d_flow.push(Some(df));
    }
    Ok((d_sr, d_flow))
}
