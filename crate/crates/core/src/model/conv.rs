//! 3×3 stride-1 zero-padded convolution over HWC images via im2col + GEMM.
//!
//! Weights are stored as a `[9·cin, cout]` row-major matrix (tap-major, then input
//! channel) followed by `cout` biases.

use crate::image::Image;

/// Rows of the im2col matrix processed at once when no backward pass is needed.
const TILE_PIXELS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Conv3x3 {
    pub cin: usize,
    pub cout: usize,
    /// Offset of the weight matrix in the flat parameter vector.
    pub offset: usize,
}

impl Conv3x3 {
    pub fn weight_len(&self) -> usize {
        9 * self.cin * self.cout
    }

    pub fn param_len(&self) -> usize {
        self.weight_len() + self.cout
    }

    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.weight_len()]
    }

    fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        let b = self.offset + self.weight_len();
        &params[b..b + self.cout]
    }

    /// im2col rows `[p0, p1)` of `x` into `cols` (`(p1-p0) × 9·cin`).
    fn im2col(&self, x: &Image, p0: usize, p1: usize, cols: &mut [f64]) {
        let (h, w, cin) = x.shape();
        let k = 9 * cin;
        cols.fill(0.0);
        for p in p0..p1 {
            let (y, xx) = (p / w, p % w);
            let row = &mut cols[(p - p0) * k..(p - p0 + 1) * k];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let tap = ky * 3 + kx;
                    row[tap * cin..(tap + 1) * cin]
                        .copy_from_slice(x.pixel(sy as usize, sx as usize));
                }
            }
        }
    }

    /// `out[rows] = cols · W + b`
    fn gemm_forward(&self, params: &[f64], cols: &[f64], rows: usize, out: &mut [f64]) {
        let k = 9 * self.cin;
        let n = self.cout;
        let bias = self.bias(params);
        for r in 0..rows {
            out[r * n..(r + 1) * n].copy_from_slice(bias);
        }
        // SAFETY: slices are sized rows×k, k×n and rows×n with the strides given.
        unsafe {
            matrixmultiply::dgemm(
                rows,
                k,
                n,
                1.0,
                cols.as_ptr(),
                k as isize,
                1,
                self.weights(params).as_ptr(),
                n as isize,
                1,
                1.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }

    /// Forward pass. With `keep_cols` the full im2col matrix is returned for the backward pass.
    pub fn forward(&self, params: &[f64], x: &Image, keep_cols: bool) -> (Image, Option<Vec<f64>>) {
        debug_assert_eq!(x.channels(), self.cin);
        let (h, w, _) = x.shape();
        let pixels = h * w;
        let k = 9 * self.cin;
        let mut out = vec![0.0; pixels * self.cout];
        if keep_cols {
            let mut cols = vec![0.0; pixels * k];
            self.im2col(x, 0, pixels, &mut cols);
            self.gemm_forward(params, &cols, pixels, &mut out);
            let img = Image::from_vec(h, w, self.cout, out).expect("sized");
            return (img, Some(cols));
        }
        let tile = TILE_PIXELS.min(pixels);
        let mut cols = vec![0.0; tile * k];
        let mut p0 = 0;
        while p0 < pixels {
            let p1 = (p0 + tile).min(pixels);
            let rows = p1 - p0;
            self.im2col(x, p0, p1, &mut cols[..rows * k]);
            self.gemm_forward(
                params,
                &cols[..rows * k],
                rows,
                &mut out[p0 * self.cout..p1 * self.cout],
            );
            p0 = p1;
        }
        (Image::from_vec(h, w, self.cout, out).expect("sized"), None)
    }

    /// Accumulates weight/bias gradients into `grad` and, if requested, returns the input gradient.
    pub fn backward(
        &self,
        params: &[f64],
        cols: &[f64],
        in_shape: (usize, usize),
        dy: &Image,
        grad: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Image> {
        let (h, w) = in_shape;
        let pixels = h * w;
        let k = 9 * self.cin;
        let n = self.cout;
        let dyd = dy.data();
        debug_assert_eq!(dyd.len(), pixels * n);
        {
            let gw = &mut grad[self.offset..self.offset + self.weight_len()];
            // SAFETY: colsᵀ is k×pixels (strides 1, k); dy is pixels×n; gw is k×n.
            unsafe {
                matrixmultiply::dgemm(
                    k,
                    pixels,
                    n,
                    1.0,
                    cols.as_ptr(),
                    1,
                    k as isize,
                    dyd.as_ptr(),
                    n as isize,
                    1,
                    1.0,
                    gw.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
        }
        let b = self.offset + self.weight_len();
        let gb = &mut grad[b..b + n];
        for row in dyd.chunks_exact(n) {
            for (g, v) in gb.iter_mut().zip(row) {
                *g += v;
            }
        }
        if !want_input_grad {
            return None;
        }
        let mut dcols = vec![0.0; pixels * k];
        // SAFETY: dy is pixels×n; Wᵀ is n×k (strides 1, n); dcols is pixels×k.
        unsafe {
            matrixmultiply::dgemm(
                pixels,
                n,
                k,
                1.0,
                dyd.as_ptr(),
                n as isize,
                1,
                self.weights(params).as_ptr(),
                1,
                n as isize,
                0.0,
                dcols.as_mut_ptr(),
                k as isize,
                1,
            );
        }
        let cin = self.cin;
        let mut dx = Image::zeros(h, w, cin);
        let dxd = dx.data_mut();
        for p in 0..pixels {
            let (y, xx) = (p / w, p % w);
            let row = &dcols[p * k..(p + 1) * k];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let tap = ky * 3 + kx;
                    let dst = (sy as usize * w + sx as usize) * cin;
                    for (d, s) in dxd[dst..dst + cin].iter_mut().zip(&row[tap * cin..(tap + 1) * cin]) {
                        *d += s;
                    }
                }
            }
        }
        Some(dx)
    }
}
