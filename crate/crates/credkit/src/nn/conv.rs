//! Batched 2-d cross-correlation with zero "same" padding and ceil-mode
//! strided output, the downsampling workhorse of the conv stages.

use super::real::Real;
use super::tensor::Tensor;
use crate::error::{CredError, Result};
use crate::rng::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    /// [out_ch, in_ch, kh, kw]
    pub kernel: Tensor<T>,
    /// [out_ch]
    pub bias: Tensor<T>,
}

impl<T: Real> ConvParams<T> {
    pub fn zeros(in_ch: usize, out_ch: usize, kh: usize, kw: usize) -> Self {
        ConvParams {
            kernel: Tensor::zeros(&[out_ch, in_ch, kh, kw]),
            bias: Tensor::zeros(&[out_ch]),
        }
    }

    /// Scaled-normal init with variance 2/fan_in; biases zero.
    pub fn init(in_ch: usize, out_ch: usize, kh: usize, kw: usize, rng: &mut Rng) -> Self {
        let std = (2.0 / (in_ch * kh * kw) as f64).sqrt();
        let mut p = Self::zeros(in_ch, out_ch, kh, kw);
        for v in &mut p.kernel.data {
            *v = T::from_f64(rng.next_gauss() * std);
        }
        p
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape[1]
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape[0]
    }
}

/// Output length and leading pad for one dimension under "same" padding:
/// out = ceil(dim/stride), pad split evenly with the extra cell trailing.
fn same_pad(dim: usize, k: usize, stride: usize) -> (usize, usize) {
    let out = dim.div_ceil(stride);
    let total = ((out - 1) * stride + k).saturating_sub(dim);
    (out, total / 2)
}

/// x: [N, C_in, H, W] -> [N, C_out, ceil(H/sh), ceil(W/sw)].
pub fn conv2d<T: Real>(
    x: &Tensor<T>,
    p: &ConvParams<T>,
    stride: (usize, usize),
) -> Result<Tensor<T>> {
    let [n, c_in, h, w] = dims4(x)?;
    if c_in != p.in_channels() {
        return Err(CredError::ShapeMismatch(format!(
            "conv expects {} input channels, got {c_in}",
            p.in_channels()
        )));
    }
    let (kh, kw) = (p.kernel.shape[2], p.kernel.shape[3]);
    if h < kh || w < kw {
        return Err(CredError::ShapeMismatch(format!(
            "conv input {h}x{w} smaller than kernel {kh}x{kw}"
        )));
    }
    let (sh, sw) = stride;
    let (oh, pad_h) = same_pad(h, kh, sh);
    let (ow, pad_w) = same_pad(w, kw, sw);
    let c_out = p.out_channels();

    let mut out = Tensor::zeros(&[n, c_out, oh, ow]);
    let sample_in = c_in * h * w;
    let sample_out = c_out * oh * ow;
    out.data
        .par_chunks_mut(sample_out)
        .zip(x.data.par_chunks(sample_in))
        .for_each(|(ob, xb)| {
            for co in 0..c_out {
                let kbase = co * c_in * kh * kw;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = p.bias.data[co];
                        for ci in 0..c_in {
                            let xc = &xb[ci * h * w..(ci + 1) * h * w];
                            let kc =
                                &p.kernel.data[kbase + ci * kh * kw..kbase + (ci + 1) * kh * kw];
                            for ky in 0..kh {
                                let iy = (oy * sh + ky) as isize - pad_h as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let xrow = &xc[iy as usize * w..(iy as usize + 1) * w];
                                let krow = &kc[ky * kw..(ky + 1) * kw];
                                for kx in 0..kw {
                                    let ix = (ox * sw + kx) as isize - pad_w as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    acc += krow[kx] * xrow[ix as usize];
                                }
                            }
                        }
                        ob[co * oh * ow + oy * ow + ox] = acc;
                    }
                }
            }
        });
    Ok(out)
}

/// Gradients of conv2d: returns (dx, dkernel/dbias). Per-sample kernel
/// gradients are reduced in sample order so the result is thread-count
/// independent.
pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    p: &ConvParams<T>,
    stride: (usize, usize),
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, ConvParams<T>)> {
    let [n, c_in, h, w] = dims4(x)?;
    let (kh, kw) = (p.kernel.shape[2], p.kernel.shape[3]);
    let (sh, sw) = stride;
    let (oh, pad_h) = same_pad(h, kh, sh);
    let (ow, pad_w) = same_pad(w, kw, sw);
    let c_out = p.out_channels();
    if dy.shape != [n, c_out, oh, ow] {
        return Err(CredError::ShapeMismatch(format!(
            "conv backward: dy {:?}, expected {:?}",
            dy.shape,
            [n, c_out, oh, ow]
        )));
    }

    let sample_in = c_in * h * w;
    let sample_out = c_out * oh * ow;
    let mut dx = x.zeros_like();

    let per_sample: Vec<ConvParams<T>> = dx
        .data
        .par_chunks_mut(sample_in)
        .zip(x.data.par_chunks(sample_in))
        .zip(dy.data.par_chunks(sample_out))
        .map(|((dxb, xb), dyb)| {
            let mut g = ConvParams::zeros(c_in, c_out, kh, kw);
            for co in 0..c_out {
                let kbase = co * c_in * kh * kw;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let gout = dyb[co * oh * ow + oy * ow + ox];
                        g.bias.data[co] += gout;
                        for ci in 0..c_in {
                            for ky in 0..kh {
                                let iy = (oy * sh + ky) as isize - pad_h as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..kw {
                                    let ix = (ox * sw + kx) as isize - pad_w as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let xi = ci * h * w + iy as usize * w + ix as usize;
                                    let ki = kbase + ci * kh * kw + ky * kw + kx;
                                    g.kernel.data[ki] += gout * xb[xi];
                                    dxb[xi] += gout * p.kernel.data[ki];
                                }
                            }
                        }
                    }
                }
            }
            g
        })
        .collect();

    let mut grads = ConvParams::zeros(c_in, c_out, kh, kw);
    for g in &per_sample {
        grads.kernel.accumulate(&g.kernel);
        grads.bias.accumulate(&g.bias);
    }
    Ok((dx, grads))
}

fn dims4<T: Real>(x: &Tensor<T>) -> Result<[usize; 4]> {
    if x.shape.len() != 4 {
        return Err(CredError::ShapeMismatch(format!(
            "conv expects [N, C, H, W], got {:?}",
            x.shape
        )));
    }
    Ok([x.shape[0], x.shape[1], x.shape[2], x.shape[3]])
}
