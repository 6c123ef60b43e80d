use alloc::vec::Vec;

use super::pad::{pad, PaddingSpec};
use super::window_count;
use crate::error::{invalid, mismatch, Result};
use crate::par;
use crate::tensor::Tensor;

/// Convolution weights laid out `out × in × kernel_h × kernel_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub weights: Vec<f32>,
    pub bias: Option<Vec<f32>>,
}

impl ConvParams {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        weights: Vec<f32>,
        bias: Option<Vec<f32>>,
    ) -> Result<Self> {
        let p = Self {
            out_channels,
            in_channels,
            kernel_h: kernel.0,
            kernel_w: kernel.1,
            stride,
            weights,
            bias,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.kernel_h == 0 || self.kernel_w == 0 {
            return Err(invalid!("kernel size and stride must be positive"));
        }
        let n = self.out_channels * self.in_channels * self.kernel_h * self.kernel_w;
        if self.weights.len() != n {
            return Err(mismatch!(
                "{} weights for a {}x{}x{}x{} kernel",
                self.weights.len(),
                self.out_channels,
                self.in_channels,
                self.kernel_h,
                self.kernel_w
            ));
        }
        if let Some(b) = &self.bias {
            if b.len() != self.out_channels {
                return Err(mismatch!(
                    "{} biases for {} output channels",
                    b.len(),
                    self.out_channels
                ));
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f32 {
        self.weights[((o * self.in_channels + i) * self.kernel_h + ky) * self.kernel_w + kx]
    }
}

/// Cross-correlation with bias after padding `x` by `spec`.
pub fn conv2d(x: &Tensor, p: &ConvParams, spec: &PaddingSpec) -> Result<Tensor> {
    if spec.is_empty() {
        conv2d_valid(x, p)
    } else {
        conv2d_valid(&pad(x, spec)?, p)
    }
}

/// Unpadded cross-correlation.
///
/// Each output element accumulates in-channel → kernel row → kernel column
/// from zero and adds the bias last; only the order in which elements are
/// visited is vectorised.
pub fn conv2d_valid(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    p.validate()?;
    if x.channels() != p.in_channels {
        return Err(mismatch!(
            "input has {} channels, kernel expects {}",
            x.channels(),
            p.in_channels
        ));
    }
    let (_, h, w) = x.shape();
    let oh = window_count(h, 0, p.kernel_h, p.stride);
    let ow = window_count(w, 0, p.kernel_w, p.stride);
    let (oh, ow) = match (oh, ow) {
        (Some(oh), Some(ow)) if oh > 0 && ow > 0 => (oh, ow),
        _ => {
            return Err(invalid!(
                "{}x{} kernel does not fit a {h}x{w} padded input",
                p.kernel_h,
                p.kernel_w
            ))
        }
    };
    let mut out = Tensor::zeros(p.out_channels, oh, ow);
    let stride = p.stride;
    let plane = oh * ow;
    par::for_each_chunk(out.data_mut(), plane, |o, dst| {
        for i in 0..p.in_channels {
            let src = x.plane(i);
            for ky in 0..p.kernel_h {
                for kx in 0..p.kernel_w {
                    let wv = p.weight(o, i, ky, kx);
                    for oy in 0..oh {
                        let row = &src[(oy * stride + ky) * w..(oy * stride + ky + 1) * w];
                        let acc = &mut dst[oy * ow..(oy + 1) * ow];
                        if stride == 1 {
                            for (a, &v) in acc.iter_mut().zip(&row[kx..kx + ow]) {
                                *a += wv * v;
                            }
                        } else {
                            for (ox, a) in acc.iter_mut().enumerate() {
                                *a += wv * row[ox * stride + kx];
                            }
                        }
                    }
                }
            }
        }
        if let Some(b) = &p.bias {
            for a in dst.iter_mut() {
                *a += b[o];
            }
        }
    });
    Ok(out)
}
