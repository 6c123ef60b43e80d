use alloc::vec::Vec;

use super::pad::{pad, PaddingSpec};
use super::window_count;
use crate::error::{invalid, Result};
use crate::par;
use crate::tensor::Tensor;

/// Max over `kernel × kernel` windows. Padded cells hold zero (or the ring /
/// neighbour columns), so inputs are expected to be non-negative, as they are
/// after a ReLU.
pub fn maxpool2d(x: &Tensor, kernel: usize, stride: usize, spec: &PaddingSpec) -> Result<Tensor> {
    if kernel == 0 || stride == 0 {
        return Err(invalid!("pool kernel and stride must be positive"));
    }
    let padded;
    let src = if spec.is_empty() {
        x
    } else {
        padded = pad(x, spec)?;
        &padded
    };
    let (c, h, w) = src.shape();
    let (oh, ow) = match (
        window_count(h, 0, kernel, stride),
        window_count(w, 0, kernel, stride),
    ) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(invalid!("{kernel}x{kernel} pool does not fit {h}x{w}")),
    };
    let mut out = Tensor::zeros(c, oh, ow);
    par::for_each_chunk(out.data_mut(), oh * ow, |ch, dst| {
        let plane = src.plane(ch);
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f32::NEG_INFINITY;
                for ky in 0..kernel {
                    let row = &plane[(oy * stride + ky) * w..];
                    for kx in 0..kernel {
                        m = m.max(row[ox * stride + kx]);
                    }
                }
                dst[oy * ow + ox] = m;
            }
        }
    });
    Ok(out)
}

/// Per-channel mean over all spatial positions.
pub fn global_avg_pool(x: &Tensor) -> Vec<f32> {
    let n = x.plane_len() as f32;
    (0..x.channels())
        .map(|c| x.plane(c).iter().fold(0.0f32, |acc, &v| acc + v) / n)
        .collect()
}

fn bin(i: usize, out: usize, len: usize) -> (usize, usize) {
    let start = i * len / out;
    let end = ((i + 1) * len).div_ceil(out);
    (start, end.max(start + 1))
}

/// Average over the adaptive grid bins `[floor(i·H/oh), ceil((i+1)·H/oh))`.
/// Each bin is summed row-major, so a `1 × 1` grid reproduces
/// [`global_avg_pool`] exactly.
pub fn adaptive_avg_pool(x: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    if out_h == 0 || out_w == 0 {
        return Err(invalid!("adaptive pool to an empty grid"));
    }
    let (c, h, w) = x.shape();
    if h == 0 || w == 0 {
        return Err(invalid!("adaptive pool of an empty map"));
    }
    let mut out = Tensor::zeros(c, out_h, out_w);
    par::for_each_chunk(out.data_mut(), out_h * out_w, |ch, dst| {
        let plane = x.plane(ch);
        for i in 0..out_h {
            let (y0, y1) = bin(i, out_h, h);
            for j in 0..out_w {
                let (x0, x1) = bin(j, out_w, w);
                let mut acc = 0.0f32;
                for y in y0..y1 {
                    for v in &plane[y * w + x0..y * w + x1] {
                        acc += v;
                    }
                }
                dst[i * out_w + j] = acc / ((y1 - y0) * (x1 - x0)) as f32;
            }
        }
    });
    Ok(out)
}

/// Mean over a circular horizontal window of `window` columns. Column `j`
/// averages `j - (window-1)/2 ..` onward, read modulo the width, which makes
/// the operator exactly equivariant to circular column shifts.
pub fn circular_box_mean(x: &Tensor, window: usize) -> Result<Tensor> {
    let (c, h, w) = x.shape();
    if window == 0 || window > w {
        return Err(invalid!("circular window {window} for width {w}"));
    }
    let back = (window - 1) / 2;
    let mut out = Tensor::zeros(c, h, w);
    par::for_each_chunk(out.data_mut(), h * w, |ch, dst| {
        for y in 0..h {
            let row = x.row(ch, y);
            for j in 0..w {
                let start = j + w - back;
                let mut acc = 0.0f32;
                for k in 0..window {
                    acc += row[(start + k) % w];
                }
                dst[y * w + j] = acc / window as f32;
            }
        }
    });
    Ok(out)
}
