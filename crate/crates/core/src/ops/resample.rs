use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::par;
use crate::tensor::Tensor;

/// How the horizontal axis behaves when a bilinear tap falls off the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizontalBoundary {
    Clamp,
    /// Periodic azimuth: taps wrap to the opposite border.
    Wrap,
}

struct Tap {
    i0: usize,
    i1: usize,
    frac: f32,
}

// align_corners = false: src = (dst + 0.5) * in / out - 0.5
fn taps(out: usize, len: usize, wrap: bool) -> Vec<Tap> {
    let ratio = len as f64 / out as f64;
    (0..out)
        .map(|d| {
            let mut s = (d as f64 + 0.5) * ratio - 0.5;
            if !wrap && s < 0.0 {
                s = 0.0;
            }
            let f = libm::floor(s);
            let frac = (s - f) as f32;
            let f = f as isize;
            if wrap {
                let n = len as isize;
                Tap {
                    i0: f.rem_euclid(n) as usize,
                    i1: (f + 1).rem_euclid(n) as usize,
                    frac,
                }
            } else {
                let i0 = (f as usize).min(len - 1);
                Tap {
                    i0,
                    i1: (i0 + 1).min(len - 1),
                    frac: if i0 == len - 1 { 0.0 } else { frac },
                }
            }
        })
        .collect()
}

/// Bilinear resampling with the half-pixel (`align_corners = false`)
/// convention and clamped borders.
pub fn bilinear_upsample(x: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    bilinear_resize(x, out_h, out_w, HorizontalBoundary::Clamp)
}

/// Bilinear resampling; rows are always clamped, columns per `boundary`.
pub fn bilinear_resize(
    x: &Tensor,
    out_h: usize,
    out_w: usize,
    boundary: HorizontalBoundary,
) -> Result<Tensor> {
    let (c, h, w) = x.shape();
    if out_h == 0 || out_w == 0 || h == 0 || w == 0 {
        return Err(invalid!("resize {h}x{w} -> {out_h}x{out_w}"));
    }
    let rows = taps(out_h, h, false);
    let cols = taps(out_w, w, boundary == HorizontalBoundary::Wrap);
    let mut out = Tensor::zeros(c, out_h, out_w);
    par::for_each_chunk(out.data_mut(), out_h * out_w, |ch, dst| {
        let plane = x.plane(ch);
        for (oy, ty) in rows.iter().enumerate() {
            let r0 = &plane[ty.i0 * w..(ty.i0 + 1) * w];
            let r1 = &plane[ty.i1 * w..(ty.i1 + 1) * w];
            for (ox, tx) in cols.iter().enumerate() {
                let top = (1.0 - tx.frac) * r0[tx.i0] + tx.frac * r0[tx.i1];
                let bottom = (1.0 - tx.frac) * r1[tx.i0] + tx.frac * r1[tx.i1];
                dst[oy * out_w + ox] = (1.0 - ty.frac) * top + ty.frac * bottom;
            }
        }
    });
    Ok(out)
}
