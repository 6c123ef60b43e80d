use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Result};
use crate::tensor::Tensor;

pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or_else(|| invalid!("nothing to concatenate"))?;
    let (h, w) = (first.height(), first.width());
    let mut channels = 0;
    for p in parts {
        if p.height() != h || p.width() != w {
            return Err(mismatch!(
                "channel concat of {}x{} with {h}x{w}",
                p.height(),
                p.width()
            ));
        }
        channels += p.channels();
    }
    let mut data = Vec::with_capacity(channels * h * w);
    for p in parts {
        data.extend_from_slice(p.data());
    }
    Tensor::new(channels, h, w, data)
}

pub fn concat_width(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or_else(|| invalid!("nothing to concatenate"))?;
    let (c, h) = (first.channels(), first.height());
    let mut width = 0;
    for p in parts {
        if p.channels() != c || p.height() != h {
            return Err(mismatch!(
                "width concat of {}x{} with {c}x{h}",
                p.channels(),
                p.height()
            ));
        }
        width += p.width();
    }
    let mut data = Vec::with_capacity(c * h * width);
    for ch in 0..c {
        for y in 0..h {
            for p in parts {
                data.extend_from_slice(p.row(ch, y));
            }
        }
    }
    Tensor::new(c, h, width, data)
}
