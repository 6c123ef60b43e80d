use crate::error::{invalid, mismatch, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingMode {
    Zero,
    /// Columns copied from the opposite border.
    Ring,
    /// Columns taken from the adjacent segments' buffers.
    Neighbor,
}

/// Padding policy for one layer. Only the horizontal direction honours
/// `mode`; top and bottom rows are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddingSpec {
    pub mode: PaddingMode,
    pub pad_left: usize,
    pub pad_right: usize,
    pub pad_top: usize,
    pub pad_bottom: usize,
    /// Present iff `mode` is `Neighbor`; its rightmost `pad_left` columns fill the left border.
    pub left_buffer: Option<Tensor>,
    /// Present iff `mode` is `Neighbor`; its leftmost `pad_right` columns fill the right border.
    pub right_buffer: Option<Tensor>,
}

impl PaddingSpec {
    pub fn none() -> Self {
        Self::zero(0, 0)
    }

    pub fn zero(vertical: usize, horizontal: usize) -> Self {
        Self {
            mode: PaddingMode::Zero,
            pad_left: horizontal,
            pad_right: horizontal,
            pad_top: vertical,
            pad_bottom: vertical,
            left_buffer: None,
            right_buffer: None,
        }
    }

    pub fn ring(vertical: usize, horizontal: usize) -> Self {
        Self {
            mode: PaddingMode::Ring,
            ..Self::zero(vertical, horizontal)
        }
    }

    pub fn neighbor(vertical: usize, horizontal: usize, left: Tensor, right: Tensor) -> Self {
        Self {
            mode: PaddingMode::Neighbor,
            left_buffer: Some(left),
            right_buffer: Some(right),
            ..Self::zero(vertical, horizontal)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pad_left == 0 && self.pad_right == 0 && self.pad_top == 0 && self.pad_bottom == 0
    }
}

fn check_buffer(buffer: Option<&Tensor>, x: &Tensor, need: usize, side: &str) -> Result<()> {
    if need == 0 {
        return Ok(());
    }
    let b = buffer.ok_or_else(|| invalid!("missing {side} neighbour buffer"))?;
    if b.channels() != x.channels() || b.height() != x.height() {
        return Err(mismatch!(
            "{side} neighbour buffer is {}x{}, input is {}x{}",
            b.channels(),
            b.height(),
            x.channels(),
            x.height()
        ));
    }
    if b.width() < need {
        return Err(invalid!(
            "{side} neighbour buffer has {} columns, {need} required",
            b.width()
        ));
    }
    Ok(())
}

pub fn pad(x: &Tensor, spec: &PaddingSpec) -> Result<Tensor> {
    let (c, h, w) = x.shape();
    let (pl, pr, pt, pb) = (spec.pad_left, spec.pad_right, spec.pad_top, spec.pad_bottom);
    match spec.mode {
        PaddingMode::Ring if pl > w || pr > w => {
            return Err(invalid!("ring padding {pl}/{pr} wider than input width {w}"));
        }
        PaddingMode::Neighbor => {
            check_buffer(spec.left_buffer.as_ref(), x, pl, "left")?;
            check_buffer(spec.right_buffer.as_ref(), x, pr, "right")?;
        }
        _ => {}
    }
    let ow = w + pl + pr;
    let oh = h + pt + pb;
    let mut out = Tensor::zeros(c, oh, ow);
    let data = out.data_mut();
    for ch in 0..c {
        for y in 0..h {
            let src = x.row(ch, y);
            let base = (ch * oh + y + pt) * ow;
            let dst = &mut data[base..base + ow];
            dst[pl..pl + w].copy_from_slice(src);
            match spec.mode {
                PaddingMode::Zero => {}
                PaddingMode::Ring => {
                    dst[..pl].copy_from_slice(&src[w - pl..]);
                    dst[pl + w..].copy_from_slice(&src[..pr]);
                }
                PaddingMode::Neighbor => {
                    if pl > 0 {
                        let lb = spec.left_buffer.as_ref().map(|b| b.row(ch, y)).unwrap_or(&[]);
                        dst[..pl].copy_from_slice(&lb[lb.len() - pl..]);
                    }
                    if pr > 0 {
                        let rb = spec.right_buffer.as_ref().map(|b| b.row(ch, y)).unwrap_or(&[]);
                        dst[pl + w..].copy_from_slice(&rb[..pr]);
                    }
                }
            }
        }
    }
    Ok(out)
}
