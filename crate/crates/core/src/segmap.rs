use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Result};
use crate::tensor::Tensor;

/// Label excluded from scoring and used outside the annular ring.
pub const IGNORE_ID: u8 = 255;

/// Per-pixel class-id raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    height: usize,
    width: usize,
    ids: Vec<u8>,
}

impl SegmentationMap {
    pub fn new(height: usize, width: usize, ids: Vec<u8>) -> Result<Self> {
        if ids.len() != height * width {
            return Err(mismatch!(
                "{} labels for a {height}x{width} map",
                ids.len()
            ));
        }
        Ok(Self { height, width, ids })
    }

    pub fn filled(height: usize, width: usize, id: u8) -> Self {
        Self {
            height,
            width,
            ids: alloc::vec![id; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut ids = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                ids.push(f(y, x));
            }
        }
        Self { height, width, ids }
    }

    /// Argmax over the logit channels.
    pub fn from_logits(logits: &Tensor) -> Result<Self> {
        if logits.channels() > IGNORE_ID as usize {
            return Err(invalid!(
                "{} classes do not fit 8-bit labels below the ignore id",
                logits.channels()
            ));
        }
        let ids = logits.argmax_channels().into_iter().map(|c| c as u8).collect();
        Ok(Self {
            height: logits.height(),
            width: logits.width(),
            ids,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    pub fn into_ids(self) -> Vec<u8> {
        self.ids
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> u8 {
        self.ids[y * self.width + x]
    }

    /// Circular column shift, content moves right by `shift`.
    pub fn roll_width(&self, shift: isize) -> Self {
        let w = self.width as isize;
        Self::from_fn(self.height, self.width, |y, x| {
            self.at(y, (x as isize - shift).rem_euclid(w) as usize)
        })
    }

    /// Nearest-neighbour resampling with half-pixel centres: output index
    /// `d` reads `floor((d + 0.5) · in / out)`.
    /// An empty map resizes to all-ignore.
    pub fn resize_nearest(&self, height: usize, width: usize) -> Self {
        if self.ids.is_empty() {
            return Self::filled(height, width, IGNORE_ID);
        }
        let pick = |d: usize, out: usize, len: usize| ((2 * d + 1) * len / (2 * out)).min(len - 1);
        Self::from_fn(height, width, |y, x| {
            self.at(pick(y, height, self.height), pick(x, width, self.width))
        })
    }
}
