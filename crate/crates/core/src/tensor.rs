//! Dense rank-3 feature maps.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Result};

/// Channels × height × width map of `f32`, width index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let expected = channels
            .checked_mul(height)
            .and_then(|n| n.checked_mul(width))
            .ok_or_else(|| invalid!("tensor dimensions overflow"))?;
        if data.len() != expected {
            return Err(mismatch!(
                "{} samples for a {channels}x{height}x{width} tensor",
                data.len()
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, value: f32) {
        self.data[(c * self.height + y) * self.width + x] = value;
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn row(&self, c: usize, y: usize) -> &[f32] {
        let start = (c * self.height + y) * self.width;
        &self.data[start..start + self.width]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Columns `[start, start + len)`.
    pub fn slice_width(&self, start: usize, len: usize) -> Result<Tensor> {
        if start + len > self.width {
            return Err(invalid!(
                "column range {start}..{} exceeds width {}",
                start + len,
                self.width
            ));
        }
        let mut data = Vec::with_capacity(self.channels * self.height * len);
        for c in 0..self.channels {
            for y in 0..self.height {
                data.extend_from_slice(&self.row(c, y)[start..start + len]);
            }
        }
        Ok(Tensor {
            channels: self.channels,
            height: self.height,
            width: len,
            data,
        })
    }

    /// `len` columns starting at `start`, read modulo the width.
    pub fn slice_width_circular(&self, start: isize, len: usize) -> Tensor {
        let w = self.width as isize;
        let mut data = Vec::with_capacity(self.channels * self.height * len);
        for c in 0..self.channels {
            for y in 0..self.height {
                let row = self.row(c, y);
                data.extend((0..len as isize).map(|i| row[(start + i).rem_euclid(w) as usize]));
            }
        }
        Tensor {
            channels: self.channels,
            height: self.height,
            width: len,
            data,
        }
    }

    /// Circular column shift: `out[.., x] = self[.., x - shift mod width]`.
    pub fn roll_width(&self, shift: isize) -> Tensor {
        self.slice_width_circular(-shift, self.width)
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f32> {
        if self.shape() != other.shape() {
            return Err(mismatch!("{:?} vs {:?}", self.shape(), other.shape()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max))
    }

    /// Per-pixel index of the largest channel; ties resolve to the lowest channel.
    pub fn argmax_channels(&self) -> Vec<usize> {
        let n = self.plane_len();
        (0..n)
            .map(|p| {
                let mut best = 0;
                let mut best_value = self.data[p];
                for c in 1..self.channels {
                    let v = self.data[c * n + p];
                    if v > best_value {
                        best = c;
                        best_value = v;
                    }
                }
                best
            })
            .collect()
    }

    /// Per-pixel difference between the two largest channel values.
    pub fn top2_gap(&self) -> Vec<f32> {
        let n = self.plane_len();
        (0..n)
            .map(|p| {
                let mut first = f32::NEG_INFINITY;
                let mut second = f32::NEG_INFINITY;
                for c in 0..self.channels {
                    let v = self.data[c * n + p];
                    if v > first {
                        second = first;
                        first = v;
                    } else if v > second {
                        second = v;
                    }
                }
                if self.channels < 2 {
                    f32::INFINITY
                } else {
                    first - second
                }
            })
            .collect()
    }
}
