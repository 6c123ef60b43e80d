use alloc::vec::Vec;

use super::attention::{se_block, SeWeights};
use crate::error::{invalid, Result};
use crate::ops::{
    adaptive_avg_pool, bilinear_upsample, circular_box_mean, concat_channels, conv2d_valid,
    relu_in_place, ConvParams,
};
use crate::tensor::Tensor;

/// How a pyramid level pools along the azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SppPooling {
    /// `g × g` adaptive grid, bilinearly up-sampled back.
    Grid,
    /// Rows pooled to `g` adaptive bins; columns averaged over a circular
    /// window of `width / g` columns, so the module commutes with circular
    /// column shifts of a panorama.
    Circular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SppWeights {
    pub grid_levels: Vec<usize>,
    pub level_convs: Vec<ConvParams>,
    pub fuse: ConvParams,
    pub se: SeWeights,
}

/// Pools `x` at one pyramid level; grids larger than the map are clamped to it.
pub fn pool_level(x: &Tensor, level: usize, pooling: SppPooling) -> Result<Tensor> {
    if level == 0 {
        return Err(invalid!("pyramid level must be positive"));
    }
    let (_, h, w) = x.shape();
    let gh = level.min(h);
    match pooling {
        SppPooling::Grid => adaptive_avg_pool(x, gh, level.min(w)),
        SppPooling::Circular => {
            let rows = adaptive_avg_pool(x, gh, w)?;
            circular_box_mean(&rows, (w / level).max(1))
        }
    }
}

/// Spatial pyramid pooling followed by channel attention.
///
/// Each level is pooled, passed through its 1×1 convolution and ReLU, and
/// up-sampled to the input size; `[x, levels…]` is fused by a 1×1
/// convolution with ReLU and recalibrated by squeeze-excite.
pub fn spp_forward(x: &Tensor, weights: &SppWeights, pooling: SppPooling) -> Result<Tensor> {
    if weights.grid_levels.len() != weights.level_convs.len() {
        return Err(invalid!(
            "{} pyramid levels but {} level convolutions",
            weights.grid_levels.len(),
            weights.level_convs.len()
        ));
    }
    let (_, h, w) = x.shape();
    let mut branches = Vec::with_capacity(weights.grid_levels.len());
    for (&g, conv) in weights.grid_levels.iter().zip(&weights.level_convs) {
        let pooled = pool_level(x, g, pooling)?;
        let mut b = conv2d_valid(&pooled, conv)?;
        relu_in_place(&mut b);
        branches.push(bilinear_upsample(&b, h, w)?);
    }
    let mut parts: Vec<&Tensor> = Vec::with_capacity(branches.len() + 1);
    parts.push(x);
    parts.extend(branches.iter());
    let mut fused = conv2d_valid(&concat_channels(&parts)?, &weights.fuse)?;
    relu_in_place(&mut fused);
    se_block(&fused, &weights.se)
}
