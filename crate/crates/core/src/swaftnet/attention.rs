use alloc::vec::Vec;

use crate::error::{mismatch, Result};
use crate::ops::{add, conv2d_valid, global_avg_pool, linear, scale_channels, ConvParams};
use crate::tensor::Tensor;

/// Squeeze-excite bottleneck: `fc1` is `hidden × channels`, `fc2` is
/// `channels × hidden`, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SeWeights {
    pub channels: usize,
    pub hidden: usize,
    pub fc1: Vec<f32>,
    pub fc1_bias: Vec<f32>,
    pub fc2: Vec<f32>,
    pub fc2_bias: Vec<f32>,
}

impl SeWeights {
    pub fn zeros(channels: usize, hidden: usize) -> Self {
        Self {
            channels,
            hidden,
            fc1: alloc::vec![0.0; hidden * channels],
            fc1_bias: alloc::vec![0.0; hidden],
            fc2: alloc::vec![0.0; channels * hidden],
            fc2_bias: alloc::vec![0.0; channels],
        }
    }

    fn check(&self, channels: usize) -> Result<()> {
        let (c, h) = (self.channels, self.hidden);
        if c != channels
            || self.fc1.len() != h * c
            || self.fc1_bias.len() != h
            || self.fc2.len() != c * h
            || self.fc2_bias.len() != c
        {
            return Err(mismatch!(
                "squeeze-excite weights for {c} channels (hidden {h}) applied to {channels}"
            ));
        }
        Ok(())
    }

    /// Channel gates `sigmoid(fc2 · relu(fc1 · gap(x)))`, each in `(0, 1)`.
    pub fn descriptor(&self, x: &Tensor) -> Result<Vec<f32>> {
        self.check(x.channels())?;
        let squeezed = global_avg_pool(x);
        let mut hidden = linear(&squeezed, &self.fc1, Some(&self.fc1_bias))?;
        for v in &mut hidden {
            *v = v.max(0.0);
        }
        let excited = linear(&hidden, &self.fc2, Some(&self.fc2_bias))?;
        Ok(excited
            .into_iter()
            .map(|v| 1.0 / (1.0 + libm::expf(-v)))
            .collect())
    }
}

/// Recalibrates `x` channel-wise by its squeeze-excite descriptor.
pub fn se_block(x: &Tensor, se: &SeWeights) -> Result<Tensor> {
    let d = se.descriptor(x)?;
    scale_channels(x, &d)
}

/// Attention lateral connection: the encoder map is re-weighted by
/// squeeze-excite, projected to the decoder width by a 1×1 convolution when
/// the channel counts differ, and added to the decoder map.
pub fn attention_lateral(
    encoder_feature: &Tensor,
    se: &SeWeights,
    projection: Option<&ConvParams>,
    decoder_feature: &Tensor,
) -> Result<Tensor> {
    if encoder_feature.height() != decoder_feature.height()
        || encoder_feature.width() != decoder_feature.width()
    {
        return Err(mismatch!(
            "lateral {:?} does not match decoder {:?}",
            encoder_feature.shape(),
            decoder_feature.shape()
        ));
    }
    let differs = encoder_feature.channels() != decoder_feature.channels();
    if differs != projection.is_some() {
        return Err(mismatch!(
            "projection must be present exactly when lateral ({}) and decoder ({}) widths differ",
            encoder_feature.channels(),
            decoder_feature.channels()
        ));
    }
    let recalibrated = se_block(encoder_feature, se)?;
    match projection {
        Some(p) => add(&conv2d_valid(&recalibrated, p)?, decoder_feature),
        None => add(&recalibrated, decoder_feature),
    }
}
