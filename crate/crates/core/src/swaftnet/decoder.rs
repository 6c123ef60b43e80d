//! Fusion model: constant-width decoder with attention laterals.

use super::attention::attention_lateral;
use super::encoder::FeatureMaps;
use super::network::Network;
use crate::error::{mismatch, Result};
use crate::ops::{batchnorm_inference, bilinear_resize, conv2d, conv2d_valid, relu_in_place, HorizontalBoundary, PaddingSpec};
use crate::tensor::Tensor;

/// Treatment of the panorama's left and right borders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderMode {
    Zero,
    /// The azimuth is periodic: pads and resampling taps wrap around.
    Ring,
}

impl BorderMode {
    fn resample(self) -> HorizontalBoundary {
        match self {
            BorderMode::Zero => HorizontalBoundary::Clamp,
            BorderMode::Ring => HorizontalBoundary::Wrap,
        }
    }

    fn padding(self, pad: usize) -> PaddingSpec {
        match self {
            BorderMode::Zero => PaddingSpec::zero(pad, pad),
            BorderMode::Ring => PaddingSpec::ring(pad, pad),
        }
    }
}

fn check_features(net: &Network, f: &FeatureMaps) -> Result<()> {
    if f.stage_features.len() != 3 {
        return Err(mismatch!("expected 3 lateral maps, got {}", f.stage_features.len()));
    }
    let lat = net.def().lateral_channels();
    for (t, &c) in f.stage_features.iter().zip(&lat) {
        if t.channels() != c {
            return Err(mismatch!("lateral map has {} channels, expected {c}", t.channels()));
        }
    }
    if f.spp_feature.channels() != net.def().decoder_width {
        return Err(mismatch!(
            "SPP map has {} channels, decoder width is {}",
            f.spp_feature.channels(),
            net.def().decoder_width
        ));
    }
    let chain = [
        &f.stage_features[0],
        &f.stage_features[1],
        &f.stage_features[2],
        &f.spp_feature,
    ];
    for pair in chain.windows(2) {
        let (fine, coarse) = (pair[0], pair[1]);
        if coarse.height() != fine.height().div_ceil(2) || coarse.width() != fine.width().div_ceil(2) {
            return Err(mismatch!(
                "feature maps {}x{} and {}x{} are not one stride apart",
                fine.height(),
                fine.width(),
                coarse.height(),
                coarse.width()
            ));
        }
    }
    Ok(())
}

/// Decodes fused features into logits at four times the stride-4 resolution.
pub fn fusion_forward(net: &Network, features: &FeatureMaps, border: BorderMode) -> Result<Tensor> {
    let s4 = features
        .stage_features
        .first()
        .ok_or_else(|| mismatch!("no lateral maps"))?;
    fusion_forward_to(net, features, border, 4 * s4.height(), 4 * s4.width())
}

/// Decodes fused features into logits of an explicit output size.
pub fn fusion_forward_to(
    net: &Network,
    features: &FeatureMaps,
    border: BorderMode,
    out_h: usize,
    out_w: usize,
) -> Result<Tensor> {
    check_features(net, features)?;
    let mut d = features.spp_feature.clone();
    for (step, lateral) in net.decoder.iter().zip(features.stage_features.iter().rev()) {
        d = bilinear_resize(&d, lateral.height(), lateral.width(), border.resample())?;
        d = attention_lateral(lateral, &step.se, step.projection.as_ref(), &d)?;
        d = conv2d(&d, &step.blend, &border.padding(1))?;
        d = batchnorm_inference(&d, &step.blend_bn)?;
        relu_in_place(&mut d);
    }
    let logits = conv2d_valid(&d, &net.classifier)?;
    bilinear_resize(&logits, out_h, out_w, border.resample())
}
