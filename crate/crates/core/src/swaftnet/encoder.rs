//! Feature model: stem, residual stages and SPP, executed one padded layer
//! at a time so that neighbouring segments can swap border columns between
//! layers.

use alloc::string::String;
use alloc::vec::Vec;

use super::def::{Reg, OUTPUT_STRIDE};
use super::network::{EncOp, Network};
use super::spp::{spp_forward, SppPooling};
use crate::error::{invalid, mismatch, Result};
use crate::ops::{add, batchnorm_inference, conv2d, conv2d_valid, maxpool2d, relu_in_place, PaddingSpec};
use crate::tensor::Tensor;

/// Outermost input columns of one padded layer, as a neighbour would need them.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryStrip {
    pub layer: String,
    pub left: Tensor,
    pub right: Tensor,
}

/// Feature-model outputs consumed by the fusion model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    /// Lateral sources at strides 4, 8 and 16.
    pub stage_features: Vec<Tensor>,
    /// Attention-recalibrated SPP output at stride 32.
    pub spp_feature: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub features: FeatureMaps,
    pub boundary_strips: Vec<BoundaryStrip>,
}

/// Source of the border columns for one padded layer.
#[derive(Debug, Clone, PartialEq)]
pub enum HorizontalPad {
    Zero,
    Ring,
    Neighbor { left: Tensor, right: Tensor },
}

/// Stride-32 panorama the SPP of a single segment should pool over, and the
/// segment's first column in it.
#[derive(Debug, Clone, PartialEq)]
pub struct SppContext {
    pub panorama: Tensor,
    pub offset: isize,
}

/// Pre-computed neighbour material for [`feature_forward`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborFeed {
    /// `(left, right)` buffers for each padded layer in execution order.
    pub buffers: Vec<(Tensor, Tensor)>,
    /// Without a context the SPP pools over the segment alone.
    pub spp_context: Option<SppContext>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PadPolicy {
    Zero,
    Ring,
    Neighbor(NeighborFeed),
}

/// What the cursor needs before it can continue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pending {
    /// The `layer`-th padded layer wants `pad` border columns on each side.
    Padded { layer: usize, pad: usize },
    /// The SPP input is ready; supply the SPP output.
    Spp,
    Done,
}

/// Resumable execution state of the feature model over one segment.
pub struct EncoderCursor<'n> {
    net: &'n Network,
    pc: usize,
    padded_seen: usize,
    main: Tensor,
    shortcut: Option<Tensor>,
    stages: Vec<Tensor>,
    strips: Vec<BoundaryStrip>,
    spp_feature: Option<Tensor>,
}

impl<'n> EncoderCursor<'n> {
    pub fn new(net: &'n Network, input: Tensor) -> Result<Self> {
        if input.channels() != net.def().input_channels {
            return Err(mismatch!(
                "input has {} channels, network expects {}",
                input.channels(),
                net.def().input_channels
            ));
        }
        Ok(Self {
            net,
            pc: 0,
            padded_seen: 0,
            main: input,
            shortcut: None,
            stages: Vec::with_capacity(4),
            strips: Vec::new(),
            spp_feature: None,
        })
    }

    /// Input of the pending layer (or of the SPP).
    pub fn current(&self) -> &Tensor {
        &self.main
    }

    /// Runs layers that need no outside columns and reports the next stop.
    pub fn advance(&mut self) -> Result<Pending> {
        loop {
            let Some(op) = self.net.program.get(self.pc) else {
                return Ok(if self.spp_feature.is_none() {
                    Pending::Spp
                } else {
                    Pending::Done
                });
            };
            if let Some(pad) = op.horizontal_pad() {
                return Ok(Pending::Padded {
                    layer: self.padded_seen,
                    pad,
                });
            }
            self.run_local(op)?;
            self.pc += 1;
        }
    }

    fn reg(&mut self, reg: Reg) -> Result<&mut Tensor> {
        match reg {
            Reg::Main => Ok(&mut self.main),
            Reg::Shortcut => self
                .shortcut
                .as_mut()
                .ok_or_else(|| invalid!("shortcut read before fork")),
        }
    }

    fn run_local(&mut self, op: &EncOp) -> Result<()> {
        match op {
            EncOp::Conv { params, reg, .. } => {
                let t = self.reg(*reg)?;
                *t = conv2d_valid(t, params)?;
            }
            EncOp::Bn { params, reg } => {
                let t = self.reg(*reg)?;
                *t = batchnorm_inference(t, params)?;
            }
            EncOp::Relu => relu_in_place(&mut self.main),
            EncOp::MaxPool { kernel, stride, .. } => {
                self.main = maxpool2d(&self.main, *kernel, *stride, &PaddingSpec::none())?;
            }
            EncOp::Fork => self.shortcut = Some(self.main.clone()),
            EncOp::Join => {
                let s = self
                    .shortcut
                    .take()
                    .ok_or_else(|| invalid!("join without fork"))?;
                self.main = add(&self.main, &s)?;
                relu_in_place(&mut self.main);
            }
            EncOp::Stage => self.stages.push(self.main.clone()),
        }
        Ok(())
    }

    /// Executes the pending padded layer with the given border source.
    pub fn apply_padded(&mut self, border: HorizontalPad) -> Result<()> {
        let op = self
            .net
            .program
            .get(self.pc)
            .ok_or_else(|| invalid!("no padded layer pending"))?;
        let pad = op
            .horizontal_pad()
            .ok_or_else(|| invalid!("pending layer is not padded"))?;
        let w = self.main.width();
        if w < pad {
            return Err(invalid!(
                "layer `{}` input is {w} columns wide, narrower than its padding {pad}",
                op.name()
            ));
        }
        self.strips.push(BoundaryStrip {
            layer: op.name().into(),
            left: self.main.slice_width(0, pad)?,
            right: self.main.slice_width(w - pad, pad)?,
        });
        let spec = match border {
            HorizontalPad::Zero => PaddingSpec::zero(pad, pad),
            HorizontalPad::Ring => PaddingSpec::ring(pad, pad),
            HorizontalPad::Neighbor { left, right } => PaddingSpec::neighbor(pad, pad, left, right),
        };
        self.main = match op {
            EncOp::Conv { params, .. } => conv2d(&self.main, params, &spec)?,
            EncOp::MaxPool { kernel, stride, .. } => maxpool2d(&self.main, *kernel, *stride, &spec)?,
            _ => unreachable!("only convolutions and pools carry padding"),
        };
        self.pc += 1;
        self.padded_seen += 1;
        Ok(())
    }

    pub fn apply_spp(&mut self, spp_feature: Tensor) -> Result<()> {
        if self.pc != self.net.program.len() || self.spp_feature.is_some() {
            return Err(invalid!("SPP output supplied out of order"));
        }
        if spp_feature.width() != self.main.width() || spp_feature.height() != self.main.height() {
            return Err(mismatch!(
                "SPP output {:?} for a {:?} input",
                spp_feature.shape(),
                self.main.shape()
            ));
        }
        self.spp_feature = Some(spp_feature);
        Ok(())
    }

    pub fn finish(mut self) -> Result<EncoderOutput> {
        let spp_feature = self
            .spp_feature
            .take()
            .ok_or_else(|| invalid!("feature model has not finished"))?;
        self.stages.truncate(3);
        Ok(EncoderOutput {
            features: FeatureMaps {
                stage_features: self.stages,
                spp_feature,
            },
            boundary_strips: self.strips,
        })
    }
}

/// Runs the feature model over one segment.
pub fn feature_forward(net: &Network, segment: &Tensor, policy: &PadPolicy) -> Result<EncoderOutput> {
    if segment.width() == 0 || !segment.width().is_multiple_of(OUTPUT_STRIDE) {
        return Err(invalid!(
            "segment width {} is not a positive multiple of {OUTPUT_STRIDE}",
            segment.width()
        ));
    }
    let mut cur = EncoderCursor::new(net, segment.clone())?;
    loop {
        match cur.advance()? {
            Pending::Padded { layer, .. } => {
                let border = match policy {
                    PadPolicy::Zero => HorizontalPad::Zero,
                    PadPolicy::Ring => HorizontalPad::Ring,
                    PadPolicy::Neighbor(feed) => {
                        let (left, right) = feed.buffers.get(layer).cloned().ok_or_else(|| {
                            invalid!("missing neighbour buffer for padded layer {layer}")
                        })?;
                        HorizontalPad::Neighbor { left, right }
                    }
                };
                cur.apply_padded(border)?;
            }
            Pending::Spp => {
                let x = cur.current();
                let out = match policy {
                    PadPolicy::Zero => spp_forward(x, &net.spp, SppPooling::Grid)?,
                    PadPolicy::Ring => spp_forward(x, &net.spp, SppPooling::Circular)?,
                    PadPolicy::Neighbor(feed) => match &feed.spp_context {
                        Some(ctx) => spp_forward(&ctx.panorama, &net.spp, SppPooling::Circular)?
                            .slice_width_circular(ctx.offset, x.width()),
                        None => spp_forward(x, &net.spp, SppPooling::Circular)?,
                    },
                };
                cur.apply_spp(out)?;
            }
            Pending::Done => break,
        }
    }
    cur.finish()
}
