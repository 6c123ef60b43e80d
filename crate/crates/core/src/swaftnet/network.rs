use alloc::string::String;
use alloc::vec::Vec;

use super::attention::SeWeights;
use super::def::{LayerTemplate, NetworkDef, Reg};
use super::spp::SppWeights;
use super::weights::NetworkWeights;
use crate::error::{Error, Result};
use crate::ops::{BatchNorm, ConvParams};

pub(crate) const BN_EPSILON: f32 = 1e-5;

/// Where the parameters of a new network come from.
#[derive(Debug, Clone)]
pub enum Init {
    SeededRandom(u64),
    FromWeights(NetworkWeights),
}

/// One resolved encoder instruction.
#[derive(Debug, Clone)]
pub(crate) enum EncOp {
    Conv {
        name: String,
        params: ConvParams,
        pad: usize,
        reg: Reg,
    },
    Bn {
        params: BatchNorm,
        reg: Reg,
    },
    Relu,
    MaxPool {
        name: String,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    Fork,
    Join,
    Stage,
}

impl EncOp {
    /// Horizontal pad amount when the op needs border columns.
    pub(crate) fn horizontal_pad(&self) -> Option<usize> {
        match self {
            EncOp::Conv {
                pad,
                reg: Reg::Main,
                ..
            }
            | EncOp::MaxPool { pad, .. }
                if *pad > 0 =>
            {
                Some(*pad)
            }
            _ => None,
        }
    }

    pub(crate) fn name(&self) -> &str {
        match self {
            EncOp::Conv { name, .. } | EncOp::MaxPool { name, .. } => name,
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DecoderStep {
    pub se: SeWeights,
    pub projection: Option<ConvParams>,
    pub blend: ConvParams,
    pub blend_bn: BatchNorm,
}

/// An immutable SwaftNet instance.
#[derive(Debug, Clone)]
pub struct Network {
    def: NetworkDef,
    weights: NetworkWeights,
    pub(crate) program: Vec<EncOp>,
    pub(crate) spp: SppWeights,
    /// Strides 16, 8, 4 in execution order.
    pub(crate) decoder: Vec<DecoderStep>,
    pub(crate) classifier: ConvParams,
}

struct Table<'a>(&'a NetworkWeights);

impl Table<'_> {
    fn data(&self, name: &str) -> Result<Vec<f32>> {
        self.0
            .get(name)
            .map(|a| a.data.clone())
            .ok_or_else(|| Error::MissingParameter(name.into()))
    }

    fn conv(&self, name: &str, out: usize, inp: usize, k: usize, stride: usize, bias: bool) -> Result<ConvParams> {
        let w = self.data(&alloc::format!("{name}.weight"))?;
        let b = if bias {
            Some(self.data(&alloc::format!("{name}.bias"))?)
        } else {
            None
        };
        ConvParams::new(out, inp, (k, k), stride, w, b)
    }

    fn bn(&self, name: &str) -> Result<BatchNorm> {
        Ok(BatchNorm {
            scale: self.data(&alloc::format!("{name}.scale"))?,
            shift: self.data(&alloc::format!("{name}.shift"))?,
            running_mean: self.data(&alloc::format!("{name}.mean"))?,
            running_var: self.data(&alloc::format!("{name}.var"))?,
            epsilon: BN_EPSILON,
        })
    }

    fn se(&self, name: &str, channels: usize, hidden: usize) -> Result<SeWeights> {
        Ok(SeWeights {
            channels,
            hidden,
            fc1: self.data(&alloc::format!("{name}.fc1.weight"))?,
            fc1_bias: self.data(&alloc::format!("{name}.fc1.bias"))?,
            fc2: self.data(&alloc::format!("{name}.fc2.weight"))?,
            fc2_bias: self.data(&alloc::format!("{name}.fc2.bias"))?,
        })
    }
}

impl Network {
    /// Builds the layer graph: 7×7/2 stem with 3×3/2 max-pool, four stages
    /// of two basic residual blocks, SPP with channel attention, three
    /// attention-lateral decoder steps and a 1×1 classifier.
    pub fn build(def: NetworkDef, init: Init) -> Result<Self> {
        def.validate()?;
        let specs = def.parameter_specs();
        let weights = match init {
            Init::SeededRandom(seed) => NetworkWeights::seeded(&specs, seed),
            Init::FromWeights(w) => {
                w.validate(&specs)?;
                w
            }
        };
        let t = Table(&weights);

        let mut program = Vec::new();
        for layer in def.encoder_layout() {
            program.push(match layer {
                LayerTemplate::Conv {
                    name,
                    out,
                    inp,
                    kernel,
                    stride,
                    pad,
                    reg,
                } => EncOp::Conv {
                    params: t.conv(&name, out, inp, kernel, stride, false)?,
                    name,
                    pad,
                    reg,
                },
                LayerTemplate::Bn { name, reg, .. } => EncOp::Bn {
                    params: t.bn(&name)?,
                    reg,
                },
                LayerTemplate::Relu => EncOp::Relu,
                LayerTemplate::MaxPool {
                    kernel,
                    stride,
                    pad,
                } => EncOp::MaxPool {
                    name: "stem.pool".into(),
                    kernel,
                    stride,
                    pad,
                },
                LayerTemplate::Fork => EncOp::Fork,
                LayerTemplate::Join => EncOp::Join,
                LayerTemplate::Stage => EncOp::Stage,
            });
        }

        let c4 = def.encoder_stage_channels[4];
        let dw = def.decoder_width;
        let bw = def.spp_branch_width();
        let levels = def.spp_grid_levels.len();
        let spp = SppWeights {
            grid_levels: def.spp_grid_levels.clone(),
            level_convs: (0..levels)
                .map(|k| t.conv(&alloc::format!("spp.level{k}"), bw, c4, 1, 1, true))
                .collect::<Result<_>>()?,
            fuse: t.conv("spp.fuse", dw, c4 + bw * levels, 1, 1, true)?,
            se: t.se("spp.se", dw, def.se_hidden(dw))?,
        };

        let lat = def.lateral_channels();
        let mut decoder = Vec::with_capacity(3);
        for (k, &cl) in [lat[2], lat[1], lat[0]].iter().enumerate() {
            let p = alloc::format!("decoder.{k}");
            decoder.push(DecoderStep {
                se: t.se(&alloc::format!("{p}.lateral.se"), cl, def.se_hidden(cl))?,
                projection: if cl != dw {
                    Some(t.conv(&alloc::format!("{p}.lateral.proj"), dw, cl, 1, 1, true)?)
                } else {
                    None
                },
                blend: t.conv(&alloc::format!("{p}.blend"), dw, dw, 3, 1, false)?,
                blend_bn: t.bn(&alloc::format!("{p}.blend_bn"))?,
            });
        }
        let classifier = t.conv("classifier", def.num_classes, dw, 1, 1, true)?;

        Ok(Self {
            def,
            weights,
            program,
            spp,
            decoder,
            classifier,
        })
    }

    pub fn def(&self) -> &NetworkDef {
        &self.def
    }

    pub fn weights(&self) -> &NetworkWeights {
        &self.weights
    }

    pub fn spp_weights(&self) -> &SppWeights {
        &self.spp
    }

    /// Encoder layers that read border columns, in execution order.
    pub fn padded_layers(&self) -> Vec<PaddedLayer<'_>> {
        let mut stride = 1;
        let mut out = Vec::new();
        for op in &self.program {
            if let Some(pad) = op.horizontal_pad() {
                out.push(PaddedLayer {
                    name: op.name(),
                    pad,
                    input_stride: stride,
                });
            }
            match op {
                EncOp::Conv {
                    params,
                    reg: Reg::Main,
                    ..
                } => stride *= params.stride,
                EncOp::MaxPool { stride: s, .. } => stride *= s,
                _ => {}
            }
        }
        out
    }
}

/// A layer whose input needs `pad` border columns on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaddedLayer<'a> {
    pub name: &'a str,
    pub pad: usize,
    /// Down-sampling of the layer's input relative to the network input.
    pub input_stride: usize,
}
