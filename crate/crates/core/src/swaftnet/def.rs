use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Total down-sampling of the feature model.
pub const OUTPUT_STRIDE: usize = 32;

/// Where the network is cut into a per-segment feature model and a
/// panorama-wide fusion model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitPoint {
    #[default]
    AfterSpp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkDef {
    pub num_classes: usize,
    pub input_channels: usize,
    /// Stem followed by the four residual stages (strides 4, 4, 8, 16, 32).
    pub encoder_stage_channels: Vec<usize>,
    pub decoder_width: usize,
    pub se_reduction: usize,
    pub spp_grid_levels: Vec<usize>,
    pub split_point: SplitPoint,
}

impl Default for NetworkDef {
    fn default() -> Self {
        Self {
            num_classes: 27,
            input_channels: 3,
            encoder_stage_channels: vec![64, 64, 128, 256, 512],
            decoder_width: 128,
            se_reduction: 16,
            spp_grid_levels: vec![1, 2, 4, 8],
            split_point: SplitPoint::AfterSpp,
        }
    }
}

/// Initialisation rule attached to every parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitRule {
    /// Uniform on `±sqrt(1 / fan_in)`.
    FanIn(usize),
    BnScale,
    BnShift,
    BnMean,
    BnVar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: InitRule,
}

/// Which tensor a residual-block op reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Reg {
    Main,
    Shortcut,
}

/// Encoder layer graph before weights are attached.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LayerTemplate {
    Conv {
        name: String,
        out: usize,
        inp: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        reg: Reg,
    },
    Bn {
        name: String,
        channels: usize,
        reg: Reg,
    },
    Relu,
    MaxPool {
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    Fork,
    Join,
    Stage,
}

impl NetworkDef {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.num_classes > 255 {
            return Err(invalid!("num_classes must be in 1..=255, got {}", self.num_classes));
        }
        if self.input_channels == 0 {
            return Err(invalid!("input_channels must be positive"));
        }
        if self.encoder_stage_channels.len() != 5 {
            return Err(invalid!(
                "expected stem + 4 stage widths, got {}",
                self.encoder_stage_channels.len()
            ));
        }
        if self.encoder_stage_channels.contains(&0) {
            return Err(invalid!("encoder widths must be positive"));
        }
        if self.decoder_width == 0 {
            return Err(invalid!("decoder_width must be positive"));
        }
        if self.se_reduction == 0 {
            return Err(invalid!("se_reduction must be positive"));
        }
        if self.spp_grid_levels.is_empty() || self.spp_grid_levels.contains(&0) {
            return Err(invalid!("spp_grid_levels must be non-empty and positive"));
        }
        Ok(())
    }

    /// Bottleneck width of a squeeze-excite block over `channels`:
    /// `max(C / r, 4)`, never wider than `C`.
    pub fn se_hidden(&self, channels: usize) -> usize {
        (channels / self.se_reduction).max(4).min(channels).max(1)
    }

    pub fn spp_branch_width(&self) -> usize {
        (self.decoder_width / self.spp_grid_levels.len()).max(1)
    }

    /// Channels of the lateral sources at strides 4, 8 and 16.
    pub fn lateral_channels(&self) -> [usize; 3] {
        let c = &self.encoder_stage_channels;
        [c[1], c[2], c[3]]
    }

    pub(crate) fn encoder_layout(&self) -> Vec<LayerTemplate> {
        use LayerTemplate::*;
        let c = &self.encoder_stage_channels;
        let conv = |name: String, out, inp, kernel, stride, pad, reg| Conv {
            name,
            out,
            inp,
            kernel,
            stride,
            pad,
            reg,
        };
        let bn = |name: String, channels, reg| Bn {
            name,
            channels,
            reg,
        };
        let mut t = vec![
            conv("stem.conv".into(), c[0], self.input_channels, 7, 2, 3, Reg::Main),
            bn("stem.bn".into(), c[0], Reg::Main),
            Relu,
            MaxPool {
                kernel: 3,
                stride: 2,
                pad: 1,
            },
        ];
        let mut inp = c[0];
        for stage in 1..=4 {
            let out = c[stage];
            for block in 0..2 {
                let stride = if stage > 1 && block == 0 { 2 } else { 1 };
                let cin = if block == 0 { inp } else { out };
                let p = format!("layer{stage}.{block}");
                t.push(Fork);
                t.push(conv(format!("{p}.conv1"), out, cin, 3, stride, 1, Reg::Main));
                t.push(bn(format!("{p}.bn1"), out, Reg::Main));
                t.push(Relu);
                t.push(conv(format!("{p}.conv2"), out, out, 3, 1, 1, Reg::Main));
                t.push(bn(format!("{p}.bn2"), out, Reg::Main));
                if stride != 1 || cin != out {
                    t.push(conv(format!("{p}.downsample.conv"), out, cin, 1, stride, 0, Reg::Shortcut));
                    t.push(bn(format!("{p}.downsample.bn"), out, Reg::Shortcut));
                }
                t.push(Join);
            }
            t.push(Stage);
            inp = out;
        }
        t
    }

    /// Every parameter of the network, in initialisation order.
    pub fn parameter_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        for layer in self.encoder_layout() {
            match layer {
                LayerTemplate::Conv {
                    name,
                    out,
                    inp,
                    kernel,
                    ..
                } => push_conv(&mut specs, &name, out, inp, kernel, false),
                LayerTemplate::Bn { name, channels, .. } => push_bn(&mut specs, &name, channels),
                _ => {}
            }
        }
        let c4 = self.encoder_stage_channels[4];
        let dw = self.decoder_width;
        let bw = self.spp_branch_width();
        for k in 0..self.spp_grid_levels.len() {
            push_conv(&mut specs, &format!("spp.level{k}"), bw, c4, 1, true);
        }
        let fused_in = c4 + bw * self.spp_grid_levels.len();
        push_conv(&mut specs, "spp.fuse", dw, fused_in, 1, true);
        push_se(&mut specs, "spp.se", dw, self.se_hidden(dw));
        let lat = self.lateral_channels();
        for (k, &cl) in [lat[2], lat[1], lat[0]].iter().enumerate() {
            let p = format!("decoder.{k}");
            push_se(&mut specs, &format!("{p}.lateral.se"), cl, self.se_hidden(cl));
            if cl != dw {
                push_conv(&mut specs, &format!("{p}.lateral.proj"), dw, cl, 1, true);
            }
            push_conv(&mut specs, &format!("{p}.blend"), dw, dw, 3, false);
            push_bn(&mut specs, &format!("{p}.blend_bn"), dw);
        }
        push_conv(&mut specs, "classifier", self.num_classes, dw, 1, true);
        specs
    }
}

fn push_conv(specs: &mut Vec<ParamSpec>, name: &str, out: usize, inp: usize, k: usize, bias: bool) {
    let fan_in = inp * k * k;
    specs.push(ParamSpec {
        name: format!("{name}.weight"),
        shape: vec![out, inp, k, k],
        init: InitRule::FanIn(fan_in),
    });
    if bias {
        specs.push(ParamSpec {
            name: format!("{name}.bias"),
            shape: vec![out],
            init: InitRule::FanIn(fan_in),
        });
    }
}

fn push_bn(specs: &mut Vec<ParamSpec>, name: &str, c: usize) {
    for (suffix, init) in [
        ("scale", InitRule::BnScale),
        ("shift", InitRule::BnShift),
        ("mean", InitRule::BnMean),
        ("var", InitRule::BnVar),
    ] {
        specs.push(ParamSpec {
            name: format!("{name}.{suffix}"),
            shape: vec![c],
            init,
        });
    }
}

fn push_se(specs: &mut Vec<ParamSpec>, name: &str, c: usize, hidden: usize) {
    specs.push(ParamSpec {
        name: format!("{name}.fc1.weight"),
        shape: vec![hidden, c],
        init: InitRule::FanIn(c),
    });
    specs.push(ParamSpec {
        name: format!("{name}.fc1.bias"),
        shape: vec![hidden],
        init: InitRule::FanIn(c),
    });
    specs.push(ParamSpec {
        name: format!("{name}.fc2.weight"),
        shape: vec![c, hidden],
        init: InitRule::FanIn(hidden),
    });
    specs.push(ParamSpec {
        name: format!("{name}.fc2.bias"),
        shape: vec![c],
        init: InitRule::FanIn(hidden),
    });
}
