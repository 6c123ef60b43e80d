//! SwaftNet: residual encoder with SPP and channel attention, constant-width
//! decoder with squeeze-excite lateral connections.

mod attention;
mod decoder;
mod def;
mod encoder;
mod network;
mod spp;
mod weights;

pub use attention::{attention_lateral, se_block, SeWeights};
pub use decoder::{fusion_forward, fusion_forward_to, BorderMode};
pub use def::{InitRule, NetworkDef, ParamSpec, SplitPoint, OUTPUT_STRIDE};
pub use encoder::{
    feature_forward, BoundaryStrip, EncoderCursor, EncoderOutput, FeatureMaps, HorizontalPad,
    NeighborFeed, PadPolicy, Pending, SppContext,
};
pub use network::{Init, Network, PaddedLayer};
pub use spp::{pool_level, spp_forward, SppPooling, SppWeights};
pub use weights::{NetworkWeights, ParamArray};

use crate::error::Result;
use crate::tensor::Tensor;

impl Network {
    /// Feature model and fusion model over one whole image.
    pub fn forward(&self, x: &Tensor, border: BorderMode) -> Result<Tensor> {
        let policy = match border {
            BorderMode::Zero => PadPolicy::Zero,
            BorderMode::Ring => PadPolicy::Ring,
        };
        let enc = feature_forward(self, x, &policy)?;
        fusion_forward_to(self, &enc.features, border, x.height(), x.width())
    }
}
