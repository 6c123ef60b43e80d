//! Inference kernels over [`Tensor`](crate::Tensor).
//!
//! Every kernel is pure. Horizontal padding is pluggable (zero, ring, or
//! buffers borrowed from a neighbouring segment); vertical padding is always
//! zero because a panorama is periodic only along the azimuth.

mod concat;
mod conv;
mod elementwise;
mod linear;
mod norm;
mod pad;
mod pool;
mod resample;

pub use concat::{concat_channels, concat_width};
pub use conv::{conv2d, conv2d_valid, ConvParams};
pub use elementwise::{add, elementwise_max, relu, relu_in_place, scale_channels, sigmoid};
pub use linear::linear;
pub use norm::{batchnorm_inference, BatchNorm};
pub use pad::{pad, PaddingMode, PaddingSpec};
pub use pool::{adaptive_avg_pool, circular_box_mean, global_avg_pool, maxpool2d};
pub use resample::{bilinear_resize, bilinear_upsample, HorizontalBoundary};

/// Output length of a padded, strided window sweep.
pub(crate) fn window_count(len: usize, pad: usize, kernel: usize, stride: usize) -> Option<usize> {
    let padded = len + pad;
    if stride == 0 || padded < kernel {
        None
    } else {
        Some((padded - kernel) / stride + 1)
    }
}
