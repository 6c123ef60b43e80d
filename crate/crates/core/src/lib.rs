//! Panoramic annular semantic segmentation.
//!
//! Pure algorithmic core: annular unfolding and fold-back, a small dense
//! tensor engine with ring and cross-segment padding, the SwaftNet
//! encoder/decoder, the segment-wise adaptation framework, mIoU evaluation
//! and semantic filtering of keypoint matches.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
//! The `parallel` feature spreads kernels and segments over a rayon pool;
//! results are bit-identical to the sequential schedule.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adaptation;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod ops;
mod par;
pub mod segmap;
pub mod semantic_vo;
pub mod swaftnet;
pub mod tensor;

pub use error::{Error, Result};
pub use segmap::{SegmentationMap, IGNORE_ID};
pub use tensor::Tensor;
