//! Segment-wise inference over a 360° panorama.
//!
//! The panorama is cut into `N` azimuthal segments. Each runs its own copy of
//! the feature model; before every horizontally padded layer the segments
//! swap border columns with their ring neighbours, so every segment sees the
//! same context it would inside one whole-panorama pass. The stride-32 maps
//! are gathered for the SPP (its pooling is global), the per-stride features
//! are concatenated back into panorama-wide maps and a single fusion model
//! decodes them with ring padding.

use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Result};
use crate::ops::{bilinear_resize, concat_width, HorizontalBoundary};
use crate::par;
use crate::segmap::SegmentationMap;
use crate::swaftnet::{
    fusion_forward_to, spp_forward, BorderMode, EncoderCursor, FeatureMaps, HorizontalPad, Network,
    Pending, SppPooling, OUTPUT_STRIDE,
};
use crate::tensor::Tensor;

/// Padding used at segment borders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SegmentPadding {
    /// Border columns come from the ring neighbours.
    #[default]
    Exchange,
    /// Every segment is zero-padded on its own, as a stand-alone image.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlan {
    pub num_segments: usize,
    /// Extra columns taken circularly from each side of every segment.
    pub overlap: usize,
    /// `(width, height)` every segment is resampled to before the feature model.
    pub resize_to: Option<(usize, usize)>,
    pub padding: SegmentPadding,
}

impl Default for SegmentPlan {
    fn default() -> Self {
        Self::new(4)
    }
}

impl SegmentPlan {
    pub fn new(num_segments: usize) -> Self {
        Self {
            num_segments,
            overlap: 0,
            resize_to: None,
            padding: SegmentPadding::Exchange,
        }
    }

    pub fn segment_width(&self, panorama_width: usize) -> Result<usize> {
        if self.num_segments == 0 {
            return Err(invalid!("num_segments must be at least 1"));
        }
        if panorama_width == 0 || !panorama_width.is_multiple_of(self.num_segments) {
            return Err(invalid!(
                "panorama width {panorama_width} is not divisible into {} segments",
                self.num_segments
            ));
        }
        Ok(panorama_width / self.num_segments)
    }

    /// Checks the plan against a panorama width for partitioning.
    pub fn validate(&self, panorama_width: usize) -> Result<()> {
        let sw = self.segment_width(panorama_width)?;
        if self.overlap >= sw {
            return Err(invalid!("overlap {} must be smaller than the segment width {sw}", self.overlap));
        }
        if let Some((w, h)) = self.resize_to {
            if w == 0 || h == 0 {
                return Err(invalid!("resize_to must be positive, got {w}x{h}"));
            }
        }
        Ok(())
    }

    /// Checks the stricter conditions of segment-wise inference.
    pub fn validate_for_inference(&self, panorama_width: usize) -> Result<()> {
        self.validate(panorama_width)?;
        let sw = self.segment_width(panorama_width)?;
        if sw % OUTPUT_STRIDE != 0 {
            return Err(invalid!("segment width {sw} is not a multiple of {OUTPUT_STRIDE}"));
        }
        if !self.overlap.is_multiple_of(OUTPUT_STRIDE) {
            return Err(invalid!(
                "overlap {} is not a multiple of {OUTPUT_STRIDE}; feature columns would not align",
                self.overlap
            ));
        }
        if let Some((w, _)) = self.resize_to {
            if w % OUTPUT_STRIDE != 0 {
                return Err(invalid!("resized segment width {w} is not a multiple of {OUTPUT_STRIDE}"));
            }
            if self.overlap != 0 {
                return Err(invalid!("resize_to cannot be combined with overlap"));
            }
        }
        Ok(())
    }
}

/// One azimuthal slice of the panorama.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub index: usize,
    /// Panorama column of the slice's first column; negative when the
    /// overlap wraps past column 0.
    pub start: isize,
    pub data: Tensor,
}

/// Cuts the panorama into `num_segments` circular windows of
/// `segment_width + 2·overlap` columns, resized last when requested.
pub fn partition(panorama: &Tensor, plan: &SegmentPlan) -> Result<Vec<Segment>> {
    plan.validate(panorama.width())?;
    let sw = plan.segment_width(panorama.width())?;
    let o = plan.overlap;
    (0..plan.num_segments)
        .map(|i| {
            let start = (i * sw) as isize - o as isize;
            let mut data = panorama.slice_width_circular(start, sw + 2 * o);
            if let Some((w, h)) = plan.resize_to {
                data = bilinear_resize(&data, h, w, HorizontalBoundary::Clamp)?;
            }
            Ok(Segment { index: i, start, data })
        })
        .collect()
}

/// Inverse of [`partition`]: drops the overlap and concatenates the centres.
/// Resized segments are first resampled back to the panorama's geometry.
pub fn reassemble(segments: &[Segment], plan: &SegmentPlan, height: usize, width: usize) -> Result<Tensor> {
    if segments.len() != plan.num_segments {
        return Err(invalid!(
            "{} segments for a plan of {}",
            segments.len(),
            plan.num_segments
        ));
    }
    let sw = plan.segment_width(width)?;
    let o = plan.overlap;
    let centres = segments
        .iter()
        .map(|s| {
            let t = match plan.resize_to {
                Some(_) => bilinear_resize(&s.data, height, sw + 2 * o, HorizontalBoundary::Clamp)?,
                None => s.data.clone(),
            };
            if t.width() != sw + 2 * o || t.height() != height {
                return Err(mismatch!(
                    "segment is {}x{}, expected {height}x{}",
                    t.height(),
                    t.width(),
                    sw + 2 * o
                ));
            }
            t.slice_width(o, sw)
        })
        .collect::<Result<Vec<_>>>()?;
    concat_width(&centres.iter().collect::<Vec<_>>())
}

/// Border-column routing for one padded layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeLayer {
    pub pad: usize,
    /// Down-sampling of the layer input relative to the (resized) segment.
    pub input_stride: usize,
}

/// Which columns of which neighbour feed every segment's padding.
///
/// Segment `i` takes its left buffer from segment `i-1 mod N` and its right
/// buffer from segment `i+1 mod N`. Without overlap these are exactly the
/// neighbours' recorded boundary strips. With overlap `o` the columns sit
/// `o / stride` further in, past the columns both segments share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangePlan {
    pub num_segments: usize,
    pub overlap: usize,
    pub layers: Vec<ExchangeLayer>,
}

impl ExchangePlan {
    pub fn new(net: &Network, plan: &SegmentPlan) -> Self {
        Self {
            num_segments: plan.num_segments,
            overlap: plan.overlap,
            layers: net
                .padded_layers()
                .iter()
                .map(|l| ExchangeLayer {
                    pad: l.pad,
                    input_stride: l.input_stride,
                })
                .collect(),
        }
    }

    pub fn left_source(&self, i: usize) -> usize {
        (i + self.num_segments - 1) % self.num_segments
    }

    pub fn right_source(&self, i: usize) -> usize {
        (i + 1) % self.num_segments
    }

    /// `(left, right)` buffers for every segment at padded layer `layer`,
    /// given each segment's input to that layer.
    pub fn buffers(&self, layer: usize, inputs: &[&Tensor]) -> Result<Vec<(Tensor, Tensor)>> {
        let l = self
            .layers
            .get(layer)
            .ok_or_else(|| invalid!("padded layer {layer} is not in the exchange plan"))?;
        if inputs.len() != self.num_segments {
            return Err(mismatch!("{} inputs for {} segments", inputs.len(), self.num_segments));
        }
        let os = self.overlap / l.input_stride;
        let mut out = Vec::with_capacity(inputs.len());
        for i in 0..self.num_segments {
            let left_src = inputs[self.left_source(i)];
            let right_src = inputs[self.right_source(i)];
            let w = left_src.width();
            if w < 2 * os + l.pad || right_src.width() < 2 * os + l.pad {
                return Err(invalid!(
                    "segment feature width {w} is too narrow for padding {} at overlap {os}",
                    l.pad
                ));
            }
            out.push((
                left_src.slice_width(w - 2 * os - l.pad, l.pad)?,
                right_src.slice_width(2 * os, l.pad)?,
            ));
        }
        Ok(out)
    }
}

/// Result of segment-wise inference.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedOutput {
    pub logits: Tensor,
    pub segmentation: SegmentationMap,
    /// Set when segments were resampled, which breaks exact equivalence
    /// with a whole-panorama pass.
    pub approximate: bool,
}

/// Runs the feature model per segment in layer lockstep and decodes the
/// fused features once.
pub fn run_adapted(net: &Network, panorama: &Tensor, plan: &SegmentPlan) -> Result<AdaptedOutput> {
    let (ph, pw) = (panorama.height(), panorama.width());
    plan.validate_for_inference(pw)?;
    if panorama.channels() != net.def().input_channels {
        return Err(mismatch!(
            "panorama has {} channels, network expects {}",
            panorama.channels(),
            net.def().input_channels
        ));
    }
    let n = plan.num_segments;
    let sw = pw / n;
    let o = plan.overlap;
    let segments = partition(panorama, plan)?;
    let exchange = ExchangePlan::new(net, plan);

    let mut cursors = segments
        .into_iter()
        .map(|s| EncoderCursor::new(net, s.data))
        .collect::<Result<Vec<_>>>()?;

    loop {
        let pending = advance_all(&mut cursors)?;
        match pending {
            Pending::Padded { layer, .. } => {
                let borders: Vec<HorizontalPad> = match plan.padding {
                    SegmentPadding::Zero => (0..n).map(|_| HorizontalPad::Zero).collect(),
                    SegmentPadding::Exchange => {
                        let inputs: Vec<&Tensor> = cursors.iter().map(|c| c.current()).collect();
                        exchange
                            .buffers(layer, &inputs)?
                            .into_iter()
                            .map(|(left, right)| HorizontalPad::Neighbor { left, right })
                            .collect()
                    }
                };
                par::map_mut(&mut cursors, |i, c| c.apply_padded(borders[i].clone()))
                    .into_iter()
                    .collect::<Result<()>>()?;
            }
            Pending::Spp => {
                let o32 = o / OUTPUT_STRIDE;
                let w32 = cursors[0].current().width();
                let seg32 = w32 - 2 * o32;
                let centres = cursors
                    .iter()
                    .map(|c| c.current().slice_width(o32, seg32))
                    .collect::<Result<Vec<_>>>()?;
                let gathered = concat_width(&centres.iter().collect::<Vec<_>>())?;
                let pooled = spp_forward(&gathered, &net.spp, SppPooling::Circular)?;
                for (i, c) in cursors.iter_mut().enumerate() {
                    let start = (i * seg32) as isize - o32 as isize;
                    c.apply_spp(pooled.slice_width_circular(start, w32))?;
                }
            }
            Pending::Done => break,
        }
    }

    let outputs = cursors
        .into_iter()
        .map(|c| c.finish().map(|e| e.features))
        .collect::<Result<Vec<_>>>()?;
    let fused = fuse_features(&outputs, plan, ph, sw)?;
    let logits = fusion_forward_to(net, &fused, BorderMode::Ring, ph, pw)?;
    let segmentation = SegmentationMap::from_logits(&logits)?;
    Ok(AdaptedOutput {
        logits,
        segmentation,
        approximate: plan.resize_to.is_some(),
    })
}

fn advance_all(cursors: &mut [EncoderCursor<'_>]) -> Result<Pending> {
    let results = par::map_mut(cursors, |_, c| c.advance());
    let mut it = results.into_iter();
    let first = it.next().ok_or_else(|| invalid!("no segments"))??;
    for r in it {
        if r? != first {
            return Err(invalid!("segments fell out of lockstep"));
        }
    }
    Ok(first)
}

/// Stride-`s` size of an `n`-pixel extent after the feature model's
/// ceil-halving chain.
fn strided(n: usize, stride: usize) -> usize {
    let mut n = n;
    let mut s = 1;
    while s < stride {
        n = n.div_ceil(2);
        s *= 2;
    }
    n
}

/// Concatenates per-segment features along the azimuth; columns seen by two
/// segments keep the larger value.
fn fuse_features(parts: &[FeatureMaps], plan: &SegmentPlan, ph: usize, sw: usize) -> Result<FeatureMaps> {
    let fuse = |pick: &dyn Fn(&FeatureMaps) -> &Tensor, stride: usize| -> Result<Tensor> {
        let maps = parts
            .iter()
            .map(|p| {
                let t = pick(p);
                if plan.resize_to.is_some() {
                    bilinear_resize(t, strided(ph, stride), sw / stride, HorizontalBoundary::Clamp)
                } else {
                    Ok(t.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        fuse_width(&maps, plan.overlap / stride)
    };
    Ok(FeatureMaps {
        stage_features: [4, 8, 16]
            .iter()
            .enumerate()
            .map(|(k, &s)| fuse(&|p: &FeatureMaps| &p.stage_features[k], s))
            .collect::<Result<_>>()?,
        spp_feature: fuse(&|p: &FeatureMaps| &p.spp_feature, OUTPUT_STRIDE)?,
    })
}

fn fuse_width(maps: &[Tensor], overlap: usize) -> Result<Tensor> {
    let first = maps.first().ok_or_else(|| invalid!("no segments"))?;
    let w_ext = first.width();
    if w_ext <= 2 * overlap {
        return Err(mismatch!("feature width {w_ext} cannot hold overlap {overlap}"));
    }
    let seg = w_ext - 2 * overlap;
    let centres = maps
        .iter()
        .map(|m| m.slice_width(overlap, seg))
        .collect::<Result<Vec<_>>>()?;
    let mut out = concat_width(&centres.iter().collect::<Vec<_>>())?;
    if overlap == 0 {
        return Ok(out);
    }
    let (c, h, w) = out.shape();
    for (i, m) in maps.iter().enumerate() {
        let start = (i * seg) as isize - overlap as isize;
        for k in (0..overlap).chain(overlap + seg..w_ext) {
            let col = (start + k as isize).rem_euclid(w as isize) as usize;
            for ch in 0..c {
                for y in 0..h {
                    let v = m.at(ch, y, k);
                    if v > out.at(ch, y, col) {
                        out.set(ch, y, col, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Whole-panorama inference as one segment.
pub fn full_pass(net: &Network, panorama: &Tensor, border: BorderMode) -> Result<Tensor> {
    let (_, h, w) = panorama.shape();
    if h == 0 || w == 0 || h % OUTPUT_STRIDE != 0 || w % OUTPUT_STRIDE != 0 {
        return Err(invalid!("panorama {h}x{w} is not divisible by {OUTPUT_STRIDE}"));
    }
    net.forward(panorama, border)
}

/// Per-column maximum absolute difference between two logit tensors.
pub fn seam_report(a: &Tensor, b: &Tensor) -> Result<Vec<f32>> {
    if a.shape() != b.shape() {
        return Err(mismatch!("{:?} vs {:?}", a.shape(), b.shape()));
    }
    let (c, h, w) = a.shape();
    let mut profile = alloc::vec![0.0f32; w];
    for ch in 0..c {
        for y in 0..h {
            for ((p, x), z) in profile.iter_mut().zip(a.row(ch, y)).zip(b.row(ch, y)) {
                *p = p.max((x - z).abs());
            }
        }
    }
    Ok(profile)
}

/// Comparison of a seam profile at segment borders against segment centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamSummary {
    pub max: f32,
    /// Largest value within `radius` columns of a cut between segments.
    pub boundary_max: f32,
    /// Median over the central half of every segment.
    pub interior_median: f32,
}

impl SeamSummary {
    /// `boundary_max / interior_median`; infinite for a flat-zero interior.
    pub fn ratio(&self) -> f32 {
        if self.interior_median > 0.0 {
            self.boundary_max / self.interior_median
        } else if self.boundary_max > 0.0 {
            f32::INFINITY
        } else {
            1.0
        }
    }
}

/// Summarises a profile over `num_segments` equal segments. Border columns
/// are the `radius` columns either side of every cut, including the wrap at
/// column 0; interior columns lie at least a quarter segment from any cut.
pub fn summarize_seams(profile: &[f32], num_segments: usize, radius: usize) -> Result<SeamSummary> {
    let w = profile.len();
    if num_segments == 0 || w == 0 || !w.is_multiple_of(num_segments) {
        return Err(invalid!("profile of {w} columns does not split into {num_segments} segments"));
    }
    let sw = w / num_segments;
    // Distance from the gap between columns `d - 1` and `d` of a segment.
    let distance = |x: usize| {
        let d = x % sw;
        d.min(sw - 1 - d)
    };
    let margin = sw / 4;
    let mut boundary_max = 0.0f32;
    let mut interior = Vec::new();
    for (x, &v) in profile.iter().enumerate() {
        let d = distance(x);
        if d < radius {
            boundary_max = boundary_max.max(v);
        }
        if d >= margin {
            interior.push(v);
        }
    }
    interior.sort_by(f32::total_cmp);
    let interior_median = match interior.len() {
        0 => 0.0,
        n if n % 2 == 1 => interior[n / 2],
        n => 0.5 * (interior[n / 2 - 1] + interior[n / 2]),
    };
    Ok(SeamSummary {
        max: profile.iter().copied().fold(0.0, f32::max),
        boundary_max,
        interior_median,
    })
}
