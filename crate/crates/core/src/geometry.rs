//! Unfolding of annular lens images into periodic panoramas and the inverse
//! fold-back onto raw annular coordinates.
//!
//! Pixel `(x, y)` of a raster has its centre at integer coordinates. Panorama
//! column `j` looks along azimuth `offset + 2π·j/width`; row `i` sits at
//! normalised radius parameter `v = i/(height-1)`, `v = 0` being the outer
//! radius unless `invert_rows` is set.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{invalid, mismatch, Result};
use crate::segmap::{SegmentationMap, IGNORE_ID};
use crate::tensor::Tensor;

/// What the samples of a [`Raster`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    /// Continuous intensities, interpolable.
    Image,
    /// Nominal class ids stored as exact integers.
    ClassIds,
}

/// Multi-channel image with `f32` samples, width index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
    pub kind: RasterKind,
}

impl Raster {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(mismatch!(
                "{} samples for a {channels}x{height}x{width} raster",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("raster contains non-finite samples"));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
            kind: RasterKind::Image,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self {
            channels,
            height,
            width,
            data: alloc::vec![value; channels * height * width],
            kind: RasterKind::Image,
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let t = Tensor::from_fn(channels, height, width, f);
        Self::from(t)
    }

    pub fn from_classes(map: &SegmentationMap) -> Self {
        Self {
            channels: 1,
            height: map.height(),
            width: map.width(),
            data: map.ids().iter().map(|&id| id as f32).collect(),
            kind: RasterKind::ClassIds,
        }
    }

    /// Reads a single-channel class raster back into labels.
    pub fn to_classes(&self) -> Result<SegmentationMap> {
        if self.kind != RasterKind::ClassIds || self.channels != 1 {
            return Err(invalid!("not a single-channel class raster"));
        }
        SegmentationMap::new(
            self.height,
            self.width,
            self.data.iter().map(|&v| v as u8).collect(),
        )
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

impl From<Tensor> for Raster {
    fn from(t: Tensor) -> Self {
        let (channels, height, width) = t.shape();
        Self {
            channels,
            height,
            width,
            data: t.into_data(),
            kind: RasterKind::Image,
        }
    }
}

impl From<Raster> for Tensor {
    fn from(r: Raster) -> Self {
        Tensor::new(r.channels, r.height, r.width, r.data).expect("raster invariant")
    }
}

/// Calibration of the annular lens image.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnularCameraModel {
    pub center_x: f64,
    pub center_y: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    /// `r(v) = a0 + a1·v + … + a4·v⁴`; linear outer→inner when absent.
    pub radial_poly: Option<Vec<f64>>,
    pub source_width: usize,
    pub source_height: usize,
    pub azimuth_offset: f64,
    pub invert_rows: bool,
}

impl AnnularCameraModel {
    pub fn linear(
        center: (f64, f64),
        r_inner: f64,
        r_outer: f64,
        source_width: usize,
        source_height: usize,
    ) -> Self {
        Self {
            center_x: center.0,
            center_y: center.1,
            r_inner,
            r_outer,
            radial_poly: None,
            source_width,
            source_height,
            azimuth_offset: 0.0,
            invert_rows: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.center_x,
            self.center_y,
            self.r_inner,
            self.r_outer,
            self.azimuth_offset,
        ];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("camera model has non-finite parameters"));
        }
        if !(0.0 <= self.r_inner && self.r_inner < self.r_outer) {
            return Err(invalid!(
                "radii must satisfy 0 <= r_inner < r_outer, got {} and {}",
                self.r_inner,
                self.r_outer
            ));
        }
        if self.source_width == 0 || self.source_height == 0 {
            return Err(invalid!("camera model source size must be positive"));
        }
        if let Some(poly) = &self.radial_poly {
            if poly.is_empty() || poly.len() > 5 {
                return Err(invalid!(
                    "radial polynomial needs 1 to 5 coefficients, got {}",
                    poly.len()
                ));
            }
            if poly.iter().any(|v| !v.is_finite()) {
                return Err(invalid!("radial polynomial has non-finite coefficients"));
            }
            // fold-back inverts r(v), so it must be strictly monotone on [0, 1]
            let samples: Vec<f64> = (0..=64).map(|k| self.radius_of(k as f64 / 64.0)).collect();
            let rising = samples.windows(2).all(|p| p[1] > p[0]);
            let falling = samples.windows(2).all(|p| p[1] < p[0]);
            if !rising && !falling {
                return Err(invalid!("radial polynomial is not monotone on [0, 1]"));
            }
        }
        Ok(())
    }

    /// Radius in pixels sampled at normalised row parameter `v`.
    pub fn radius_of(&self, v: f64) -> f64 {
        let v = if self.invert_rows { 1.0 - v } else { v };
        match &self.radial_poly {
            None => self.r_outer - v * (self.r_outer - self.r_inner),
            Some(poly) => poly.iter().rev().fold(0.0, |acc, &a| acc * v + a),
        }
    }

    /// Row parameter whose radius equals `r`, if it lies in `[0, 1]`.
    pub fn row_param_of(&self, r: f64) -> Option<f64> {
        let raw = match &self.radial_poly {
            None => (self.r_outer - r) / (self.r_outer - self.r_inner),
            Some(poly) => {
                let eval = |v: f64| poly.iter().rev().fold(0.0, |acc, &a| acc * v + a);
                let (mut lo, mut hi) = (0.0, 1.0);
                let (f_lo, f_hi) = (eval(lo) - r, eval(hi) - r);
                if f_lo * f_hi > 0.0 {
                    return None;
                }
                let rising = f_hi > f_lo;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if (eval(mid) < r) == rising {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
            return None;
        }
        let v = raw.clamp(0.0, 1.0);
        Some(if self.invert_rows { 1.0 - v } else { v })
    }

    /// Source coordinates of the ray through panorama `(row, col)`.
    pub fn source_point(&self, row: usize, col: usize, out_width: usize, out_height: usize) -> (f64, f64) {
        let theta = self.azimuth_offset + TAU * col as f64 / out_width as f64;
        let v = if out_height > 1 {
            row as f64 / (out_height - 1) as f64
        } else {
            0.0
        };
        let r = self.radius_of(v);
        (
            self.center_x + r * libm::cos(theta),
            self.center_y + r * libm::sin(theta),
        )
    }
}

fn sample_bilinear(src: &Raster, c: usize, x: f64, y: f64, fill: f32) -> f32 {
    let (w, h) = (src.width as f64, src.height as f64);
    if !(0.0..=w - 1.0).contains(&x) || !(0.0..=h - 1.0).contains(&y) {
        return fill;
    }
    let x0 = libm::floor(x) as usize;
    let y0 = libm::floor(y) as usize;
    let x1 = (x0 + 1).min(src.width - 1);
    let y1 = (y0 + 1).min(src.height - 1);
    let fx = (x - x0 as f64) as f32;
    let fy = (y - y0 as f64) as f32;
    let top = (1.0 - fx) * src.at(c, y0, x0) + fx * src.at(c, y0, x1);
    let bottom = (1.0 - fx) * src.at(c, y1, x0) + fx * src.at(c, y1, x1);
    (1.0 - fy) * top + fy * bottom
}

/// Polar-to-rectangular resampling of the annular ring.
pub fn unfold(
    annular: &Raster,
    model: &AnnularCameraModel,
    out_width: usize,
    out_height: usize,
    fill: f32,
) -> Result<Raster> {
    model.validate()?;
    if out_width < 2 || out_height < 1 {
        return Err(invalid!("panorama must be at least 2x1, got {out_width}x{out_height}"));
    }
    if annular.width != model.source_width || annular.height != model.source_height {
        return Err(invalid!(
            "annular image is {}x{}, camera model expects {}x{}",
            annular.width,
            annular.height,
            model.source_width,
            model.source_height
        ));
    }
    let c = annular.channels;
    let mut data = alloc::vec![0.0f32; c * out_height * out_width];
    for i in 0..out_height {
        for j in 0..out_width {
            let (x, y) = model.source_point(i, j, out_width, out_height);
            for ch in 0..c {
                data[(ch * out_height + i) * out_width + j] = match annular.kind {
                    RasterKind::Image => sample_bilinear(annular, ch, x, y, fill),
                    RasterKind::ClassIds => sample_nearest(annular, ch, x, y, fill),
                };
            }
        }
    }
    Ok(Raster {
        channels: c,
        height: out_height,
        width: out_width,
        data,
        kind: annular.kind,
    })
}

fn sample_nearest(src: &Raster, c: usize, x: f64, y: f64, fill: f32) -> f32 {
    let xi = libm::round(x);
    let yi = libm::round(y);
    if xi < 0.0 || yi < 0.0 || xi >= src.width as f64 || yi >= src.height as f64 {
        return fill;
    }
    src.at(c, yi as usize, xi as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Nearest,
    Bilinear,
}

/// Projects a panorama back onto the annular image. Pixels outside the ring
/// receive the ignore value: `0` for images, [`IGNORE_ID`] for class rasters.
pub fn fold_back(panorama: &Raster, model: &AnnularCameraModel, mode: SampleMode) -> Result<Raster> {
    model.validate()?;
    if panorama.width < 2 || panorama.height < 2 {
        return Err(invalid!(
            "panorama must be at least 2x2, got {}x{}",
            panorama.width,
            panorama.height
        ));
    }
    if panorama.kind == RasterKind::ClassIds && mode == SampleMode::Bilinear {
        return Err(invalid!("class ids cannot be interpolated; use nearest sampling"));
    }
    let ignore = match panorama.kind {
        RasterKind::Image => 0.0,
        RasterKind::ClassIds => IGNORE_ID as f32,
    };
    let (pw, ph) = (panorama.width, panorama.height);
    let (sw, sh) = (model.source_width, model.source_height);
    let c = panorama.channels;
    let (r_lo, r_hi) = ring_bounds(model);
    let mut data = alloc::vec![ignore; c * sh * sw];
    for y in 0..sh {
        for x in 0..sw {
            let dx = x as f64 - model.center_x;
            let dy = y as f64 - model.center_y;
            let r = libm::hypot(dx, dy);
            if r < r_lo || r > r_hi {
                continue;
            }
            let Some(v) = model.row_param_of(r) else {
                continue;
            };
            let mut theta = libm::fmod(libm::atan2(dy, dx) - model.azimuth_offset, TAU);
            if theta < 0.0 {
                theta += TAU;
            }
            let col = theta / TAU * pw as f64;
            let row = v * (ph - 1) as f64;
            for ch in 0..c {
                data[(ch * sh + y) * sw + x] = match mode {
                    SampleMode::Nearest => {
                        let j = (libm::round(col) as usize) % pw;
                        let i = (libm::round(row) as usize).min(ph - 1);
                        panorama.at(ch, i, j)
                    }
                    SampleMode::Bilinear => periodic_bilinear(panorama, ch, col, row),
                };
            }
        }
    }
    Ok(Raster {
        channels: c,
        height: sh,
        width: sw,
        data,
        kind: panorama.kind,
    })
}

fn ring_bounds(model: &AnnularCameraModel) -> (f64, f64) {
    let (a, b) = (model.radius_of(0.0), model.radius_of(1.0));
    (a.min(b), a.max(b))
}

fn periodic_bilinear(p: &Raster, c: usize, col: f64, row: f64) -> f32 {
    let j0f = libm::floor(col);
    let fx = (col - j0f) as f32;
    let j0 = (j0f as usize) % p.width;
    let j1 = (j0 + 1) % p.width;
    let i0 = (libm::floor(row) as usize).min(p.height - 1);
    let i1 = (i0 + 1).min(p.height - 1);
    let fy = if i0 == i1 { 0.0 } else { (row - i0 as f64) as f32 };
    let top = (1.0 - fx) * p.at(c, i0, j0) + fx * p.at(c, i0, j1);
    let bottom = (1.0 - fx) * p.at(c, i1, j0) + fx * p.at(c, i1, j1);
    (1.0 - fy) * top + fy * bottom
}
