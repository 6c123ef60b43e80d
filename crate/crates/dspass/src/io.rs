//! PNG and match-file IO.
//!
//! RGB images load to `[0, 1]` samples. Class maps are 8-bit single-channel
//! PNGs holding raw class ids.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use dspass_core::evaluation::ClassMap;
use dspass_core::geometry::{Raster, RasterKind};
use dspass_core::semantic_vo::{Match, Point};
use dspass_core::SegmentationMap;

use crate::error::CliError;

fn open(path: &Path) -> Result<DynamicImage, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("{}: no such file", path.display())));
    }
    image::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn save(img: DynamicImage, path: &Path) -> Result<(), CliError> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Loads a PNG as either an RGB image or, when single-channel 8-bit, a class map.
pub fn read_raster(path: &Path) -> Result<Raster, CliError> {
    match open(path)? {
        DynamicImage::ImageLuma8(g) => Ok(Raster::from_classes(&gray_to_map(g))),
        other => Ok(rgb_to_raster(&other.to_rgb8())),
    }
}

/// Loads any PNG as a 3-channel image in `[0, 1]`.
pub fn read_rgb(path: &Path) -> Result<Raster, CliError> {
    Ok(rgb_to_raster(&open(path)?.to_rgb8()))
}

fn rgb_to_raster(img: &RgbImage) -> Raster {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut data = vec![0.0f32; 3 * h * w];
    for (x, y, p) in img.enumerate_pixels() {
        for c in 0..3 {
            data[(c * h + y as usize) * w + x as usize] = p[c] as f32 / 255.0;
        }
    }
    Raster::new(3, h, w, data).expect("8-bit samples are finite")
}

fn gray_to_map(g: GrayImage) -> SegmentationMap {
    let (w, h) = (g.width() as usize, g.height() as usize);
    SegmentationMap::new(h, w, g.into_raw()).expect("dimensions match")
}

pub fn read_class_png(path: &Path) -> Result<SegmentationMap, CliError> {
    match open(path)? {
        DynamicImage::ImageLuma8(g) => Ok(gray_to_map(g)),
        other => Err(CliError::Data(format!(
            "{}: class maps must be 8-bit single-channel, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

pub fn write_class_png(seg: &SegmentationMap, path: &Path) -> Result<(), CliError> {
    let img = GrayImage::from_raw(seg.width() as u32, seg.height() as u32, seg.ids().to_vec())
        .ok_or_else(|| CliError::Internal("class map buffer size".into()))?;
    save(DynamicImage::ImageLuma8(img), path)
}

/// Writes a raster: class-id rasters as gray ids, 1- or 3-channel images as
/// 8-bit gray or RGB.
pub fn write_raster(r: &Raster, path: &Path) -> Result<(), CliError> {
    if r.kind == RasterKind::ClassIds {
        return write_class_png(&r.to_classes()?, path);
    }
    let (w, h) = (r.width, r.height);
    let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let img = match r.channels {
        1 => DynamicImage::ImageLuma8(GrayImage::from_fn(w as u32, h as u32, |x, y| {
            image::Luma([q(r.at(0, y as usize, x as usize))])
        })),
        3 => DynamicImage::ImageRgb8(RgbImage::from_fn(w as u32, h as u32, |x, y| {
            let (x, y) = (x as usize, y as usize);
            image::Rgb([q(r.at(0, y, x)), q(r.at(1, y, x)), q(r.at(2, y, x))])
        })),
        c => return Err(CliError::Data(format!("cannot write a {c}-channel image as PNG"))),
    };
    save(img, path)
}

/// Image and label for one evaluation sample. Labels are remapped to
/// evaluation ids when the class map carries a remap; ids outside the class
/// table are rejected.
pub fn load_pair(image: &Path, label: &Path, classes: &ClassMap) -> Result<(Raster, SegmentationMap), CliError> {
    let img = read_rgb(image)?;
    let seg = read_class_png(label)?;
    if (img.height, img.width) != (seg.height(), seg.width()) {
        return Err(CliError::Data(format!(
            "{} is {}x{} but {} is {}x{}",
            image.display(),
            img.width,
            img.height,
            label.display(),
            seg.width(),
            seg.height()
        )));
    }
    Ok((img, remap_checked(seg, classes, label)?))
}

pub(crate) fn remap_checked(seg: SegmentationMap, classes: &ClassMap, path: &Path) -> Result<SegmentationMap, CliError> {
    if classes.eval_remap().is_none() {
        if let Some(&id) = seg
            .ids()
            .iter()
            .find(|&&id| id != classes.ignore_id() && classes.entry(id).is_none())
        {
            return Err(CliError::Data(format!("{}: unknown class id {id}", path.display())));
        }
        return Ok(seg);
    }
    Ok(classes.remap(&seg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchRecord {
    pub xa: f64,
    pub ya: f64,
    pub xb: f64,
    pub yb: f64,
    pub score: f64,
}

impl From<MatchRecord> for Match {
    fn from(m: MatchRecord) -> Self {
        Match {
            point_a: Point::new(m.xa, m.ya),
            point_b: Point::new(m.xb, m.yb),
            score: m.score,
        }
    }
}

impl From<&Match> for MatchRecord {
    fn from(m: &Match) -> Self {
        MatchRecord {
            xa: m.point_a.x,
            ya: m.point_a.y,
            xb: m.point_b.x,
            yb: m.point_b.y,
            score: m.score,
        }
    }
}

pub fn read_matches(path: &Path) -> Result<Vec<Match>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let records: Vec<MatchRecord> =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(records.into_iter().map(Match::from).collect())
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
