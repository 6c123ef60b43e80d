//! Rejection of keypoint matches whose semantic labels disagree between frames.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::segmap::SegmentationMap;

/// Sub-pixel image position; pixel centres sit at integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub point_a: Point,
    pub point_b: Point,
    /// Matcher confidence, passed through untouched.
    pub score: f64,
}

/// Why a match was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rejection {
    Labels(u8, u8),
    OutOfFrame,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilterReport {
    pub total: usize,
    pub kept: usize,
    pub rejected: usize,
    pub histogram: BTreeMap<Rejection, usize>,
}

/// Nearest pixel index along one axis: `round(x)` with halves going down,
/// defined for `x` in `(-0.5, n - 0.5]`.
fn nearest(x: f64, n: usize) -> Option<usize> {
    if !x.is_finite() {
        return None;
    }
    let i = libm::ceil(x - 0.5);
    (i >= 0.0 && i < n as f64).then_some(i as usize)
}

/// Class id of the pixel nearest to `p`.
pub fn label_at(seg: &SegmentationMap, p: Point) -> Result<u8> {
    match (nearest(p.x, seg.width()), nearest(p.y, seg.height())) {
        (Some(x), Some(y)) => Ok(seg.at(y, x)),
        _ => Err(invalid!(
            "point ({}, {}) is outside the {}x{} map",
            p.x,
            p.y,
            seg.width(),
            seg.height()
        )),
    }
}

/// Keeps matches whose endpoints carry the same non-ignored label, in input
/// order. Points outside either map are rejected, not errors.
pub fn filter_matches(
    matches: &[Match],
    seg_a: &SegmentationMap,
    seg_b: &SegmentationMap,
    ignore_id: u8,
) -> (Vec<Match>, FilterReport) {
    let mut kept = Vec::new();
    let mut report = FilterReport {
        total: matches.len(),
        ..FilterReport::default()
    };
    for m in matches {
        let verdict = match (label_at(seg_a, m.point_a), label_at(seg_b, m.point_b)) {
            (Ok(a), Ok(b)) if a == b && a != ignore_id => None,
            (Ok(a), Ok(b)) => Some(Rejection::Labels(a, b)),
            _ => Some(Rejection::OutOfFrame),
        };
        match verdict {
            None => kept.push(*m),
            Some(r) => *report.histogram.entry(r).or_default() += 1,
        }
    }
    report.kept = kept.len();
    report.rejected = report.total - report.kept;
    (kept, report)
}
