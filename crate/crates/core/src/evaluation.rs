//! Per-class IoU and mIoU over confusion matrices.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Error, Result};
use crate::geometry::Raster;
use crate::segmap::{SegmentationMap, IGNORE_ID};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
    pub color: [u8; 3],
}

/// Class table with an optional remap from training ids to evaluation ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    entries: Vec<ClassEntry>,
    /// Training id → evaluation id. Training ids without an entry map to
    /// `ignore_id` once a remap is configured.
    eval_remap: Option<BTreeMap<u8, u8>>,
    ignore_id: u8,
}

impl ClassMap {
    pub fn new(entries: Vec<ClassEntry>, eval_remap: Option<BTreeMap<u8, u8>>) -> Result<Self> {
        let mut seen = [false; 256];
        for e in &entries {
            if e.id == IGNORE_ID {
                return Err(invalid!("class `{}` uses the ignore id {IGNORE_ID}", e.name));
            }
            if core::mem::replace(&mut seen[e.id as usize], true) {
                return Err(invalid!("duplicate class id {}", e.id));
            }
        }
        if let Some(remap) = &eval_remap {
            for (&from, &to) in remap {
                if to == IGNORE_ID {
                    return Err(invalid!("training id {from} is remapped onto the ignore id"));
                }
                if !seen[to as usize] {
                    return Err(invalid!("training id {from} is remapped to unknown class {to}"));
                }
            }
        }
        Ok(Self {
            entries,
            eval_remap,
            ignore_id: IGNORE_ID,
        })
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn eval_remap(&self) -> Option<&BTreeMap<u8, u8>> {
        self.eval_remap.as_ref()
    }

    pub fn ignore_id(&self) -> u8 {
        self.ignore_id
    }

    /// One past the largest class id: the confusion-matrix size.
    pub fn num_classes(&self) -> usize {
        self.entries.iter().map(|e| e.id as usize + 1).max().unwrap_or(0)
    }

    pub fn entry(&self, id: u8) -> Option<&ClassEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn id_for_color(&self, color: [u8; 3]) -> Option<u8> {
        self.entries.iter().find(|e| e.color == color).map(|e| e.id)
    }

    /// Ids of all configured classes, ascending.
    pub fn class_ids(&self) -> Vec<u8> {
        let mut ids: Vec<u8> = self.entries.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids
    }

    /// Classes that are scored: the remap targets when a remap is
    /// configured, every class otherwise. Ascending.
    pub fn eval_classes(&self) -> Vec<u8> {
        match &self.eval_remap {
            Some(table) => {
                let mut ids: Vec<u8> = table.values().copied().collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            }
            None => self.class_ids(),
        }
    }

    /// Applies the evaluation remap; without one, ids pass through unchanged.
    pub fn remap(&self, seg: &SegmentationMap) -> SegmentationMap {
        let Some(table) = &self.eval_remap else {
            return seg.clone();
        };
        let mut lut = [self.ignore_id; 256];
        for (&from, &to) in table {
            lut[from as usize] = to;
        }
        lut[self.ignore_id as usize] = self.ignore_id;
        SegmentationMap::from_fn(seg.height(), seg.width(), |y, x| lut[seg.at(y, x) as usize])
    }

    /// Colour image of a class map in `[0, 1]`; ignore and unknown ids are black.
    pub fn render(&self, seg: &SegmentationMap) -> Raster {
        let mut lut = [[0u8; 3]; 256];
        for e in &self.entries {
            lut[e.id as usize] = e.color;
        }
        lut[self.ignore_id as usize] = [0; 3];
        let (h, w) = (seg.height(), seg.width());
        let mut data = vec![0.0f32; 3 * h * w];
        for (p, &id) in seg.ids().iter().enumerate() {
            for c in 0..3 {
                data[c * h * w + p] = lut[id as usize][c] as f32 / 255.0;
            }
        }
        Raster::new(3, h, w, data).expect("rendered samples are finite")
    }
}

/// Counts indexed `[ground truth][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
    /// Valid ground-truth pixels whose prediction was the ignore id, per class.
    /// They count against the class's IoU as misses.
    missed: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
            missed: vec![0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.classes + pred]
    }

    pub fn missed(&self, gt: usize) -> u64 {
        self.missed[gt]
    }

    /// Scored pixels: every pixel whose ground truth is not ignored.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.missed.iter().sum::<u64>()
    }

    pub fn row_sum(&self, gt: usize) -> u64 {
        self.counts[gt * self.classes..(gt + 1) * self.classes].iter().sum::<u64>() + self.missed[gt]
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.classes).map(|g| self.get(g, pred)).sum()
    }

    /// Adds one image pair. Pixels with ignored ground truth are skipped.
    pub fn accumulate(&mut self, pred: &SegmentationMap, gt: &SegmentationMap) -> Result<()> {
        if (pred.height(), pred.width()) != (gt.height(), gt.width()) {
            return Err(mismatch!(
                "prediction is {}x{}, ground truth {}x{}",
                pred.height(),
                pred.width(),
                gt.height(),
                gt.width()
            ));
        }
        let k = self.classes;
        let check = |id: u8| {
            if id != IGNORE_ID && id as usize >= k {
                Err(Error::ClassOutOfRange { id, classes: k })
            } else {
                Ok(())
            }
        };
        // Validate first so a failing pair leaves the matrix untouched.
        for (&p, &g) in pred.ids().iter().zip(gt.ids()) {
            check(p)?;
            check(g)?;
        }
        for (&p, &g) in pred.ids().iter().zip(gt.ids()) {
            if g == IGNORE_ID {
                continue;
            }
            if p == IGNORE_ID {
                self.missed[g as usize] += 1;
            } else {
                self.counts[g as usize * k + p as usize] += 1;
            }
        }
        Ok(())
    }

    /// Sums another matrix of the same size into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(mismatch!("{} vs {} classes", self.classes, other.classes));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.missed.iter_mut().zip(&other.missed) {
            *a += b;
        }
        Ok(())
    }

    /// `tp / (row + col - tp)`; `None` when the class never occurs in
    /// either ground truth or prediction.
    pub fn iou(&self, class: usize) -> Option<f64> {
        if class >= self.classes {
            return None;
        }
        let tp = self.get(class, class);
        let denom = self.row_sum(class) + self.col_sum(class) - tp;
        (denom > 0).then(|| tp as f64 / denom as f64)
    }

    /// Mean IoU over `subset`, skipping classes whose IoU is undefined.
    pub fn miou(&self, subset: &[usize]) -> Result<f64> {
        let defined: Vec<f64> = subset.iter().filter_map(|&c| self.iou(c)).collect();
        if defined.is_empty() {
            return Err(Error::NoScorableClasses);
        }
        Ok(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Reference results of the trained SwaftNet on the PASS benchmark (percent).
/// They cannot be reproduced here and exist for report formatting.
pub const PASS_REFERENCE_CLASSES: [&str; 6] = ["Car", "Road", "Sidewalk", "Crosswalk", "Curb", "Person"];
pub const PASS_REFERENCE_IOU: [f64; 6] = [93.6, 77.6, 53.7, 62.1, 38.3, 80.7];
pub const PASS_REFERENCE_MIOU: f64 = 67.7;
