//! JSON configuration files: camera model, class map and pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dspass_core::adaptation::{SegmentPadding, SegmentPlan};
use dspass_core::evaluation::{ClassEntry, ClassMap};
use dspass_core::geometry::AnnularCameraModel;
use dspass_core::swaftnet::NetworkDef;

use crate::error::CliError;

/// Version written into, and accepted from, every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

fn check_version(version: Option<u32>, path: &Path) -> Result<(), CliError> {
    match version {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(CliError::Usage(format!(
            "{}: unsupported schema version {v}",
            path.display()
        ))),
    }
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub center_x: f64,
    pub center_y: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub source_width: usize,
    pub source_height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_poly: Option<Vec<f64>>,
    #[serde(default)]
    pub azimuth_offset: f64,
    #[serde(default)]
    pub invert_rows: bool,
}

impl From<CameraModelFile> for AnnularCameraModel {
    fn from(f: CameraModelFile) -> Self {
        AnnularCameraModel {
            center_x: f.center_x,
            center_y: f.center_y,
            r_inner: f.r_inner,
            r_outer: f.r_outer,
            radial_poly: f.radial_poly,
            source_width: f.source_width,
            source_height: f.source_height,
            azimuth_offset: f.azimuth_offset,
            invert_rows: f.invert_rows,
        }
    }
}

pub fn load_camera_model(path: &Path) -> Result<AnnularCameraModel, CliError> {
    let f: CameraModelFile = read_json(path)?;
    check_version(f.version, path)?;
    let model = AnnularCameraModel::from(f);
    model
        .validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassFileEntry {
    pub id: u8,
    pub name: String,
    pub color: [u8; 3],
    /// Evaluation class this training class is scored as; the target must
    /// be another entry's id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_id: Option<u8>,
}

/// Either a bare array of classes or a versioned object around one.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ClassFile {
    Bare(Vec<ClassFileEntry>),
    Versioned {
        version: Option<u32>,
        classes: Vec<ClassFileEntry>,
    },
}

pub fn class_map_from_entries(entries: &[ClassFileEntry]) -> dspass_core::Result<ClassMap> {
    let remap: BTreeMap<u8, u8> = entries
        .iter()
        .filter_map(|e| e.eval_id.map(|t| (e.id, t)))
        .collect();
    ClassMap::new(
        entries
            .iter()
            .map(|e| ClassEntry {
                id: e.id,
                name: e.name.clone(),
                color: e.color,
            })
            .collect(),
        (!remap.is_empty()).then_some(remap),
    )
}

pub fn load_class_map(path: &Path) -> Result<ClassMap, CliError> {
    let entries = match read_json::<ClassFile>(path)? {
        ClassFile::Bare(e) => e,
        ClassFile::Versioned { version, classes } => {
            check_version(version, path)?;
            classes
        }
    };
    class_map_from_entries(&entries).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaddingMode {
    /// Ring wrap for a whole pass, neighbour exchange between segments.
    #[default]
    Ring,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPointName {
    #[default]
    AfterSpp,
}

/// Optional overrides of the default network definition.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkOverrides {
    pub num_classes: Option<usize>,
    pub encoder_stage_channels: Option<Vec<usize>>,
    pub decoder_width: Option<usize>,
    pub se_reduction: Option<usize>,
    pub spp_grid_levels: Option<Vec<usize>>,
}

impl NetworkOverrides {
    pub fn apply(&self, mut def: NetworkDef) -> NetworkDef {
        if let Some(v) = self.num_classes {
            def.num_classes = v;
        }
        if let Some(v) = &self.encoder_stage_channels {
            def.encoder_stage_channels = v.clone();
        }
        if let Some(v) = self.decoder_width {
            def.decoder_width = v;
        }
        if let Some(v) = self.se_reduction {
            def.se_reduction = v;
        }
        if let Some(v) = &self.spp_grid_levels {
            def.spp_grid_levels = v.clone();
        }
        def
    }
}

fn default_segments() -> usize {
    4
}

/// Pipeline configuration. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default = "default_segments")]
    pub num_segments: usize,
    #[serde(default)]
    pub overlap: usize,
    #[serde(default)]
    pub padding_mode: PaddingMode,
    /// `[width, height]` of every segment fed to the feature model.
    #[serde(default)]
    pub resize_to: Option<[usize; 2]>,
    #[serde(default)]
    pub split_point: SplitPointName,
    #[serde(default)]
    pub class_map: Option<PathBuf>,
    #[serde(default)]
    pub weights: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub network: NetworkOverrides,
    #[serde(default)]
    pub camera_model: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: Some(SCHEMA_VERSION),
            num_segments: default_segments(),
            overlap: 0,
            padding_mode: PaddingMode::Ring,
            resize_to: None,
            split_point: SplitPointName::AfterSpp,
            class_map: None,
            weights: None,
            seed: None,
            network: NetworkOverrides::default(),
            camera_model: None,
            output_dir: None,
        }
    }
}

impl PipelineConfig {
    /// Reads, resolves paths and checks the invariants that need no input image.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: PipelineConfig = read_json(path)?;
        check_version(cfg.version, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.class_map,
            &mut cfg.weights,
            &mut cfg.camera_model,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.seed.is_some() && self.weights.is_some() {
            return Err("`seed` and `weights` are mutually exclusive".into());
        }
        if self.num_segments == 0 {
            return Err("`num_segments` must be at least 1".into());
        }
        for p in [&self.class_map, &self.weights, &self.camera_model].into_iter().flatten() {
            if !p.exists() {
                return Err(format!("referenced file {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    pub fn network_def(&self) -> NetworkDef {
        self.network.apply(NetworkDef::default())
    }

    pub fn segment_plan(&self) -> SegmentPlan {
        SegmentPlan {
            num_segments: self.num_segments,
            overlap: self.overlap,
            resize_to: self.resize_to.map(|[w, h]| (w, h)),
            padding: match self.padding_mode {
                PaddingMode::Ring => SegmentPadding::Exchange,
                PaddingMode::Zero => SegmentPadding::Zero,
            },
        }
    }
}
