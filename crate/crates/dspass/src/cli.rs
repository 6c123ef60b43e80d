//! Command-line surface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dspass_core::adaptation::{full_pass, run_adapted, seam_report, summarize_seams};
use dspass_core::evaluation::{ClassMap, ConfusionMatrix};
use dspass_core::geometry::{fold_back, unfold, RasterKind, SampleMode};
use dspass_core::semantic_vo::{filter_matches, Rejection};
use dspass_core::swaftnet::{BorderMode, Init, Network, OUTPUT_STRIDE};
use dspass_core::{SegmentationMap, Tensor, IGNORE_ID};

use crate::config::{load_camera_model, load_class_map, PaddingMode, PipelineConfig, SCHEMA_VERSION};
use crate::container::{encode_logits, load_weights, save_weights};
use crate::error::CliError;
use crate::io::{
    read_class_png, read_matches, read_raster, read_rgb, remap_checked, write_class_png, write_json, write_raster,
    MatchRecord,
};

#[derive(Debug, Parser)]
#[command(name = "dspass", version, about = "Panoramic annular semantic segmentation toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unfold an annular image into a panorama.
    Unfold(UnfoldArgs),
    /// Project a panorama back onto the annular image.
    Fold(FoldArgs),
    /// Segment a panorama.
    Infer(InferArgs),
    /// Score predicted class maps against ground truth.
    Eval(EvalArgs),
    /// Keep keypoint matches whose labels agree in both frames.
    FilterMatches(FilterArgs),
    /// Write a seeded weight container for a network definition.
    InitWeights(InitArgs),
}

#[derive(Debug, Args)]
pub struct UnfoldArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    /// Value for samples outside the annular image (default 0, or 255 for class maps).
    #[arg(long)]
    pub fill: Option<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleArg {
    Nearest,
    Bilinear,
}

#[derive(Debug, Args)]
pub struct FoldArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to bilinear for images and nearest for class maps.
    #[arg(long, value_enum)]
    pub sample: Option<SampleArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InferMode {
    Adapted,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaddingArg {
    Ring,
    Zero,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Class-id PNG.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = InferMode::Adapted)]
    pub mode: InferMode,
    /// Write the logits as a tensor container.
    #[arg(long)]
    pub emit_logits: Option<PathBuf>,
    /// Compare against a whole-panorama ring pass and write the per-column profile.
    #[arg(long)]
    pub seam_report: Option<PathBuf>,
    /// Write a colour rendering (needs a class map in the config).
    #[arg(long)]
    pub render: Option<PathBuf>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub overlap: Option<usize>,
    #[arg(long, value_enum)]
    pub padding: Option<PaddingArg>,
    #[arg(long, conflicts_with = "weights")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred_dir: PathBuf,
    #[arg(long)]
    pub gt_dir: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub matches: PathBuf,
    #[arg(long)]
    pub seg_a: PathBuf,
    #[arg(long)]
    pub seg_b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = IGNORE_ID)]
    pub ignore_id: u8,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Takes the network definition and seed from a pipeline config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command line, inside a thread pool of the requested size.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Unfold(a) => cmd_unfold(&a),
        Command::Fold(a) => cmd_fold(&a),
        Command::Infer(a) => cmd_infer(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::FilterMatches(a) => cmd_filter_matches(&a),
        Command::InitWeights(a) => cmd_init_weights(&a),
    }
}

pub fn cmd_unfold(a: &UnfoldArgs) -> Result<(), CliError> {
    let model = load_camera_model(&a.model)?;
    let src = read_raster(&a.input)?;
    let fill = a.fill.unwrap_or(match src.kind {
        RasterKind::Image => 0.0,
        RasterKind::ClassIds => IGNORE_ID as f32,
    });
    let pano = unfold(&src, &model, a.width, a.height, fill).map_err(|e| CliError::Usage(e.to_string()))?;
    write_raster(&pano, &a.out)
}

pub fn cmd_fold(a: &FoldArgs) -> Result<(), CliError> {
    let model = load_camera_model(&a.model)?;
    let pano = read_raster(&a.input)?;
    let mode = match (a.sample, pano.kind) {
        (Some(SampleArg::Nearest), _) | (None, RasterKind::ClassIds) => SampleMode::Nearest,
        (Some(SampleArg::Bilinear), _) | (None, RasterKind::Image) => SampleMode::Bilinear,
    };
    let out = fold_back(&pano, &model, mode).map_err(|e| CliError::Usage(e.to_string()))?;
    write_raster(&out, &a.out)
}

fn apply_overrides(cfg: &mut PipelineConfig, a: &InferArgs) -> Result<(), CliError> {
    if let Some(n) = a.segments {
        cfg.num_segments = n;
    }
    if let Some(o) = a.overlap {
        cfg.overlap = o;
    }
    if let Some(p) = a.padding {
        cfg.padding_mode = match p {
            PaddingArg::Ring => PaddingMode::Ring,
            PaddingArg::Zero => PaddingMode::Zero,
        };
    }
    if let Some(s) = a.seed {
        cfg.seed = Some(s);
        cfg.weights = None;
    }
    if let Some(w) = &a.weights {
        cfg.weights = Some(w.clone());
        cfg.seed = None;
    }
    cfg.validate().map_err(CliError::Usage)
}

fn build_network(cfg: &PipelineConfig) -> Result<Network, CliError> {
    let init = match (&cfg.weights, cfg.seed) {
        (Some(path), _) => Init::FromWeights(load_weights(path)?),
        (None, Some(seed)) => Init::SeededRandom(seed),
        (None, None) => return Err(CliError::Usage("the config names neither `weights` nor `seed`".into())),
    };
    Network::build(cfg.network_def(), init).map_err(|e| match e {
        dspass_core::Error::InvalidInput(m) => CliError::Usage(format!("network definition: {m}")),
        other => CliError::Data(format!("weights: {other}")),
    })
}

fn check_full_size(h: usize, w: usize) -> Result<(), CliError> {
    if !h.is_multiple_of(OUTPUT_STRIDE) || !w.is_multiple_of(OUTPUT_STRIDE) {
        return Err(CliError::Data(format!(
            "a whole-panorama pass needs both sides divisible by {OUTPUT_STRIDE}, got {w}x{h}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct SeamReportJson<'a> {
    version: u32,
    mode: &'a str,
    num_segments: usize,
    approximate: bool,
    max: f32,
    boundary_max: f32,
    interior_median: f32,
    profile: Vec<f32>,
}

pub fn cmd_infer(a: &InferArgs) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    apply_overrides(&mut cfg, a)?;
    let plan = cfg.segment_plan();
    let pano = read_rgb(&a.input)?;
    let (h, w) = (pano.height, pano.width);

    // Reject sizes before any weights are built or layers run.
    if a.mode == InferMode::Adapted || a.seam_report.is_some() {
        plan.validate_for_inference(w).map_err(CliError::from)?;
    }
    if a.mode == InferMode::Full || a.seam_report.is_some() {
        check_full_size(h, w)?;
    }
    let classes = match (&a.render, &cfg.class_map) {
        (Some(_), Some(p)) => Some(load_class_map(p)?),
        (Some(_), None) => return Err(CliError::Usage("--render needs `class_map` in the config".into())),
        _ => None,
    };

    let net = build_network(&cfg)?;
    let x = Tensor::from(pano);
    let border = match cfg.padding_mode {
        PaddingMode::Ring => BorderMode::Ring,
        PaddingMode::Zero => BorderMode::Zero,
    };
    let (logits, approximate) = match a.mode {
        InferMode::Adapted => {
            let out = run_adapted(&net, &x, &plan)?;
            (out.logits, out.approximate)
        }
        InferMode::Full => (full_pass(&net, &x, border)?, false),
    };
    let seg = SegmentationMap::from_logits(&logits)?;
    write_class_png(&seg, &a.out)?;

    if let (Some(path), Some(classes)) = (&a.render, &classes) {
        write_raster(&classes.render(&seg), path)?;
    }
    if let Some(path) = &a.emit_logits {
        std::fs::write(path, encode_logits(&logits)).map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = &a.seam_report {
        let (adapted, reference, approx) = match a.mode {
            InferMode::Adapted => (logits, full_pass(&net, &x, BorderMode::Ring)?, approximate),
            InferMode::Full => {
                let out = run_adapted(&net, &x, &plan)?;
                (out.logits, full_pass(&net, &x, BorderMode::Ring)?, out.approximate)
            }
        };
        let profile = seam_report(&adapted, &reference)?;
        let s = summarize_seams(&profile, plan.num_segments, 4)?;
        write_json(
            &SeamReportJson {
                version: SCHEMA_VERSION,
                mode: match a.mode {
                    InferMode::Adapted => "adapted",
                    InferMode::Full => "full",
                },
                num_segments: plan.num_segments,
                approximate: approx,
                max: s.max,
                boundary_max: s.boundary_max,
                interior_median: s.interior_median,
                profile,
            },
            path,
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ClassScore {
    pub id: u8,
    pub name: String,
    /// Absent when the class occurs in neither ground truth nor prediction.
    pub iou: Option<f64>,
    pub true_positives: u64,
    pub gt_pixels: u64,
    pub pred_pixels: u64,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub version: u32,
    pub images: usize,
    pub scored_pixels: u64,
    pub classes: Vec<ClassScore>,
    pub miou: f64,
}

fn png_names(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_owned(), path);
            }
        }
    }
    Ok(out)
}

/// Scores every ground-truth map against the prediction of the same basename.
/// Predictions of another size are resampled to the ground truth by nearest
/// neighbour.
pub fn evaluate_dirs(pred_dir: &Path, gt_dir: &Path, classes: &ClassMap) -> Result<EvalReport, CliError> {
    let preds = png_names(pred_dir)?;
    let gts = png_names(gt_dir)?;
    if gts.is_empty() {
        return Err(CliError::Data(format!("{}: no PNG files", gt_dir.display())));
    }
    if let Some(name) = gts.keys().find(|k| !preds.contains_key(*k)) {
        return Err(CliError::Data(format!("no prediction for ground truth `{name}`")));
    }
    if let Some(name) = preds.keys().find(|k| !gts.contains_key(*k)) {
        return Err(CliError::Data(format!("no ground truth for prediction `{name}`")));
    }
    let mut cm = ConfusionMatrix::new(classes.num_classes());
    for (name, gt_path) in &gts {
        let pred_path = &preds[name];
        let gt = remap_checked(read_class_png(gt_path)?, classes, gt_path)?;
        let mut pred = remap_checked(read_class_png(pred_path)?, classes, pred_path)?;
        if (pred.height(), pred.width()) != (gt.height(), gt.width()) {
            pred = pred.resize_nearest(gt.height(), gt.width());
        }
        cm.accumulate(&pred, &gt)
            .map_err(|e| CliError::Data(format!("`{name}`: {e}")))?;
    }
    let ids = classes.eval_classes();
    let scores = ids
        .iter()
        .map(|&id| {
            let c = id as usize;
            ClassScore {
                id,
                name: classes.entry(id).map(|e| e.name.clone()).unwrap_or_default(),
                iou: cm.iou(c),
                true_positives: cm.get(c, c),
                gt_pixels: cm.row_sum(c),
                pred_pixels: cm.col_sum(c),
            }
        })
        .collect();
    let subset: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
    Ok(EvalReport {
        version: SCHEMA_VERSION,
        images: gts.len(),
        scored_pixels: cm.total(),
        classes: scores,
        miou: cm.miou(&subset)?,
    })
}

fn report_csv(r: &EvalReport) -> String {
    let mut s = String::from("id,name,iou,true_positives,gt_pixels,pred_pixels\n");
    for c in &r.classes {
        let iou = c.iou.map(|v| v.to_string()).unwrap_or_default();
        s += &format!(
            "{},{},{iou},{},{},{}\n",
            c.id, c.name, c.true_positives, c.gt_pixels, c.pred_pixels
        );
    }
    s += &format!(",mIoU,{},,,\n", r.miou);
    s
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let classes = load_class_map(&a.classes)?;
    let report = evaluate_dirs(&a.pred_dir, &a.gt_dir, &classes)?;
    write_json(&report, &a.out)?;
    if let Some(path) = &a.csv {
        std::fs::write(path, report_csv(&report)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RejectionJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    label_a: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_b: Option<u8>,
    out_of_frame: bool,
    count: usize,
}

#[derive(Serialize)]
struct FilterJson {
    version: u32,
    total: usize,
    kept: usize,
    rejected: usize,
    rejections: Vec<RejectionJson>,
    matches: Vec<MatchRecord>,
}

pub fn cmd_filter_matches(a: &FilterArgs) -> Result<(), CliError> {
    let matches = read_matches(&a.matches)?;
    let seg_a = read_class_png(&a.seg_a)?;
    let seg_b = read_class_png(&a.seg_b)?;
    let (kept, report) = filter_matches(&matches, &seg_a, &seg_b, a.ignore_id);
    let rejections = report
        .histogram
        .iter()
        .map(|(k, &count)| match *k {
            Rejection::Labels(la, lb) => RejectionJson {
                label_a: Some(la),
                label_b: Some(lb),
                out_of_frame: false,
                count,
            },
            Rejection::OutOfFrame => RejectionJson {
                label_a: None,
                label_b: None,
                out_of_frame: true,
                count,
            },
        })
        .collect();
    write_json(
        &FilterJson {
            version: SCHEMA_VERSION,
            total: report.total,
            kept: report.kept,
            rejected: report.rejected,
            rejections,
            matches: kept.iter().map(MatchRecord::from).collect(),
        },
        &a.out,
    )
}

pub fn cmd_init_weights(a: &InitArgs) -> Result<(), CliError> {
    let cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let seed = a
        .seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::Usage("a seed is required (--seed or `seed` in the config)".into()))?;
    let net = Network::build(cfg.network_def(), Init::SeededRandom(seed))
        .map_err(|e| CliError::Usage(format!("network definition: {e}")))?;
    save_weights(net.weights(), &a.out)
}
