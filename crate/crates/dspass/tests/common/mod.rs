//! Fixtures shared by the command-line test targets.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dspass_core::geometry::Raster;
use dspass_core::SegmentationMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dspass"))
}

/// Runs the binary and returns its output, whatever the exit status.
pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn dspass")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "dspass {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn configs() -> PathBuf {
    repo_root().join("configs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Random 8-bit RGB panorama, stored exactly as the CLI will read it.
pub fn random_panorama(seed: u64, h: usize, w: usize) -> Raster {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Raster::from_fn(3, h, w, |_, _, _| r.random_range(0u8..=255) as f32 / 255.0)
}

pub fn write_png(r: &Raster, path: &Path) {
    dspass::io::write_raster(r, path).unwrap();
}

pub fn write_labels(seg: &SegmentationMap, path: &Path) {
    dspass::io::write_class_png(seg, path).unwrap();
}

/// Pipeline config with random weights from `seed`, default network and
/// the 27-class table.
pub fn write_config(dir: &Path, seed: u64, extra: &str) -> PathBuf {
    let path = dir.join("pipeline.json");
    let classes = configs().join("classes_27.json");
    let text = format!(
        r#"{{"version": 1, "num_segments": 4, "seed": {seed}, "class_map": "{}"{extra}}}"#,
        classes.display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

pub fn write_camera(dir: &Path) -> PathBuf {
    let path = dir.join("camera.json");
    std::fs::write(
        &path,
        r#"{"version": 1, "center_x": 100.0, "center_y": 100.0, "r_inner": 20.0,
            "r_outer": 80.0, "source_width": 200, "source_height": 200}"#,
    )
    .unwrap();
    path
}

/// Smooth RGB annular image matching [`write_camera`].
pub fn annular_image() -> Raster {
    Raster::from_fn(3, 200, 200, |c, y, x| {
        let (u, v) = (x as f64 / 30.0, y as f64 / 45.0);
        (0.5 + 0.3 * (u + c as f64).sin() * v.cos()) as f32
    })
}

use dspass::container::{decode, encode, load_weights, save_weights};
use dspass_core::swaftnet::{Init, Network, NetworkDef, NetworkWeights};

fn same_bits(a: &NetworkWeights, b: &NetworkWeights) -> bool {
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|((na, pa), (nb, pb))| {
            na == nb
                && pa.shape == pb.shape
                && pa.data.iter().map(|v| v.to_bits()).eq(pb.data.iter().map(|v| v.to_bits()))
        })
}

fn expect_format_error(bytes: &[u8], needle: &str, offset: impl Fn(usize) -> bool) -> Result<(), String> {
    match decode(bytes) {
        Ok(_) => Err(format!("accepted a container that should fail with `{needle}`")),
        Err(e) if e.message.contains(needle) && offset(e.offset) => Ok(()),
        Err(e) => Err(format!("expected `{needle}`, got `{}` at {}", e.message, e.offset)),
    }
}

/// Round trip of the full default parameter set plus the corruption cases.
pub fn container_checks(dir: &Path) -> Result<(), String> {
    let net = Network::build(NetworkDef::default(), Init::SeededRandom(42)).map_err(|e| e.to_string())?;
    let w = net.weights();
    let bytes = encode(w);
    if !same_bits(&decode(&bytes).map_err(|e| e.to_string())?, w) {
        return Err("in-memory round trip changed the weights".into());
    }
    let path = dir.join("full.dspw");
    save_weights(w, &path).map_err(|e| e.to_string())?;
    if !same_bits(&load_weights(&path).map_err(|e| e.to_string())?, w) {
        return Err("file round trip changed the weights".into());
    }

    let mut bad = bytes.clone();
    bad[0] = b'X';
    expect_format_error(&bad, "magic", |o| o == 0)?;
    let mut bad = bytes.clone();
    bad[4] = 9;
    expect_format_error(&bad, "version", |o| o == 4)?;
    for cut in [2, 7, 11, 13, 40, bytes.len() / 2, bytes.len() - 1] {
        expect_format_error(&bytes[..cut], "truncated", |o| o <= cut)?;
    }
    let mut bad = bytes.clone();
    bad.push(0);
    expect_format_error(&bad, "trailing", |o| o == bytes.len())?;

    std::fs::write(&path, &bytes[..100]).unwrap();
    match load_weights(&path) {
        Err(e) if e.exit_code() == 3 && e.to_string().contains(s(&path)) => {}
        other => return Err(format!("truncated file gave {other:?}")),
    }

    let mut partial = w.clone();
    let name = "decoder.1.blend.weight";
    partial.remove(name).ok_or("parameter naming changed")?;
    match Network::build(NetworkDef::default(), Init::FromWeights(decode(&encode(&partial)).unwrap())) {
        Err(dspass_core::Error::MissingParameter(n)) if n == name => Ok(()),
        Err(e) => Err(format!("missing parameter gave `{e}`")),
        Ok(_) => Err("built a network without all of its parameters".into()),
    }
}

/// Runs unfold, segment-wise and whole-panorama inference and fold-back with
/// `--threads 1` and `--threads n`, returning the output files that differ.
pub fn thread_count_differences(dir: &Path, n: usize) -> Vec<String> {
    let cam = write_camera(dir);
    let cfg = write_config(dir, 42, "");
    write_png(&annular_image(), &dir.join("ann.png"));
    write_png(&random_panorama(42, 64, 256), &dir.join("fixture.png"));
    let outputs = ["pano", "adapted", "render", "full", "folded"];
    for t in [1, n] {
        let threads = t.to_string();
        let o = |name: &str| dir.join(format!("{name}-{t}.png"));
        let base = ["--threads", threads.as_str()];
        let go = |rest: &[&str]| run_ok(&[&base[..], rest].concat());
        go(&["unfold", "--model", s(&cam), "--in", s(&dir.join("ann.png")), "--out", s(&o("pano")), "--width", "256", "--height", "64"]);
        go(&["infer", "--config", s(&cfg), "--in", s(&dir.join("fixture.png")), "--out", s(&o("adapted")), "--render", s(&o("render"))]);
        go(&["infer", "--config", s(&cfg), "--in", s(&dir.join("fixture.png")), "--out", s(&o("full")), "--mode", "full"]);
        go(&["fold", "--model", s(&cam), "--in", s(&o("adapted")), "--out", s(&o("folded"))]);
    }
    outputs
        .iter()
        .filter(|name| {
            let read = |t: usize| std::fs::read(dir.join(format!("{name}-{t}.png"))).unwrap();
            read(1) != read(n)
        })
        .map(|name| name.to_string())
        .collect()
}
