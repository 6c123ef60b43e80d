//! Naive reference implementations. Each one follows the textbook formula
//! with plain index loops and `f64` accumulation, so it shares no code or
//! loop structure with the kernels under test.

#![allow(dead_code, clippy::needless_range_loop, clippy::type_complexity)]

use dspass_core::ops::PaddingMode;
use dspass_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(r: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor {
    Tensor::from_fn(c, h, w, |_, _, _| r.random_range(-1.0f32..1.0))
}

/// Random tensor of `c` channels and random height and width up to the bounds.
pub fn random_sized(r: &mut ChaCha8Rng, c: usize, max_h: usize, max_w: usize) -> Tensor {
    let (h, w) = (r.random_range(1..=max_h), r.random_range(1..=max_w));
    random_tensor(r, c, h, w)
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, lo: f32, hi: f32) -> Vec<f32> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

/// Value of the padded input at padded coordinates `(py, px)`.
pub struct Padded<'a> {
    pub x: &'a Tensor,
    pub mode: PaddingMode,
    pub top: usize,
    pub left: usize,
    pub left_buffer: Option<&'a Tensor>,
    pub right_buffer: Option<&'a Tensor>,
}

impl Padded<'_> {
    pub fn at(&self, c: usize, py: usize, px: usize) -> f64 {
        let (_, h, w) = self.x.shape();
        let y = py as isize - self.top as isize;
        let x = px as isize - self.left as isize;
        if y < 0 || y >= h as isize {
            return 0.0;
        }
        let y = y as usize;
        if x >= 0 && x < w as isize {
            return self.x.at(c, y, x as usize) as f64;
        }
        match self.mode {
            PaddingMode::Zero => 0.0,
            PaddingMode::Ring => {
                let xx = ((x % w as isize) + w as isize) % w as isize;
                self.x.at(c, y, xx as usize) as f64
            }
            PaddingMode::Neighbor => {
                if x < 0 {
                    let b = self.left_buffer.unwrap();
                    b.at(c, y, (b.width() as isize + x) as usize) as f64
                } else {
                    let b = self.right_buffer.unwrap();
                    b.at(c, y, (x - w as isize) as usize) as f64
                }
            }
        }
    }
}

/// Direct cross-correlation over a padded view.
#[allow(clippy::too_many_arguments)]
pub fn conv(
    p: &Padded,
    padded_h: usize,
    padded_w: usize,
    weights: &[f32],
    bias: Option<&[f32]>,
    out_c: usize,
    kh: usize,
    kw: usize,
    stride: usize,
) -> Vec<f64> {
    let in_c = p.x.channels();
    let oh = (padded_h - kh) / stride + 1;
    let ow = (padded_w - kw) / stride + 1;
    let mut out = vec![0.0f64; out_c * oh * ow];
    for o in 0..out_c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut s = 0.0f64;
                for i in 0..in_c {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let wv = weights[((o * in_c + i) * kh + ky) * kw + kx] as f64;
                            s += wv * p.at(i, oy * stride + ky, ox * stride + kx);
                        }
                    }
                }
                if let Some(b) = bias {
                    s += b[o] as f64;
                }
                out[(o * oh + oy) * ow + ox] = s;
            }
        }
    }
    out
}

pub fn batchnorm(x: &Tensor, scale: &[f32], shift: &[f32], mean: &[f32], var: &[f32], eps: f32) -> Vec<f64> {
    let (c, h, w) = x.shape();
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..w {
                let v = x.at(ch, y, xx) as f64;
                let n = (v - mean[ch] as f64) / (var[ch] as f64 + eps as f64).sqrt();
                out.push(n * scale[ch] as f64 + shift[ch] as f64);
            }
        }
    }
    out
}

/// Half-pixel bilinear interpolation; `wrap` makes columns periodic.
pub fn bilinear(x: &Tensor, oh: usize, ow: usize, wrap: bool) -> Vec<f64> {
    let (c, h, w) = x.shape();
    let coord = |d: usize, out: usize, len: usize, periodic: bool| -> (usize, usize, f64) {
        let s = (d as f64 + 0.5) * len as f64 / out as f64 - 0.5;
        if periodic {
            let f = s.floor();
            let i0 = (f as isize).rem_euclid(len as isize) as usize;
            ((i0), (i0 + 1) % len, s - f)
        } else {
            let s = s.clamp(0.0, (len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(len - 1);
            (i0, i1, s - i0 as f64)
        }
    };
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            let (y0, y1, fy) = coord(oy, oh, h, false);
            for ox in 0..ow {
                let (x0, x1, fx) = coord(ox, ow, w, wrap);
                let g = |y: usize, xx: usize| x.at(ch, y, xx) as f64;
                let top = g(y0, x0) * (1.0 - fx) + g(y0, x1) * fx;
                let bot = g(y1, x0) * (1.0 - fx) + g(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    out
}

pub fn maxpool(p: &Padded, padded_h: usize, padded_w: usize, k: usize, stride: usize) -> Vec<f64> {
    let c = p.x.channels();
    let oh = (padded_h - k) / stride + 1;
    let ow = (padded_w - k) / stride + 1;
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f64::NEG_INFINITY;
                for ky in 0..k {
                    for kx in 0..k {
                        m = m.max(p.at(ch, oy * stride + ky, ox * stride + kx));
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

pub fn global_mean(x: &Tensor) -> Vec<f64> {
    let (c, h, w) = x.shape();
    (0..c)
        .map(|ch| {
            let mut s = 0.0;
            for y in 0..h {
                for xx in 0..w {
                    s += x.at(ch, y, xx) as f64;
                }
            }
            s / (h * w) as f64
        })
        .collect()
}

/// Mean of the rectangle `[y0, y1) × [x0, x1)` of one channel.
pub fn rect_mean(x: &Tensor, c: usize, y0: usize, y1: usize, x0: usize, x1: usize) -> f64 {
    let mut s = 0.0;
    for y in y0..y1 {
        for xx in x0..x1 {
            s += x.at(c, y, xx) as f64;
        }
    }
    s / ((y1 - y0) * (x1 - x0)) as f64
}

/// Adaptive average pooling with bins `[floor(i·n/g), ceil((i+1)·n/g))`.
pub fn adaptive_pool(x: &Tensor, gh: usize, gw: usize) -> Vec<f64> {
    let (c, h, w) = x.shape();
    let edges = |i: usize, g: usize, n: usize| (i * n / g, ((i + 1) * n).div_ceil(g));
    let mut out = Vec::new();
    for ch in 0..c {
        for i in 0..gh {
            let (y0, y1) = edges(i, gh, h);
            for j in 0..gw {
                let (x0, x1) = edges(j, gw, w);
                out.push(rect_mean(x, ch, y0, y1, x0, x1));
            }
        }
    }
    out
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `sigmoid(fc2 · relu(fc1 · mean(x) + b1) + b2)` scaled onto `x`.
pub fn se_block(x: &Tensor, fc1: &[f32], b1: &[f32], fc2: &[f32], b2: &[f32], hidden: usize) -> Vec<f64> {
    let c = x.channels();
    let m = global_mean(x);
    let hvec: Vec<f64> = (0..hidden)
        .map(|j| {
            let s: f64 = (0..c).map(|i| fc1[j * c + i] as f64 * m[i]).sum::<f64>() + b1[j] as f64;
            s.max(0.0)
        })
        .collect();
    let d: Vec<f64> = (0..c)
        .map(|i| sigmoid((0..hidden).map(|j| fc2[i * hidden + j] as f64 * hvec[j]).sum::<f64>() + b2[i] as f64))
        .collect();
    let (_, h, w) = x.shape();
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..w {
                out.push(x.at(ch, y, xx) as f64 * d[ch]);
            }
        }
    }
    out
}

/// Largest `|a - b| / max(1, |b|)`: relative error with an absolute floor
/// for values near zero.
pub fn max_rel_err(actual: &[f32], expected: &[f64]) -> f64 {
    assert_eq!(actual.len(), expected.len(), "length mismatch");
    actual
        .iter()
        .zip(expected)
        .map(|(&a, &e)| (a as f64 - e).abs() / e.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub fn max_abs_err(actual: &[f32], expected: &[f64]) -> f64 {
    assert_eq!(actual.len(), expected.len(), "length mismatch");
    actual
        .iter()
        .zip(expected)
        .map(|(&a, &e)| (a as f64 - e).abs())
        .fold(0.0, f64::max)
}

// Randomized kernel trials. Each draws one small problem (at most 8×16×16),
// runs the kernel and its oracle, and returns the relative error.

use dspass_core::ops::{
    adaptive_avg_pool, batchnorm_inference, bilinear_resize, circular_box_mean, conv2d,
    global_avg_pool, maxpool2d, BatchNorm, ConvParams, HorizontalBoundary, PaddingSpec,
};
use dspass_core::swaftnet::{se_block as se_kernel, SeWeights};

fn random_spec(r: &mut ChaCha8Rng, x: &Tensor, max_pad: usize) -> PaddingSpec {
    let (c, h, w) = x.shape();
    let ph = r.random_range(0..=max_pad);
    let pw = r.random_range(0..=max_pad.min(w));
    match r.random_range(0..3) {
        0 => PaddingSpec::zero(ph, pw),
        1 => PaddingSpec::ring(ph, pw),
        _ => {
            let lw = pw + r.random_range(0..3);
            let rw = pw + r.random_range(0..3);
            PaddingSpec::neighbor(ph, pw, random_tensor(r, c, h, lw), random_tensor(r, c, h, rw))
        }
    }
}

fn padded<'a>(x: &'a Tensor, spec: &'a PaddingSpec) -> (Padded<'a>, usize, usize) {
    let p = Padded {
        x,
        mode: spec.mode,
        top: spec.pad_top,
        left: spec.pad_left,
        left_buffer: spec.left_buffer.as_ref(),
        right_buffer: spec.right_buffer.as_ref(),
    };
    let ph = x.height() + spec.pad_top + spec.pad_bottom;
    let pw = x.width() + spec.pad_left + spec.pad_right;
    (p, ph, pw)
}

pub fn conv_trial(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let (ci, co) = (r.random_range(1..=8), r.random_range(1..=8));
        let (h, w) = (r.random_range(1..=16), r.random_range(1..=16));
        let k = [1, 3, 5][r.random_range(0..3)];
        let stride = r.random_range(1..=2);
        let x = random_tensor(r, ci, h, w);
        let spec = random_spec(r, &x, k / 2);
        let (p, ph, pw) = padded(&x, &spec);
        if ph < k || pw < k {
            continue;
        }
        let weights = random_vec(r, co * ci * k * k, -1.0, 1.0);
        let bias = r.random_bool(0.5).then(|| random_vec(r, co, -1.0, 1.0));
        let params = ConvParams::new(co, ci, (k, k), stride, weights.clone(), bias.clone()).unwrap();
        let got = conv2d(&x, &params, &spec).unwrap();
        let want = conv(&p, ph, pw, &weights, bias.as_deref(), co, k, k, stride);
        return max_rel_err(got.data(), &want);
    }
}

pub fn batchnorm_trial(r: &mut ChaCha8Rng) -> f64 {
    let c = r.random_range(1..=8);
    let x = random_sized(r, c, 16, 16);
    let bn = BatchNorm {
        scale: random_vec(r, c, 0.5, 1.5),
        shift: random_vec(r, c, -0.5, 0.5),
        running_mean: random_vec(r, c, -0.5, 0.5),
        running_var: random_vec(r, c, 0.1, 2.0),
        epsilon: 1e-5,
    };
    let got = batchnorm_inference(&x, &bn).unwrap();
    let want = batchnorm(&x, &bn.scale, &bn.shift, &bn.running_mean, &bn.running_var, bn.epsilon);
    max_rel_err(got.data(), &want)
}

pub fn upsample_trial(r: &mut ChaCha8Rng) -> f64 {
    let x = { let c = r.random_range(1..=8); random_sized(r, c, 8, 8) };
    let (oh, ow) = (r.random_range(1..=16), r.random_range(1..=16));
    let wrap = r.random_bool(0.5);
    let boundary = if wrap { HorizontalBoundary::Wrap } else { HorizontalBoundary::Clamp };
    let got = bilinear_resize(&x, oh, ow, boundary).unwrap();
    max_rel_err(got.data(), &bilinear(&x, oh, ow, wrap))
}

pub fn maxpool_trial(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let c = r.random_range(1..=8);
        let x = random_sized(r, c, 16, 16);
        let k = r.random_range(1..=3);
        let stride = r.random_range(1..=2);
        let spec = random_spec(r, &x, k / 2);
        let (p, ph, pw) = padded(&x, &spec);
        if ph < k || pw < k {
            continue;
        }
        let got = maxpool2d(&x, k, stride, &spec).unwrap();
        return max_rel_err(got.data(), &maxpool(&p, ph, pw, k, stride));
    }
}

/// Adaptive grid, global mean and circular box mean in one draw.
pub fn avgpool_trial(r: &mut ChaCha8Rng) -> f64 {
    let (c, h, w) = (r.random_range(1..=8), r.random_range(1..=16), r.random_range(1..=16));
    let x = random_tensor(r, c, h, w);
    let (gh, gw) = (r.random_range(1..=h), r.random_range(1..=w));
    let adaptive = max_rel_err(adaptive_avg_pool(&x, gh, gw).unwrap().data(), &adaptive_pool(&x, gh, gw));
    let global = max_rel_err(&global_avg_pool(&x), &global_mean(&x));
    let window = r.random_range(1..=w);
    let back = (window - 1) / 2;
    let mut want = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h {
            for j in 0..w {
                let s: f64 = (0..window)
                    .map(|k| x.at(ch, y, (j + w * window - back + k) % w) as f64)
                    .sum();
                want.push(s / window as f64);
            }
        }
    }
    let boxed = max_rel_err(circular_box_mean(&x, window).unwrap().data(), &want);
    adaptive.max(global).max(boxed)
}

pub fn random_se(r: &mut ChaCha8Rng, c: usize, hidden: usize) -> SeWeights {
    SeWeights {
        channels: c,
        hidden,
        fc1: random_vec(r, hidden * c, -1.0, 1.0),
        fc1_bias: random_vec(r, hidden, -0.5, 0.5),
        fc2: random_vec(r, c * hidden, -1.0, 1.0),
        fc2_bias: random_vec(r, c, -0.5, 0.5),
    }
}

pub fn se_trial(r: &mut ChaCha8Rng) -> f64 {
    let c = r.random_range(1..=8);
    let hidden = r.random_range(1..=c);
    let x = random_sized(r, c, 16, 16);
    let se = random_se(r, c, hidden);
    let got = se_kernel(&x, &se).unwrap();
    max_rel_err(got.data(), &se_block(&x, &se.fc1, &se.fc1_bias, &se.fc2, &se.fc2_bias, hidden))
}

/// 1×4 input `[1, 2, 3, 4]`, kernel `[1, 1, 1]`, ring pad 1.
pub fn ring_conv_hand_case() -> Vec<f32> {
    let x = Tensor::new(1, 1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let k = ConvParams::new(1, 1, (1, 3), 1, vec![1.0; 3], None).unwrap();
    conv2d(&x, &k, &PaddingSpec::ring(0, 1)).unwrap().into_data()
}

/// Worst error of `trials` draws of each kernel, labelled.
pub fn kernel_suite(trials: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let kernels: [(&str, fn(&mut ChaCha8Rng) -> f64); 6] = [
        ("conv2d", conv_trial),
        ("batchnorm", batchnorm_trial),
        ("bilinear", upsample_trial),
        ("maxpool", maxpool_trial),
        ("avgpool", avgpool_trial),
        ("se_block", se_trial),
    ];
    kernels
        .iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let mut r = rng(seed + i as u64);
            (*name, (0..trials).map(|_| f(&mut r)).fold(0.0, f64::max))
        })
        .collect()
}

// Whole-pipeline properties of segment-wise inference.

use dspass_core::adaptation::{full_pass, run_adapted, AdaptedOutput, seam_report, summarize_seams, SeamSummary, SegmentPadding, SegmentPlan};
use dspass_core::swaftnet::{BorderMode, Network};

/// Columns either side of a cut that count as the seam.
pub const SEAM_RADIUS: usize = 4;

/// Segment-wise logits against a whole ring pass: worst absolute
/// difference and the per-column seam summary.
pub fn compare_to_full(net: &Network, pano: &Tensor, plan: &SegmentPlan, full: &Tensor) -> (f32, SeamSummary) {
    let adapted = run_adapted(net, pano, plan).unwrap();
    let profile = seam_report(&adapted.logits, full).unwrap();
    let summary = summarize_seams(&profile, plan.num_segments, SEAM_RADIUS).unwrap();
    (summary.max, summary)
}

pub fn zero_plan(n: usize) -> SegmentPlan {
    SegmentPlan {
        padding: SegmentPadding::Zero,
        ..SegmentPlan::new(n)
    }
}

pub fn full_ring(net: &Network, pano: &Tensor) -> Tensor {
    full_pass(net, pano, BorderMode::Ring).unwrap()
}

/// Pixels whose label survives a circular shift of the input, and the number
/// of pixels compared. Pixels with a top-2 logit gap below `1e-4` in either
/// run are too close to call and are left out.
pub fn shift_agreement(net: &Network, pano: &Tensor, base: &AdaptedOutput, shift: isize, plan: &SegmentPlan) -> (usize, usize) {
    let moved = run_adapted(net, &pano.roll_width(shift), plan).unwrap();
    let expect = base.segmentation.roll_width(shift);
    let base_gap = base.logits.roll_width(shift).top2_gap();
    let moved_gap = moved.logits.top2_gap();
    let mut agree = 0;
    let mut counted = 0;
    for (i, (a, b)) in moved.segmentation.ids().iter().zip(expect.ids()).enumerate() {
        if base_gap[i] < 1e-4 || moved_gap[i] < 1e-4 {
            continue;
        }
        counted += 1;
        agree += usize::from(a == b);
    }
    (agree, counted)
}

// Annular fixtures with closed forms.

use dspass_core::geometry::{fold_back, unfold, AnnularCameraModel, Raster, SampleMode};

pub fn ring_model() -> AnnularCameraModel {
    AnnularCameraModel::linear((100.0, 100.0), 20.0, 80.0, 200, 200)
}

/// Low-frequency pattern over the whole source image, values in `[0.2, 0.8]`.
pub fn smooth_annular(model: &AnnularCameraModel) -> Raster {
    Raster::from_fn(1, model.source_height, model.source_width, |_, y, x| {
        let (u, v) = (x as f64 / 40.0, y as f64 / 55.0);
        (0.5 + 0.2 * u.sin() * v.cos() + 0.1 * (0.7 * u + 0.3 * v).cos()) as f32
    })
}

/// Round-trip PSNR (peak 1) over pixels with `r_inner + 2 <= r <= r_outer - 2`.
pub fn round_trip_psnr(model: &AnnularCameraModel, src: &Raster, out_width: usize, out_height: usize) -> f64 {
    let pano = unfold(src, model, out_width, out_height, 0.0).unwrap();
    let back = fold_back(&pano, model, SampleMode::Bilinear).unwrap();
    let (mut se, mut n) = (0.0f64, 0usize);
    for y in 0..src.height {
        for x in 0..src.width {
            let r = (x as f64 - model.center_x).hypot(y as f64 - model.center_y);
            if r >= model.r_inner + 2.0 && r <= model.r_outer - 2.0 {
                let d = (back.at(0, y, x) - src.at(0, y, x)) as f64;
                se += d * d;
                n += 1;
            }
        }
    }
    10.0 * (1.0 / (se / n as f64)).log10()
}

/// Annular image holding its own azimuth `θ / 2π`, `θ ∈ [0, 2π)`.
pub fn theta_image(model: &AnnularCameraModel) -> Raster {
    Raster::from_fn(1, model.source_height, model.source_width, |_, y, x| {
        let t = (y as f64 - model.center_y).atan2(x as f64 - model.center_x);
        (t.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU) as f32
    })
}

/// Worst deviation of the unfolded azimuth image from the ramp `j / width`,
/// skipping `margin` columns either side of the wrap.
pub fn theta_ramp_error(model: &AnnularCameraModel, out_width: usize, out_height: usize, margin: usize) -> f64 {
    let pano = unfold(&theta_image(model), model, out_width, out_height, 0.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..out_height {
        for j in margin..out_width - margin {
            let want = j as f64 / out_width as f64;
            worst = worst.max((pano.at(0, i, j) as f64 - want).abs());
        }
    }
    worst
}

// Confusion-matrix oracles.

use dspass_core::evaluation::ConfusionMatrix;
use dspass_core::SegmentationMap;

/// Random label map over `classes` ids with roughly 10% ignored pixels.
pub fn random_labels(r: &mut ChaCha8Rng, h: usize, w: usize, classes: u8) -> SegmentationMap {
    SegmentationMap::from_fn(h, w, |_, _| {
        if r.random_bool(0.1) {
            dspass_core::IGNORE_ID
        } else {
            r.random_range(0..classes)
        }
    })
}

/// Direct per-class counts: `(tp, gt pixels, pred pixels)` over pixels whose
/// ground truth is not ignored.
pub fn count_classes(pairs: &[(SegmentationMap, SegmentationMap)], classes: usize) -> Vec<(u64, u64, u64)> {
    let mut out = vec![(0, 0, 0); classes];
    for (pred, gt) in pairs {
        for (&p, &g) in pred.ids().iter().zip(gt.ids()) {
            if g == dspass_core::IGNORE_ID {
                continue;
            }
            out[g as usize].1 += 1;
            if p != dspass_core::IGNORE_ID {
                out[p as usize].2 += 1;
            }
            if p == g {
                out[g as usize].0 += 1;
            }
        }
    }
    out
}

pub fn matrix_of(pairs: &[(SegmentationMap, SegmentationMap)], classes: usize) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::new(classes);
    for (p, g) in pairs {
        cm.accumulate(p, g).unwrap();
    }
    cm
}

/// Checks, over `trials` random label pairs, that the matrix agrees with the
/// direct counts and is unchanged by joint pixel permutations, image order
/// and batch merging, and that relabelling classes permutes the IoUs while
/// keeping the mean. Returns the first violation.
pub fn evaluation_properties(trials: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    const K: u8 = 5;
    let pairs: Vec<_> = (0..trials)
        .map(|_| {
            let (h, w) = (r.random_range(1..=8), r.random_range(1..=12));
            (random_labels(&mut r, h, w, K), random_labels(&mut r, h, w, K))
        })
        .collect();
    let all: Vec<usize> = (0..K as usize).collect();
    let cm = matrix_of(&pairs, K as usize);
    for (c, &(tp, gt, pred)) in count_classes(&pairs, K as usize).iter().enumerate() {
        if (cm.get(c, c), cm.row_sum(c), cm.col_sum(c)) != (tp, gt, pred) {
            return Err(format!("class {c}: matrix disagrees with direct counts"));
        }
        let want = (gt + pred > tp).then(|| tp as f64 / (gt + pred - tp) as f64);
        if cm.iou(c) != want {
            return Err(format!("class {c}: IoU {:?}, expected {want:?}", cm.iou(c)));
        }
    }
    // Same pixels, shuffled jointly inside every image.
    let shuffled: Vec<_> = pairs
        .iter()
        .map(|(p, g)| {
            let mut idx: Vec<usize> = (0..p.ids().len()).collect();
            for i in (1..idx.len()).rev() {
                idx.swap(i, r.random_range(0..=i));
            }
            let pick = |m: &SegmentationMap| {
                SegmentationMap::new(m.height(), m.width(), idx.iter().map(|&i| m.ids()[i]).collect()).unwrap()
            };
            (pick(p), pick(g))
        })
        .collect();
    if matrix_of(&shuffled, K as usize) != cm {
        return Err("pixel permutation changed the matrix".into());
    }
    let mut reversed = pairs.clone();
    reversed.reverse();
    if matrix_of(&reversed, K as usize) != cm {
        return Err("image order changed the matrix".into());
    }
    let mid = pairs.len() / 2;
    let mut merged = matrix_of(&pairs[mid..], K as usize);
    merged.merge(&matrix_of(&pairs[..mid], K as usize)).unwrap();
    if merged != cm {
        return Err("merging halves changed the matrix".into());
    }
    // Relabel classes by a fixed permutation.
    let perm = [3u8, 0, 4, 1, 2];
    let relabel = |m: &SegmentationMap| {
        SegmentationMap::new(
            m.height(),
            m.width(),
            m.ids().iter().map(|&id| if id == dspass_core::IGNORE_ID { id } else { perm[id as usize] }).collect(),
        )
        .unwrap()
    };
    let renamed: Vec<_> = pairs.iter().map(|(p, g)| (relabel(p), relabel(g))).collect();
    let rcm = matrix_of(&renamed, K as usize);
    for c in 0..K as usize {
        if rcm.iou(perm[c] as usize) != cm.iou(c) {
            return Err(format!("relabelling moved IoU of class {c}"));
        }
    }
    let (a, b) = (cm.miou(&all).unwrap(), rcm.miou(&all).unwrap());
    if (a - b).abs() > 4.0 * f64::EPSILON {
        return Err(format!("relabelling changed mIoU {a} -> {b}"));
    }
    Ok(())
}

/// The 2×2 example: gt `[[0,0],[1,1]]`, pred `[[0,1],[1,1]]`.
pub fn two_by_two() -> ConfusionMatrix {
    let gt = SegmentationMap::new(2, 2, vec![0, 0, 1, 1]).unwrap();
    let pred = SegmentationMap::new(2, 2, vec![0, 1, 1, 1]).unwrap();
    matrix_of(&[(pred, gt)], 2)
}

// Semantic match filtering fixtures.

use dspass_core::semantic_vo::{filter_matches, label_at, FilterReport, Match, Point};

pub fn mk_match(ax: f64, ay: f64, bx: f64, by: f64) -> Match {
    Match {
        point_a: Point::new(ax, ay),
        point_b: Point::new(bx, by),
        score: ax + 10.0 * ay,
    }
}

/// 8×8 maps split by a vertical line: frame a is class 1 left of column 4,
/// frame b left of column 5 with its last row ignored.
pub fn half_planes() -> (SegmentationMap, SegmentationMap) {
    let a = SegmentationMap::from_fn(8, 8, |_, x| if x < 4 { 1 } else { 2 });
    let b = SegmentationMap::from_fn(8, 8, |y, x| match (y, x) {
        (7, _) => dspass_core::IGNORE_ID,
        (_, x) if x < 5 => 1,
        _ => 2,
    });
    (a, b)
}

/// Ten matches around the boundary, with the label each endpoint rounds to
/// worked out by hand (nearest pixel, halves go to the lower index).
pub fn hand_matches() -> Vec<Match> {
    vec![
        mk_match(3.0, 1.0, 4.0, 1.0),   // 1 / 1: kept
        mk_match(3.5, 2.0, 5.0, 2.0),   // 3.5 rounds to column 3: 1 / 2
        mk_match(3.6, 2.0, 5.4, 2.0),   // 2 / 2: kept
        mk_match(4.4, 3.0, 4.5, 3.0),   // 2 / 1
        mk_match(2.0, 7.0, 2.0, 7.0),   // 1 / ignored
        mk_match(4.5, 0.0, 5.5, 0.0),   // 4 and 5: 2 / 2, kept
        mk_match(3.49, 5.0, 4.51, 5.0), // 1 / 2
        mk_match(-0.6, 3.0, 1.0, 3.0),  // off frame a
        mk_match(0.0, 0.0, 7.5, 6.5),   // 1 / 2
        mk_match(3.5, 6.5, 4.5, 6.4),   // row 6 in both: 1 / 1, kept
    ]
}

pub const HAND_KEPT: [usize; 4] = [0, 2, 5, 9];

pub fn hand_report() -> FilterReport {
    use dspass_core::semantic_vo::Rejection::*;
    FilterReport {
        total: 10,
        kept: 4,
        rejected: 6,
        histogram: [(Labels(1, 2), 3), (Labels(2, 1), 1), (Labels(1, 255), 1), (OutOfFrame, 1)]
            .into_iter()
            .collect(),
    }
}

fn random_matches(r: &mut ChaCha8Rng, n: usize, w: f64, h: f64) -> Vec<Match> {
    let mut coord = |hi: f64| r.random_range(-1.0..hi + 0.5);
    (0..n)
        .map(|_| {
            let (ax, ay, bx, by) = (coord(w), coord(h), coord(w), coord(h));
            mk_match(ax, ay, bx, by)
        })
        .collect()
}

/// Idempotence, subset monotonicity and ignore-safety over random maps and
/// matches. Returns the first violation.
pub fn filter_properties(trials: usize, seed: u64) -> Result<(), String> {
    let ignore = dspass_core::IGNORE_ID;
    let mut r = rng(seed);
    for t in 0..trials {
        let (h, w) = (r.random_range(1..=10), r.random_range(1..=10));
        let a = random_labels(&mut r, h, w, 3);
        let b = random_labels(&mut r, h, w, 3);
        let n = r.random_range(0..40);
        let m = random_matches(&mut r, n, w as f64, h as f64);
        let (kept, report) = filter_matches(&m, &a, &b, ignore);
        if report.total != m.len() || report.kept + report.rejected != report.total
            || report.histogram.values().sum::<usize>() != report.rejected
        {
            return Err(format!("trial {t}: inconsistent report {report:?}"));
        }
        let (again, rep2) = filter_matches(&kept, &a, &b, ignore);
        if again != kept || rep2.rejected != 0 {
            return Err(format!("trial {t}: filtering twice dropped matches"));
        }
        for k in &kept {
            let (la, lb) = (label_at(&a, k.point_a).unwrap(), label_at(&b, k.point_b).unwrap());
            if la != lb || la == ignore {
                return Err(format!("trial {t}: kept a match labelled {la}/{lb}"));
            }
        }
        let mask: Vec<bool> = (0..m.len()).map(|_| r.random_bool(0.5)).collect();
        let subset: Vec<Match> = m.iter().zip(&mask).filter(|(_, &s)| s).map(|(x, _)| *x).collect();
        let (sub_kept, _) = filter_matches(&subset, &a, &b, ignore);
        let want: Vec<Match> = subset.iter().filter(|x| kept.contains(x)).copied().collect();
        if sub_kept != want {
            return Err(format!("trial {t}: subset kept {} matches, expected {}", sub_kept.len(), want.len()));
        }
    }
    Ok(())
}
