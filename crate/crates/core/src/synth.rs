//! Deterministic synthetic data: labelled images whose classes differ by a
//! rendered motif and hue, and 68-point landmark traces with scripted blinks
//! and yawns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fatigue::{LandmarkFrame, INNER_MOUTH, LEFT_EYE, RIGHT_EYE};
use crate::scalar::Scalar;
use crate::train::Dataset;
use crate::vision::{images_to_tensor, Image, DEFAULT_MEAN, DEFAULT_STD};

pub const DEFAULT_LABELS: [&str; 5] = [
    "safe_driving",
    "texting_left_hand",
    "talking_on_the_phone_left_hand",
    "texting_right_hand",
    "talking_on_the_phone_right_hand",
];

/// The default labels for five classes, `class_<i>` otherwise.
pub fn default_labels(classes: usize) -> Vec<String> {
    if classes == DEFAULT_LABELS.len() {
        DEFAULT_LABELS.iter().map(|s| s.to_string()).collect()
    } else {
        (0..classes).map(|i| format!("class_{i}")).collect()
    }
}

const MOTIFS: usize = 5;

fn inside(motif: usize, u: f64, v: f64) -> bool {
    match motif {
        0 => u * u + v * v < 0.45 * 0.45,
        1 => v.abs() < 0.15 && u.abs() < 0.7,
        2 => u.abs() < 0.15 && v.abs() < 0.7,
        3 => ((u - v).abs() < 0.2 || (u + v).abs() < 0.2) && u.abs() < 0.65 && v.abs() < 0.65,
        _ => {
            let m = u.abs().max(v.abs());
            m > 0.4 && m < 0.62
        }
    }
}

fn hue_to_rgb(hue_deg: f64, value: f64) -> [f64; 3] {
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [r * value, g * value, b * value]
}

/// One RGB sample of `class`: motif `class % 5` in a class-specific hue,
/// with jittered position, size, hue, background and per-pixel noise.
pub fn synth_image(class: usize, classes: usize, size: usize, rng: &mut impl Rng) -> Result<Image> {
    if classes == 0 || class >= classes {
        return Err(Error::Range(format!("class {class} outside 0..{classes}")));
    }
    let (cx, cy) = (rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15));
    let scale = rng.gen_range(0.8..1.2);
    let hue = 360.0 * class as f64 / classes as f64 + rng.gen_range(-12.0..12.0);
    let fg = hue_to_rgb(hue, rng.gen_range(170.0..240.0));
    let bg = rng.gen_range(15.0..80.0);
    let mut pixels = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        for x in 0..size {
            let u = ((x as f64 + 0.5) / size as f64 * 2.0 - 1.0 - cx) / scale;
            let v = ((y as f64 + 0.5) / size as f64 * 2.0 - 1.0 - cy) / scale;
            let on = inside(class % MOTIFS, u, v);
            for base in fg {
                let value = if on { base.max(bg) } else { bg };
                pixels.push((value + rng.gen_range(-10.0..10.0)).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(size, size, 3, pixels)
}

/// `per_class` samples of each class, interleaved by class. Sample `i` draws
/// from its own ChaCha8 stream, so any prefix of the corpus is stable.
pub fn synth_corpus(classes: usize, per_class: usize, size: usize, seed: u64) -> Result<Vec<(Image, usize)>> {
    if size == 0 {
        return Err(Error::Range("image size must be positive".into()));
    }
    (0..classes * per_class)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let class = i % classes;
            Ok((synth_image(class, classes, size, &mut rng)?, class))
        })
        .collect()
}

/// [`synth_corpus`] normalized with the default mean and std.
pub fn synth_dataset<T: Scalar>(classes: usize, per_class: usize, size: usize, seed: u64) -> Result<Dataset<T>> {
    let (images, labels): (Vec<Image>, Vec<usize>) = synth_corpus(classes, per_class, size, seed)?.into_iter().unzip();
    Dataset::new(images_to_tensor(&images, &DEFAULT_MEAN, &DEFAULT_STD)?, labels)
}

/// A frontal 68-point face centred at `(cx, cy)` with inter-ocular scale
/// `scale`, rotated by `roll` radians. Both eyes have aspect ratio `ear`
/// and the inner lips have aspect ratio `mar`.
pub fn face_points(ear: f64, mar: f64, cx: f64, cy: f64, scale: f64, roll: f64) -> Vec<[f64; 2]> {
    let mut p = vec![[0.0; 2]; 68];
    for (i, q) in p.iter_mut().enumerate().take(17) {
        let a = std::f64::consts::PI * (i as f64 / 16.0);
        *q = [-1.1 * a.cos(), 0.2 + 1.2 * a.sin()];
    }
    for i in 0..10 {
        p[17 + i] = [-0.9 + 0.2 * i as f64 + if i >= 5 { 0.1 } else { 0.0 }, -0.55];
    }
    for i in 0..4 {
        p[27 + i] = [0.0, -0.3 + 0.15 * i as f64];
    }
    for i in 0..5 {
        p[31 + i] = [-0.2 + 0.1 * i as f64, 0.35];
    }
    let eye = |p: &mut Vec<[f64; 2]>, idx: [usize; 6], x0: f64| {
        let (w, y) = (0.4, -0.3);
        let g = ear * w;
        let pts = [
            [x0, y],
            [x0 + w / 3.0, y - g / 2.0],
            [x0 + 2.0 * w / 3.0, y - g / 2.0],
            [x0 + w, y],
            [x0 + 2.0 * w / 3.0, y + g / 2.0],
            [x0 + w / 3.0, y + g / 2.0],
        ];
        for (i, q) in idx.iter().zip(pts) {
            p[i - 1] = q;
        }
    };
    eye(&mut p, RIGHT_EYE, -0.7);
    eye(&mut p, LEFT_EYE, 0.3);
    let (mw, my) = (0.5, 0.75);
    let gap = mar * mw;
    for i in 0..12 {
        let a = 2.0 * std::f64::consts::PI * i as f64 / 12.0;
        p[48 + i] = [-0.4 * a.cos(), my - (0.12 + gap / 2.0) * a.sin()];
    }
    let inner = [
        [-mw / 2.0, my],
        [-mw / 4.0, my - gap / 2.0],
        [0.0, my - gap / 2.0],
        [mw / 4.0, my - gap / 2.0],
        [mw / 2.0, my],
        [mw / 4.0, my + gap / 2.0],
        [0.0, my + gap / 2.0],
        [-mw / 4.0, my + gap / 2.0],
    ];
    for (i, q) in INNER_MOUTH.iter().zip(inner) {
        p[i - 1] = q;
    }
    let (s, c) = roll.sin_cos();
    p.into_iter()
        .map(|[x, y]| [cx + scale * (c * x - s * y), cy + scale * (s * x + c * y)])
        .collect()
}

/// Episode rates for [`synth_landmark_trace`].
#[derive(Clone, Debug, PartialEq)]
pub struct TraceParams {
    pub frames: usize,
    /// Nominal frame spacing; each step is jittered by up to a quarter.
    pub frame_ms: i64,
    /// Probability that a new eye episode is a closure.
    pub closed_prob: f64,
    /// Per-frame probability that a yawn starts.
    pub yawn_prob: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            frames: 1800,
            frame_ms: 33,
            closed_prob: 0.2,
            yawn_prob: 0.005,
        }
    }
}

/// Landmark frames with alternating open and closed eye episodes of 3 to 45
/// frames, occasional 20 to 45 frame yawns, and small head motion.
pub fn synth_landmark_trace(params: &TraceParams, seed: u64) -> Result<Vec<LandmarkFrame>> {
    if params.frame_ms <= 0 {
        return Err(Error::Range(format!("frame_ms {} must be positive", params.frame_ms)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut eye_left, mut closed) = (0usize, false);
    let mut yawn_left = 0usize;
    let mut ts = 0i64;
    let jitter = params.frame_ms / 4;
    let mut frames = Vec::with_capacity(params.frames);
    for i in 0..params.frames {
        if eye_left == 0 {
            closed = rng.gen_bool(params.closed_prob.clamp(0.0, 1.0));
            eye_left = rng.gen_range(3..=45);
        }
        eye_left -= 1;
        if yawn_left == 0 && rng.gen_bool(params.yawn_prob.clamp(0.0, 1.0)) {
            yawn_left = rng.gen_range(20..=45);
        }
        let ear = if closed { rng.gen_range(0.02..0.12) } else { rng.gen_range(0.26..0.34) };
        let mar = if yawn_left > 0 {
            yawn_left -= 1;
            rng.gen_range(0.7..0.9)
        } else {
            rng.gen_range(0.05..0.3)
        };
        let cx = 320.0 + rng.gen_range(-3.0..3.0);
        let cy = 240.0 + rng.gen_range(-3.0..3.0);
        let points = face_points(ear, mar, cx, cy, rng.gen_range(55.0..65.0), rng.gen_range(-0.1..0.1));
        frames.push(LandmarkFrame::new(i as u64, ts, points)?);
        ts += params.frame_ms + rng.gen_range(-jitter..=jitter);
    }
    Ok(frames)
}
