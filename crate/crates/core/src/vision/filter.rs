use super::Image;
use crate::error::{Error, Result};

/// Axis-aligned pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }
}

/// Saturating add of `delta` to every value.
pub fn adjust_brightness(img: &Image, delta: i32) -> Image {
    img.map(|v| (v as i32 + delta).clamp(0, 255) as u8)
}

/// Crops `rect` and resizes it to `out_w`×`out_h` with nearest-neighbour
/// sampling at pixel centres: output column `x` reads source column
/// `rect.x + ⌊(x + 0.5)·rect.width / out_w⌋`.
pub fn crop_resize(img: &Image, rect: Rect, out_w: usize, out_h: usize) -> Result<Image> {
    if rect.width == 0 || rect.height == 0 {
        return Err(Error::Range(format!("crop {rect:?} has zero area")));
    }
    if rect.x + rect.width > img.width() || rect.y + rect.height > img.height() {
        return Err(Error::Range(format!("crop {rect:?} exceeds the {}x{} image", img.width(), img.height())));
    }
    if out_w == 0 || out_h == 0 {
        return Err(Error::Range(format!("output extent {out_w}x{out_h} must be positive")));
    }
    let src_x: Vec<usize> = (0..out_w).map(|x| rect.x + ((2 * x + 1) * rect.width) / (2 * out_w)).collect();
    let src_y: Vec<usize> = (0..out_h).map(|y| rect.y + ((2 * y + 1) * rect.height) / (2 * out_h)).collect();
    let c = img.channels();
    let mut pixels = Vec::with_capacity(out_w * out_h * c);
    for &sy in &src_y {
        for &sx in &src_x {
            for ch in 0..c {
                pixels.push(img.get(sx, sy, ch));
            }
        }
    }
    Image::new(out_w, out_h, c, pixels)
}

/// Normalized Gaussian taps of radius `⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::config(format!("gaussian sigma {sigma} must be positive")));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

fn clamp_index(i: i64, len: usize) -> usize {
    i.clamp(0, len as i64 - 1) as usize
}

/// Separable Gaussian blur with edge clamping.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    let k = gaussian_kernel(sigma)?;
    let r = (k.len() / 2) as i64;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut tmp = vec![0.0f64; w * h * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (j, t) in k.iter().enumerate() {
                    acc += t * img.get(clamp_index(x as i64 + j as i64 - r, w), y, ch) as f64;
                }
                tmp[(y * w + x) * c + ch] = acc;
            }
        }
    }
    Ok(img.from_fn(|x, y, ch| {
        let mut acc = 0.0;
        for (j, t) in k.iter().enumerate() {
            acc += t * tmp[(clamp_index(y as i64 + j as i64 - r, h) * w + x) * c + ch];
        }
        acc.round().clamp(0.0, 255.0) as u8
    }))
}

/// Median over a `k`×`k` window (odd `k`) with edge clamping.
pub fn median_filter(img: &Image, k: usize) -> Result<Image> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::config(format!("median window {k} must be odd")));
    }
    let r = (k / 2) as i64;
    let (w, h) = (img.width(), img.height());
    let mut window = Vec::with_capacity(k * k);
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..img.channels() {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(img.get(clamp_index(x as i64 + dx, w), clamp_index(y as i64 + dy, h), ch));
                    }
                }
                let mid = window.len() / 2;
                out.set(x, y, ch, *window.select_nth_unstable(mid).1);
            }
        }
    }
    Ok(out)
}

/// Histogram equalization per channel:
/// `v ↦ round(255·(CDF(v) − CDF_min) / (N − CDF_min))`, where `CDF_min` is
/// the count of the darkest occupied level. Constant channels are unchanged.
pub fn histogram_equalize(img: &Image) -> Image {
    let c = img.channels();
    let mut luts = Vec::with_capacity(c);
    for ch in 0..c {
        let mut hist = [0u64; 256];
        for v in img.pixels().iter().skip(ch).step_by(c) {
            hist[*v as usize] += 1;
        }
        let total: u64 = hist.iter().sum();
        let mut cdf = [0u64; 256];
        let mut run = 0;
        for (i, &n) in hist.iter().enumerate() {
            run += n;
            cdf[i] = run;
        }
        let cdf_min = hist.iter().copied().find(|&n| n > 0).unwrap_or(0);
        let mut lut = [0u8; 256];
        for v in 0..256 {
            lut[v] = if total == cdf_min {
                v as u8
            } else {
                let num = cdf[v].saturating_sub(cdf_min) as f64;
                (255.0 * num / (total - cdf_min) as f64).round() as u8
            };
        }
        luts.push(lut);
    }
    img.from_fn(|x, y, ch| luts[ch][img.get(x, y, ch) as usize])
}

/// `v ↦ round(255·(v/255)^γ)`.
pub fn gamma_correct(img: &Image, gamma: f64) -> Result<Image> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::config(format!("gamma {gamma} must be positive")));
    }
    let lut: Vec<u8> = (0..256).map(|v| (255.0 * (v as f64 / 255.0).powf(gamma)).round() as u8).collect();
    Ok(img.map(|v| lut[v as usize]))
}
