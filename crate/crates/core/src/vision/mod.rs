//! 8-bit raster images, the PPM/PGM codec, denoising and lighting filters,
//! and the augmentation transforms that feed the network.

mod affine;
mod augment;
mod codec;
mod filter;

pub use affine::{affine_transform, AffineMap};
pub use augment::{augment_sample, AugmentPolicy, AUGMENT_KEYS};
pub use codec::{decode_pnm, encode_pnm, read_pnm, write_pnm};
pub use filter::{adjust_brightness, crop_resize, gamma_correct, gaussian_blur, gaussian_kernel, histogram_equalize, median_filter, Rect};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Row-major, channel-interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Image({}x{}x{})", self.width, self.height, self.channels)
    }
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Range(format!("image extent {width}x{height} must be positive")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Unsupported(format!("{channels} channels (expected 1 or 3)")));
        }
        let len = width * height * channels;
        if pixels.len() != len {
            return Err(Error::dim("pixels", len, pixels.len(), format!("{width}x{height}x{channels} image")));
        }
        Ok(Self { width, height, channels, pixels })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, ch: usize) -> usize {
        (y * self.width + x) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ch: usize) -> u8 {
        self.pixels[self.index(x, y, ch)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ch: usize, v: u8) {
        let i = self.index(x, y, ch);
        self.pixels[i] = v;
    }

    /// Same extent and channel count, every value produced by `f(x, y, ch)`.
    pub fn from_fn(&self, f: impl Fn(usize, usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for y in 0..self.height {
            for x in 0..self.width {
                for ch in 0..self.channels {
                    pixels.push(f(x, y, ch));
                }
            }
        }
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            pixels,
        }
    }

    pub fn map(&self, f: impl Fn(u8) -> u8) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Replicates a gray image to three channels.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        Self {
            width: self.width,
            height: self.height,
            channels: 3,
            pixels: self.pixels.iter().flat_map(|&v| [v, v, v]).collect(),
        }
    }
}

fn check_norm(img: &Image, mean: &[f64], std: &[f64]) -> Result<()> {
    let c = img.channels();
    if mean.len() != c || std.len() != c {
        return Err(Error::dim("channels", c, mean.len().min(std.len()), "per-channel mean/std"));
    }
    if let Some(s) = std.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::config(format!("std {s} must be positive")));
    }
    Ok(())
}

/// Per-channel normalization applied to network inputs unless configured
/// otherwise.
pub const DEFAULT_MEAN: [f64; 3] = [0.5; 3];
pub const DEFAULT_STD: [f64; 3] = [0.25; 3];

/// `(v / 255 − mean) / std` per channel, as a 1×C×H×W planar tensor.
pub fn image_to_tensor<T: Scalar>(img: &Image, mean: &[f64], std: &[f64]) -> Result<Tensor<T>> {
    images_to_tensor(std::slice::from_ref(img), mean, std)
}

/// Stacks equally sized images into an N×C×H×W tensor.
pub fn images_to_tensor<T: Scalar>(images: &[Image], mean: &[f64], std: &[f64]) -> Result<Tensor<T>> {
    let first = images.first().ok_or_else(|| Error::config("no images to convert"))?;
    let (w, h, c) = (first.width(), first.height(), first.channels());
    let mut data = Vec::with_capacity(images.len() * c * h * w);
    for img in images {
        check_norm(img, mean, std)?;
        if (img.width(), img.height(), img.channels()) != (w, h, c) {
            return Err(Error::dim("image", w * h * c, img.pixels().len(), format!("{img:?} vs {first:?}")));
        }
        for ch in 0..c {
            let (m, s) = (mean[ch], std[ch]);
            for y in 0..h {
                for x in 0..w {
                    data.push(T::lit((img.get(x, y, ch) as f64 / 255.0 - m) / s));
                }
            }
        }
    }
    Tensor::from_vec(Shape::new(images.len(), c, h, w), data)
}
