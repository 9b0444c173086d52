use super::Image;
use crate::error::{Error, Result};

/// Inverse (output → input) affine map in pixel-centre coordinates:
/// the output pixel centred at `(x, y)` samples the input at
/// `(a·x + b·y + tx, c·x + d·y + ty)`.
///
/// The constructors take the forward transform and store its inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub c: f64,
    pub d: f64,
    pub ty: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { a: 1.0, b: 0.0, tx: 0.0, c: 0.0, d: 1.0, ty: 0.0 };

    pub fn new(a: f64, b: f64, tx: f64, c: f64, d: f64, ty: f64) -> Result<Self> {
        let m = Self { a, b, tx, c, d, ty };
        if [a, b, tx, c, d, ty].iter().all(|v| v.is_finite()) {
            Ok(m)
        } else {
            Err(Error::config(format!("affine map has non-finite entries: {m:?}")))
        }
    }

    /// Moves content by `(dx, dy)` pixels.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { tx: -dx, ty: -dy, ..Self::IDENTITY }
    }

    /// Rotates content by `degrees` (counter-clockwise on screen) about the
    /// centre of a `width`×`height` image.
    pub fn rotation(degrees: f64, width: usize, height: usize) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        // screen y points down, so a counter-clockwise turn is (x, y) → (c·x + s·y, −s·x + c·y)
        // about the centre; its inverse is the transpose.
        Self {
            a: c,
            b: -s,
            tx: cx - c * cx + s * cy,
            c: s,
            d: c,
            ty: cy - s * cx - c * cy,
        }
    }

    /// Zooms content by `factor` about the image centre.
    pub fn scale(factor: f64, width: usize, height: usize) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::config(format!("scale factor {factor} must be positive")));
        }
        let inv = 1.0 / factor;
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        Ok(Self {
            a: inv,
            b: 0.0,
            tx: cx - inv * cx,
            c: 0.0,
            d: inv,
            ty: cy - inv * cy,
        })
    }

    /// Horizontal shear `x' = x + sx·(y − h/2)`, leaving the middle row fixed.
    pub fn shear_x(sx: f64, height: usize) -> Self {
        let cy = height as f64 / 2.0;
        Self { b: -sx, tx: sx * cy, ..Self::IDENTITY }
    }

    /// Maps an output point to its input sample point.
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y + self.tx, self.c * x + self.d * y + self.ty)
    }

    /// The map for "apply `self`, then `next`" as forward transforms.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        // inverse of (next ∘ self) = self⁻¹ ∘ next⁻¹
        let (s, n) = (self, next);
        AffineMap {
            a: s.a * n.a + s.b * n.c,
            b: s.a * n.b + s.b * n.d,
            tx: s.a * n.tx + s.b * n.ty + s.tx,
            c: s.c * n.a + s.d * n.c,
            d: s.c * n.b + s.d * n.d,
            ty: s.c * n.tx + s.d * n.ty + s.ty,
        }
    }
}

/// Resamples through an inverse map with nearest-neighbour lookup at pixel
/// centres. Output pixels whose sample falls outside the input get `fill`.
pub fn affine_transform(img: &Image, map: &AffineMap, fill: u8) -> Image {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (sx, sy) = map.apply(x as f64 + 0.5, y as f64 + 0.5);
            let inside = sx >= 0.0 && sy >= 0.0 && sx < w && sy < h;
            for ch in 0..img.channels() {
                let v = if inside { img.get(sx as usize, sy as usize, ch) } else { fill };
                out.set(x, y, ch, v);
            }
        }
    }
    out
}
