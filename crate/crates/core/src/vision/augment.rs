use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{adjust_brightness, affine_transform, crop_resize, AffineMap, Image, Rect};
use crate::config::ConfigText;
use crate::error::Result;

pub const AUGMENT_KEYS: [&str; 6] = ["rot_deg", "shear_x", "scale", "trans_px", "brightness", "crop_frac"];

/// Ranges from which one transform chain is drawn per sample. Absent ranges
/// leave the corresponding step out; a range of `0,0` is a no-op.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AugmentPolicy {
    /// Rotation in degrees about the centre.
    pub rot_deg: Option<(f64, f64)>,
    /// Horizontal shear factor.
    pub shear_x: Option<(f64, f64)>,
    /// Relative zoom: content is scaled by `1 + s`.
    pub scale: Option<(f64, f64)>,
    /// Translation in pixels, drawn independently for x and y.
    pub trans_px: Option<(f64, f64)>,
    /// Brightness offset in gray levels.
    pub brightness: Option<(f64, f64)>,
    /// Fraction of each side trimmed by a random crop that is then resized
    /// back to the original extent.
    pub crop_frac: Option<(f64, f64)>,
}

impl AugmentPolicy {
    pub fn from_config(doc: &ConfigText) -> Result<Self> {
        doc.check_keys(&AUGMENT_KEYS)?;
        let policy = Self {
            rot_deg: doc.range("rot_deg")?,
            shear_x: doc.range("shear_x")?,
            scale: doc.range("scale")?,
            trans_px: doc.range("trans_px")?,
            brightness: doc.range("brightness")?,
            crop_frac: doc.range("crop_frac")?,
        };
        if let Some((lo, hi)) = policy.scale {
            if lo <= -1.0 {
                return Err(crate::Error::config(format!("scale range {lo},{hi} must stay above -1")));
            }
        }
        if let Some((lo, hi)) = policy.crop_frac {
            if lo < 0.0 || hi >= 1.0 {
                return Err(crate::Error::config(format!("crop_frac range {lo},{hi} must lie in [0, 1)")));
            }
        }
        Ok(policy)
    }

    pub fn to_config(&self) -> ConfigText {
        let mut doc = ConfigText::new();
        for (key, range) in AUGMENT_KEYS.iter().zip(self.ranges()) {
            if let Some((lo, hi)) = range {
                doc.set(key, format!("{lo},{hi}"));
            }
        }
        doc
    }

    fn ranges(&self) -> [Option<(f64, f64)>; 6] {
        [self.rot_deg, self.shear_x, self.scale, self.trans_px, self.brightness, self.crop_frac]
    }

    pub fn is_empty(&self) -> bool {
        self.ranges().iter().all(Option::is_none)
    }
}

fn draw(rng: &mut ChaCha8Rng, range: Option<(f64, f64)>) -> f64 {
    match range {
        None => 0.0,
        Some((lo, hi)) => lo + (hi - lo) * rng.gen::<f64>(),
    }
}

/// Applies one randomly drawn chain (rotation, scale, shear, translation,
/// then brightness, then crop) determined entirely by `(policy, seed)`.
/// Pixels uncovered by the geometric step are filled with 0.
pub fn augment_sample(img: &Image, policy: &AugmentPolicy, seed: u64) -> Image {
    if policy.is_empty() {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (img.width(), img.height());
    let rot = draw(&mut rng, policy.rot_deg);
    let zoom = 1.0 + draw(&mut rng, policy.scale);
    let shear = draw(&mut rng, policy.shear_x);
    let dx = draw(&mut rng, policy.trans_px);
    let dy = draw(&mut rng, policy.trans_px);
    let delta = draw(&mut rng, policy.brightness).round() as i32;
    let trim = draw(&mut rng, policy.crop_frac);
    let (ox, oy) = (rng.gen::<f64>(), rng.gen::<f64>());

    let mut out = img.clone();
    if rot != 0.0 || zoom != 1.0 || shear != 0.0 || dx != 0.0 || dy != 0.0 {
        let map = AffineMap::rotation(rot, w, h)
            .then(&AffineMap::scale(zoom.max(f64::MIN_POSITIVE), w, h).expect("positive zoom"))
            .then(&AffineMap::shear_x(shear, h))
            .then(&AffineMap::translation(dx, dy));
        out = affine_transform(&out, &map, 0);
    }
    if delta != 0 {
        out = adjust_brightness(&out, delta);
    }
    let cw = ((1.0 - trim) * w as f64).round().clamp(1.0, w as f64) as usize;
    let ch = ((1.0 - trim) * h as f64).round().clamp(1.0, h as f64) as usize;
    if cw < w || ch < h {
        let x = ((w - cw) as f64 * ox).floor() as usize;
        let y = ((h - ch) as f64 * oy).floor() as usize;
        out = crop_resize(&out, Rect::new(x.min(w - cw), y.min(h - ch), cw, ch), w, h).expect("crop inside image");
    }
    out
}
