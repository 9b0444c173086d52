//! Eye and mouth state from facial landmarks, and the sliding-window
//! eye-closure percentage (PERCLOS) used to flag drowsiness.

mod landmarks;
mod perclos;

pub use landmarks::{parse_landmarks, write_landmarks, LandmarkFrame, LandmarkReader, NUM_LANDMARKS};
pub use perclos::{perclos_oracle, update_fatigue, FatigueReading, FatigueState};

use crate::config::ConfigText;
use crate::error::{Error, Result};

/// 1-based landmark indices of the right eye, in EAR order `p1..p6`.
pub const RIGHT_EYE: [usize; 6] = [37, 38, 39, 40, 41, 42];
/// 1-based landmark indices of the left eye, in EAR order `p1..p6`.
pub const LEFT_EYE: [usize; 6] = [43, 44, 45, 46, 47, 48];
/// 1-based landmark indices of the inner lip contour.
pub const INNER_MOUTH: [usize; 8] = [61, 62, 63, 64, 65, 66, 67, 68];

/// Denominators below this length make a ratio read as 0.
pub const DEGENERATE_SPAN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eye {
    Left,
    Right,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `(|p2−p6| + |p3−p5|) / (2·|p1−p4|)`, or 0 when the eye has no width.
pub fn eye_aspect_ratio(frame: &LandmarkFrame, eye: Eye) -> f64 {
    let idx = match eye {
        Eye::Left => LEFT_EYE,
        Eye::Right => RIGHT_EYE,
    };
    let p = idx.map(|i| frame.point(i));
    let width = dist(p[0], p[3]);
    if width < DEGENERATE_SPAN {
        return 0.0;
    }
    (dist(p[1], p[5]) + dist(p[2], p[4])) / (2.0 * width)
}

/// `(|p62−p68| + |p63−p67| + |p64−p66|) / (3·|p61−p65|)` over the inner
/// lips, or 0 when the mouth has no width.
pub fn mouth_aspect_ratio(frame: &LandmarkFrame) -> f64 {
    let p = |i| frame.point(i);
    let width = dist(p(61), p(65));
    if width < DEGENERATE_SPAN {
        return 0.0;
    }
    (dist(p(62), p(68)) + dist(p(63), p(67)) + dist(p(64), p(66))) / (3.0 * width)
}

pub const FATIGUE_KEYS: [&str; 5] = ["ear_closed_threshold", "mar_open_threshold", "perclos_threshold_pct", "window_ms", "yawn_min_frames"];

#[derive(Clone, Debug, PartialEq)]
pub struct FatigueConfig {
    /// Eyes count as closed when the mean EAR is strictly below this.
    pub ear_closed_threshold: f64,
    /// The mouth counts as open when MAR is strictly above this.
    pub mar_open_threshold: f64,
    /// PERCLOS at or above this percentage is drowsy.
    pub perclos_threshold_pct: f64,
    pub window_ms: i64,
    /// Consecutive open-mouth frames that make one yawn.
    pub yawn_min_frames: usize,
}

impl Default for FatigueConfig {
    fn default() -> Self {
        Self {
            ear_closed_threshold: 0.21,
            mar_open_threshold: 0.6,
            perclos_threshold_pct: 20.0,
            window_ms: 60_000,
            yawn_min_frames: 15,
        }
    }
}

impl FatigueConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.ear_closed_threshold) || !positive(self.mar_open_threshold) {
            return Err(Error::config("EAR and MAR thresholds must be positive"));
        }
        if !(positive(self.perclos_threshold_pct) && self.perclos_threshold_pct <= 100.0) {
            return Err(Error::config(format!("perclos_threshold_pct {} must lie in (0, 100]", self.perclos_threshold_pct)));
        }
        if self.window_ms <= 0 {
            return Err(Error::config(format!("window_ms {} must be positive", self.window_ms)));
        }
        if self.yawn_min_frames == 0 {
            return Err(Error::config("yawn_min_frames must be at least 1"));
        }
        Ok(())
    }

    /// Reads the fatigue keys of `doc`, defaulting absent ones. Other keys
    /// are ignored so one file can configure several stages.
    pub fn from_config(doc: &ConfigText) -> Result<Self> {
        let d = Self::default();
        let cfg = Self {
            ear_closed_threshold: doc.parsed_or("ear_closed_threshold", d.ear_closed_threshold)?,
            mar_open_threshold: doc.parsed_or("mar_open_threshold", d.mar_open_threshold)?,
            perclos_threshold_pct: doc.parsed_or("perclos_threshold_pct", d.perclos_threshold_pct)?,
            window_ms: doc.parsed_or("window_ms", d.window_ms)?,
            yawn_min_frames: doc.parsed_or("yawn_min_frames", d.yawn_min_frames)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_config(&self) -> ConfigText {
        let mut doc = ConfigText::new();
        doc.set("ear_closed_threshold", self.ear_closed_threshold);
        doc.set("mar_open_threshold", self.mar_open_threshold);
        doc.set("perclos_threshold_pct", self.perclos_threshold_pct);
        doc.set("window_ms", self.window_ms);
        doc.set("yawn_min_frames", self.yawn_min_frames);
        doc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameState {
    pub eye_closed: bool,
    pub mouth_open: bool,
}

pub fn classify_frame(frame: &LandmarkFrame, config: &FatigueConfig) -> FrameState {
    let ear = 0.5 * (eye_aspect_ratio(frame, Eye::Left) + eye_aspect_ratio(frame, Eye::Right));
    FrameState {
        eye_closed: ear < config.ear_closed_threshold,
        mouth_open: mouth_aspect_ratio(frame) > config.mar_open_threshold,
    }
}
