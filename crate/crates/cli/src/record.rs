use serde::{Deserialize, Serialize};

/// One line of `detect` output. The distraction fields are present when a
/// model was supplied, the fatigue fields when landmarks were.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame: u64,
    pub ts_ms: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eye_closed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mouth_open: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perclos_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drowsy: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yawns: Option<u64>,
}

impl DetectionRecord {
    pub fn new(frame: u64, ts_ms: i64) -> Self {
        Self {
            frame,
            ts_ms,
            label: None,
            probs: None,
            eye_closed: None,
            mouth_open: None,
            perclos_pct: None,
            drowsy: None,
            yawns: None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
