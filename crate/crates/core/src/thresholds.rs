use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const THRESHOLDS_SCHEMA: &str = "thresholds.v1";

/// Tunable acceptance thresholds shared by perception, grounding and
/// grasping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Minimum detection confidence for an object to be perceived.
    pub detection: f64,
    /// Maximum change of the mean per-axis standard deviation (meters)
    /// for two clouds to merge.
    pub pcd_merge: f64,
    /// Minimum number of projected points inside the other object's
    /// top-down hull for a vertical relation to be considered.
    pub overlap_pts: usize,
    /// Maximum fraction of points outside the other hull for containment.
    pub contained: f64,
    /// Minimum grasp candidate score.
    pub grasp: f64,
    /// Minimum similarity for placement phrases.
    pub place_desc: f64,
    /// Minimum similarity for visual descriptions.
    pub visual_desc: f64,
    /// Minimum similarity for labels.
    pub label: f64,
    /// Accepted for compatibility; there are no image masks to erode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_erosion: Option<u32>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            detection: 0.3,
            pcd_merge: 0.03,
            overlap_pts: 20,
            contained: 0.1,
            grasp: 0.8,
            place_desc: 0.6,
            visual_desc: 0.3,
            label: 0.3,
            mask_erosion: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ThresholdsError {
    #[error("invalid thresholds document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("threshold {0} out of range")]
    OutOfRange(&'static str),
}

impl Thresholds {
    pub fn from_json(text: &str) -> Result<Self, ThresholdsError> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("schema");
        }
        let t: Thresholds = serde_json::from_value(value)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("thresholds serialize");
        v.as_object_mut()
            .expect("object")
            .insert("schema".into(), THRESHOLDS_SCHEMA.into());
        serde_json::to_string_pretty(&v).expect("thresholds serialize")
    }

    pub fn validate(&self) -> Result<(), ThresholdsError> {
        let unit = [
            ("detection", self.detection),
            ("contained", self.contained),
            ("grasp", self.grasp),
            ("place_desc", self.place_desc),
            ("visual_desc", self.visual_desc),
            ("label", self.label),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(ThresholdsError::OutOfRange(name));
            }
        }
        if !(self.pcd_merge >= 0.0) {
            return Err(ThresholdsError::OutOfRange("pcd_merge"));
        }
        Ok(())
    }
}
