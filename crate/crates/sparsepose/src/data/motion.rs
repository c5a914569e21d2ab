//! Self-describing motion file: one JSON document holding per-frame local
//! joint rotations (axis-angle) and root translations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::DataError;
use crate::rotation::{axis_angle_to_matrix, AxisAngle};
use crate::skeleton::{LocalPose, JOINT_COUNT};

pub const MOTION_SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// 22 local joint rotations, axis scaled by angle (radians).
    pub rotations: Vec<[f64; 3]>,
    /// Root (pelvis) translation in meters.
    pub root_translation: [f64; 3],
}

/// Ground-truth or predicted motion: per-frame local rotations plus root
/// translation at a fixed frame rate.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionSequence {
    pub fps: f64,
    pub frames: Vec<Frame>,
}

#[derive(Serialize, Deserialize)]
struct MotionDoc {
    version: u64,
    fps: f64,
    joint_count: usize,
    rotation_format: String,
    frames: Vec<Frame>,
}

impl MotionSequence {
    pub fn new(fps: f64, frames: Vec<Frame>) -> Result<Self, DataError> {
        let seq = MotionSequence { fps, frames };
        seq.validate()?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.fps > 0.0) {
            return Err(DataError::Format(format!("fps must be > 0, got {}", self.fps)));
        }
        if self.frames.len() < 2 {
            return Err(DataError::Format(format!(
                "sequence needs at least 2 frames, got {}",
                self.frames.len()
            )));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.rotations.len() != JOINT_COUNT {
                return Err(DataError::Format(format!(
                    "frame {i}: expected {JOINT_COUNT} rotations, got {}",
                    f.rotations.len()
                )));
            }
            let finite = f
                .rotations
                .iter()
                .flatten()
                .chain(f.root_translation.iter())
                .all(|c| c.is_finite());
            if !finite {
                return Err(DataError::Format(format!("frame {i}: non-finite values")));
            }
        }
        Ok(())
    }

    /// Local rotation matrices for all frames.
    pub fn to_local_pose(&self) -> LocalPose {
        let mut pose = LocalPose::identity(self.frames.len());
        for (f, frame) in self.frames.iter().enumerate() {
            for (j, aa) in frame.rotations.iter().enumerate() {
                pose.set(f, j, axis_angle_to_matrix(&AxisAngle(*aa)));
            }
        }
        pose
    }

    pub fn root_translations(&self) -> Vec<[f64; 3]> {
        self.frames.iter().map(|f| f.root_translation).collect()
    }

    /// Sub-sequence `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> MotionSequence {
        MotionSequence {
            fps: self.fps,
            frames: self.frames[start..start + len].to_vec(),
        }
    }
}

pub fn save_motion(seq: &MotionSequence, path: impl AsRef<Path>) -> Result<(), DataError> {
    seq.validate()?;
    let doc = MotionDoc {
        version: MOTION_SCHEMA_VERSION,
        fps: seq.fps,
        joint_count: JOINT_COUNT,
        rotation_format: "axis_angle".to_string(),
        frames: seq.frames.clone(),
    };
    let text = serde_json::to_string(&doc).map_err(|e| DataError::Format(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_motion(path: impl AsRef<Path>) -> Result<MotionSequence, DataError> {
    let text = std::fs::read_to_string(path)?;
    parse_motion(&text)
}

pub fn parse_motion(text: &str) -> Result<MotionSequence, DataError> {
    // Check the schema version first so an unknown version is reported as
    // such rather than as a field mismatch.
    let probe: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| DataError::Format(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let version = probe
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DataError::Format("missing or non-integer 'version' field".into()))?;
    if version != MOTION_SCHEMA_VERSION {
        return Err(DataError::Version {
            found: version,
            expected: MOTION_SCHEMA_VERSION,
        });
    }
    let doc: MotionDoc = serde_json::from_value(probe)
        .map_err(|e| DataError::Format(format!("field '{e}'")))?;
    if doc.joint_count != JOINT_COUNT {
        return Err(DataError::Format(format!(
            "joint_count {} unsupported (expected {JOINT_COUNT})",
            doc.joint_count
        )));
    }
    if doc.rotation_format != "axis_angle" {
        return Err(DataError::Format(format!(
            "rotation_format '{}' unsupported (expected 'axis_angle')",
            doc.rotation_format
        )));
    }
    let seq = MotionSequence {
        fps: doc.fps,
        frames: doc.frames,
    };
    seq.validate()?;
    Ok(seq)
}
