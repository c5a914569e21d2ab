//! Tracking-signal derivation, foot-contact masks, and floor calibration.

use crate::data::{DataError, MotionSequence};
use crate::rotation::{matrix_to_sixd, rotation_delta, SIXD_IDENTITY};
use crate::skeleton::{
    forward_kinematics, GlobalMotion, SkeletonTemplate, FEET_JOINTS, JOINT_COUNT, TRACKED_JOINTS,
};

/// Per-frame observation width: 3 devices x (rot 6D + angular vel 6D +
/// position 3 + positional vel 3).
pub const SIGNAL_WIDTH: usize = 54;

const PER_DEVICE: usize = 18;

/// Per-frame 54-dim head/hands observation rows.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingSignals {
    pub frames: usize,
    data: Vec<f64>,
}

impl TrackingSignals {
    pub fn new(frames: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), frames * SIGNAL_WIDTH, "signal row width");
        TrackingSignals { frames, data }
    }

    #[inline]
    pub fn row(&self, frame: usize) -> &[f64] {
        &self.data[frame * SIGNAL_WIDTH..(frame + 1) * SIGNAL_WIDTH]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Observed rotation 6D of device `d` (0 head, 1 left hand, 2 right hand).
    pub fn rotation6(&self, frame: usize, device: usize) -> &[f64] {
        &self.row(frame)[device * PER_DEVICE..device * PER_DEVICE + 6]
    }

    pub fn angular_velocity6(&self, frame: usize, device: usize) -> &[f64] {
        &self.row(frame)[device * PER_DEVICE + 6..device * PER_DEVICE + 12]
    }

    pub fn position(&self, frame: usize, device: usize) -> &[f64] {
        &self.row(frame)[device * PER_DEVICE + 12..device * PER_DEVICE + 15]
    }

    pub fn positional_velocity(&self, frame: usize, device: usize) -> &[f64] {
        &self.row(frame)[device * PER_DEVICE + 15..device * PER_DEVICE + 18]
    }

    pub fn window(&self, start: usize, len: usize) -> TrackingSignals {
        TrackingSignals {
            frames: len,
            data: self.data[start * SIGNAL_WIDTH..(start + len) * SIGNAL_WIDTH].to_vec(),
        }
    }
}

/// Binary feet-contact mask, one row of 4 per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactMask {
    pub frames: usize,
    mask: Vec<u8>,
}

impl ContactMask {
    pub fn new(frames: usize, mask: Vec<u8>) -> Self {
        assert_eq!(mask.len(), frames * FEET_JOINTS.len());
        debug_assert!(mask.iter().all(|&m| m <= 1));
        ContactMask { frames, mask }
    }

    #[inline]
    pub fn get(&self, frame: usize, foot: usize) -> u8 {
        self.mask[frame * FEET_JOINTS.len() + foot]
    }

    pub fn row(&self, frame: usize) -> &[u8] {
        &self.mask[frame * FEET_JOINTS.len()..(frame + 1) * FEET_JOINTS.len()]
    }

    pub fn data(&self) -> &[u8] {
        &self.mask
    }

    pub fn window(&self, start: usize, len: usize) -> ContactMask {
        ContactMask {
            frames: len,
            mask: self.mask[start * FEET_JOINTS.len()..(start + len) * FEET_JOINTS.len()].to_vec(),
        }
    }
}

/// Contact thresholds; the paper never specifies how the mask is obtained,
/// so these are overridable.
#[derive(Clone, Copy, Debug)]
pub struct ContactParams {
    /// Max foot height (meters) above the calibrated ground.
    pub height_threshold: f64,
    /// Max horizontal displacement (meters) from the previous frame.
    pub displacement_threshold: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        ContactParams {
            height_threshold: 0.05,
            displacement_threshold: 0.02,
        }
    }
}

/// Runs FK and extracts the 54-dim per-frame observation rows for the head
/// and wrists. Velocities are per-frame differences; frame 0 uses zero
/// positional velocity and the identity angular velocity.
pub fn derive_tracking_signals(
    seq: &MotionSequence,
    template: &SkeletonTemplate,
) -> Result<TrackingSignals, DataError> {
    let pose = seq.to_local_pose();
    let gm = forward_kinematics(&pose, template, &seq.root_translations())?;
    derive_signals_from_motion(&gm)
}

/// Same as [`derive_tracking_signals`] but starting from precomputed global
/// motion.
pub fn derive_signals_from_motion(gm: &GlobalMotion) -> Result<TrackingSignals, DataError> {
    let t = gm.frames;
    let mut data = vec![0.0; t * SIGNAL_WIDTH];
    for f in 0..t {
        for (d, &joint) in TRACKED_JOINTS.iter().enumerate() {
            let base = f * SIGNAL_WIDTH + d * PER_DEVICE;
            let rot = gm.rotation(f, joint);
            let pos = gm.position(f, joint);
            let rot6 = matrix_to_sixd(rot)?;
            data[base..base + 6].copy_from_slice(&rot6.0);
            if f == 0 {
                data[base + 6..base + 12].copy_from_slice(&SIXD_IDENTITY);
            } else {
                let prev = gm.rotation(f - 1, joint);
                let delta = matrix_to_sixd(&rotation_delta(rot, prev))?;
                data[base + 6..base + 12].copy_from_slice(&delta.0);
            }
            data[base + 12..base + 15].copy_from_slice(pos);
            if f > 0 {
                let prev = gm.position(f - 1, joint);
                data[base + 15] = pos[0] - prev[0];
                data[base + 16] = pos[1] - prev[1];
                data[base + 17] = pos[2] - prev[2];
            }
        }
    }
    Ok(TrackingSignals::new(t, data))
}

/// Foot contact from a floor-calibrated sequence: a foot is grounded when
/// its height is below the threshold and it moved less than the
/// displacement threshold since the previous frame. Frame 0 copies frame 1.
pub fn derive_contact_mask(
    seq: &MotionSequence,
    template: &SkeletonTemplate,
) -> Result<ContactMask, DataError> {
    derive_contact_mask_with(seq, template, ContactParams::default())
}

pub fn derive_contact_mask_with(
    seq: &MotionSequence,
    template: &SkeletonTemplate,
    params: ContactParams,
) -> Result<ContactMask, DataError> {
    let pose = seq.to_local_pose();
    let gm = forward_kinematics(&pose, template, &seq.root_translations())?;
    Ok(contact_mask_from_motion(&gm, params))
}

pub fn contact_mask_from_motion(gm: &GlobalMotion, params: ContactParams) -> ContactMask {
    let t = gm.frames;
    let k = FEET_JOINTS.len();
    let mut mask = vec![0u8; t * k];
    for f in 1..t {
        for (i, &joint) in FEET_JOINTS.iter().enumerate() {
            let p = gm.position(f, joint);
            let prev = gm.position(f - 1, joint);
            let horiz = ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
            let grounded = p[2] < params.height_threshold && horiz < params.displacement_threshold;
            mask[f * k + i] = grounded as u8;
        }
    }
    if t > 1 {
        let (first, rest) = mask.split_at_mut(k);
        first.copy_from_slice(&rest[..k]);
    }
    ContactMask::new(t, mask)
}

/// Shifts root z so the 5th percentile of per-frame minimum joint heights
/// becomes the ground plane z = 0. Idempotent.
pub fn floor_calibrate(
    seq: &MotionSequence,
    template: &SkeletonTemplate,
) -> Result<MotionSequence, DataError> {
    let pose = seq.to_local_pose();
    let gm = forward_kinematics(&pose, template, &seq.root_translations())?;
    let mut mins: Vec<f64> = (0..gm.frames)
        .map(|f| {
            (0..JOINT_COUNT)
                .map(|j| gm.position(f, j)[2])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    mins.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((mins.len() - 1) as f64 * 0.05).floor() as usize;
    let ground = mins[idx];
    let mut out = seq.clone();
    for frame in &mut out.frames {
        frame.root_translation[2] -= ground;
    }
    Ok(out)
}
