//! Synthetic motion generators: smooth parametric joint-angle trajectories
//! for four desk-scale motion families. Deterministic given a seed; every
//! output is floor-calibrated.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::signals::floor_calibrate;
use crate::data::{DataError, Frame, MotionSequence};
use crate::skeleton::{SkeletonTemplate, JOINT_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionKind {
    IdleSway,
    WalkCycle,
    ArmWave,
    Squat,
}

impl MotionKind {
    pub const ALL: [MotionKind; 4] = [
        MotionKind::IdleSway,
        MotionKind::WalkCycle,
        MotionKind::ArmWave,
        MotionKind::Squat,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MotionKind::IdleSway => "idle_sway",
            MotionKind::WalkCycle => "walk_cycle",
            MotionKind::ArmWave => "arm_wave",
            MotionKind::Squat => "squat",
        }
    }
}

impl FromStr for MotionKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "idle_sway" => Ok(MotionKind::IdleSway),
            "walk_cycle" => Ok(MotionKind::WalkCycle),
            "arm_wave" => Ok(MotionKind::ArmWave),
            "squat" => Ok(MotionKind::Squat),
            other => Err(DataError::UnknownKind(other.to_string())),
        }
    }
}

/// C^2 bump on [0, 1]: zero value, slope, and curvature at both ends.
fn bump(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    let s = (std::f64::consts::PI * u).sin();
    s * s * s
}

struct Jitter {
    phase: f64,
    amp: f64,
    freq: f64,
}

impl Jitter {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Jitter {
            phase: rng.gen_range(0.0..1.0),
            amp: rng.gen_range(0.85..1.15),
            freq: rng.gen_range(0.9..1.1),
        }
    }
}

// Joint ids used by the generators (SMPL ordering).
const L_HIP: usize = 1;
const R_HIP: usize = 2;
const SPINE1: usize = 3;
const L_KNEE: usize = 4;
const R_KNEE: usize = 5;
const SPINE2: usize = 6;
const L_ANKLE: usize = 7;
const R_ANKLE: usize = 8;
const SPINE3: usize = 9;
const NECK: usize = 12;
const L_SHOULDER: usize = 16;
const R_SHOULDER: usize = 17;
const L_ELBOW: usize = 18;
const R_ELBOW: usize = 19;

/// Generates one synthetic sequence. Trajectories are C^2 in time;
/// `walk_cycle` produces alternating single-support foot contacts. The
/// bundled humanoid template anchors standing height and the squat's leg
/// compensation.
pub fn synth_generate(
    kind: MotionKind,
    duration_s: f64,
    fps: f64,
    seed: u64,
) -> Result<MotionSequence, DataError> {
    if !(fps > 0.0) || !(duration_s > 0.0) {
        return Err(DataError::InvalidArg(format!(
            "duration {duration_s}s at {fps} fps is not positive"
        )));
    }
    let t = (duration_s * fps).round() as usize;
    if t < 2 {
        return Err(DataError::InvalidArg(format!(
            "duration {duration_s}s at {fps} fps yields {t} frames (need >= 2)"
        )));
    }
    let template = SkeletonTemplate::default_humanoid();
    // Standing pelvis height: rest feet land on z = 0.
    let rest = crate::skeleton::forward_kinematics(
        &crate::skeleton::LocalPose::identity(1),
        &template,
        &[[0.0; 3]],
    )?;
    let rest_min_z = (0..JOINT_COUNT)
        .map(|j| rest.position(0, j)[2])
        .fold(f64::INFINITY, f64::min);
    let z0 = -rest_min_z;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j1 = Jitter::draw(&mut rng);
    let j2 = Jitter::draw(&mut rng);
    let j3 = Jitter::draw(&mut rng);

    let thigh = template.bone_length(L_KNEE);
    let shank = template.bone_length(L_ANKLE);

    let mut frames = Vec::with_capacity(t);
    for f in 0..t {
        let time = f as f64 / fps;
        let mut rot = vec![[0.0f64; 3]; JOINT_COUNT];
        let mut root = [0.0, 0.0, z0];
        match kind {
            MotionKind::IdleSway => {
                let w1 = std::f64::consts::TAU * 0.14 * j1.freq;
                let w2 = std::f64::consts::TAU * 0.09 * j2.freq;
                let sway = 0.04 * j1.amp * (w1 * time + j1.phase * std::f64::consts::TAU).sin();
                let lean = 0.03 * j2.amp * (w2 * time + j2.phase * std::f64::consts::TAU).sin();
                for spine in [SPINE1, SPINE2, SPINE3] {
                    rot[spine] = [sway, lean, 0.0];
                }
                rot[NECK] = [-sway * 0.5, -lean * 0.5, 0.0];
                let arm = 0.05 * j3.amp * (w1 * time + j3.phase * std::f64::consts::TAU).sin();
                rot[L_SHOULDER] = [arm, 0.0, 0.0];
                rot[R_SHOULDER] = [-arm, 0.0, 0.0];
            }
            MotionKind::WalkCycle => {
                let cadence = 1.0 * j1.freq; // gait cycles per second
                let phase = (time * cadence + j1.phase).fract();
                let amp = 0.5 * j1.amp;
                let swing = 0.4;
                let mut leg = |hip: usize, knee: usize, ankle: usize, ph: f64| {
                    let ph = ph.fract();
                    let theta = if ph < swing { amp * bump(ph / swing) } else { 0.0 };
                    rot[hip] = [0.0, -theta, 0.0];
                    rot[knee] = [0.0, 2.0 * theta, 0.0];
                    rot[ankle] = [0.0, -theta, 0.0];
                };
                leg(L_HIP, L_KNEE, L_ANKLE, phase);
                leg(R_HIP, R_KNEE, R_ANKLE, phase + 0.5);
                // Arms counter-swing with the opposite leg; the wrists carry
                // the gait phase into the tracking signals.
                let swing_arm =
                    0.3 * j2.amp * (std::f64::consts::TAU * (time * cadence + j1.phase)).sin();
                rot[L_SHOULDER] = [0.0, 0.0, -swing_arm];
                rot[R_SHOULDER] = [0.0, 0.0, -swing_arm];
                rot[L_ELBOW] = [0.0, 0.0, -0.2 * swing_arm.abs()];
                rot[R_ELBOW] = [0.0, 0.0, 0.2 * swing_arm.abs()];
                let twist =
                    0.05 * j3.amp * (std::f64::consts::TAU * (time * cadence + j1.phase)).sin();
                rot[SPINE1] = [0.0, 0.0, twist];
                rot[SPINE3] = [0.0, 0.0, -twist];
            }
            MotionKind::ArmWave => {
                let w = std::f64::consts::TAU * 0.5 * j1.freq;
                let wave = 0.7 * j1.amp * (w * time + j1.phase * std::f64::consts::TAU).sin();
                let wave2 = 0.4 * j2.amp * (w * time + (j1.phase + 0.15) * std::f64::consts::TAU).sin();
                rot[L_SHOULDER] = [wave, 0.0, 0.0];
                rot[R_SHOULDER] = [-wave, 0.0, 0.0];
                rot[L_ELBOW] = [wave2, 0.0, 0.0];
                rot[R_ELBOW] = [-wave2, 0.0, 0.0];
                let sway = 0.03 * j3.amp * (w * 0.5 * time).sin();
                rot[SPINE2] = [sway, 0.0, 0.0];
            }
            MotionKind::Squat => {
                let w = std::f64::consts::TAU * 0.4 * j1.freq;
                let depth = 0.55 * j1.amp;
                let theta = depth * 0.5 * (1.0 - (w * time + j1.phase * std::f64::consts::TAU).cos());
                for (hip, knee, ankle) in [(L_HIP, L_KNEE, L_ANKLE), (R_HIP, R_KNEE, R_ANKLE)] {
                    rot[hip] = [0.0, -theta, 0.0];
                    rot[knee] = [0.0, 2.0 * theta, 0.0];
                    rot[ankle] = [0.0, -theta, 0.0];
                }
                // Hip/knee/ankle at (-t, 2t, -t) keeps the ankle under the
                // hip; drop the root so the feet stay planted.
                root[2] = z0 - (thigh + shank) * (1.0 - theta.cos());
                // Arms reach forward as the squat deepens.
                let reach = 0.9 * theta;
                rot[L_SHOULDER] = [0.0, 0.0, -reach];
                rot[R_SHOULDER] = [0.0, 0.0, reach];
                let lean = 0.25 * theta;
                rot[SPINE1] = [0.0, -lean * 0.5, 0.0];
                rot[SPINE2] = [0.0, -lean, 0.0];
            }
        }
        frames.push(Frame {
            rotations: rot,
            root_translation: root,
        });
    }
    let seq = MotionSequence::new(fps, frames)?;
    floor_calibrate(&seq, &template)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::signals::{derive_contact_mask, floor_calibrate};
    use crate::rotation::geodesic_angle_deg;
    use crate::skeleton::forward_kinematics;

    #[test]
    fn generation_is_deterministic() {
        for kind in MotionKind::ALL {
            let a = synth_generate(kind, 2.0, 60.0, 42).unwrap();
            let b = synth_generate(kind, 2.0, 60.0, 42).unwrap();
            assert_eq!(a, b, "kind {kind:?} not deterministic");
            let c = synth_generate(kind, 2.0, 60.0, 43).unwrap();
            assert_ne!(a, c, "kind {kind:?} ignores the seed");
        }
    }

    #[test]
    fn outputs_are_floor_calibrated() {
        let template = SkeletonTemplate::default_humanoid();
        for kind in MotionKind::ALL {
            let seq = synth_generate(kind, 2.0, 60.0, 7).unwrap();
            let again = floor_calibrate(&seq, &template).unwrap();
            for (a, b) in seq.frames.iter().zip(again.frames.iter()) {
                assert!((a.root_translation[2] - b.root_translation[2]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn idle_sway_is_slow() {
        // Generator-parameter bound: every joint turns slower than
        // 0.5 rad/s, measured as per-frame geodesic deltas.
        let seq = synth_generate(MotionKind::IdleSway, 3.0, 60.0, 11).unwrap();
        let pose = seq.to_local_pose();
        let mut max_speed: f64 = 0.0;
        for f in 1..seq.len() {
            for j in 0..JOINT_COUNT {
                let deg = geodesic_angle_deg(pose.get(f - 1, j), pose.get(f, j));
                max_speed = max_speed.max(deg.to_radians() * seq.fps);
            }
        }
        assert!(max_speed < 0.5, "idle sway too fast: {max_speed} rad/s");
    }

    #[test]
    fn walk_cycle_contacts_alternate() {
        let template = SkeletonTemplate::default_humanoid();
        let seq = synth_generate(MotionKind::WalkCycle, 4.0, 60.0, 3).unwrap();
        let mask = derive_contact_mask(&seq, &template).unwrap();
        // Feet order in the mask: [L ankle, R ankle, L foot, R foot].
        let mut phases: Vec<char> = Vec::new();
        for f in 0..mask.frames {
            let left = mask.get(f, 0) == 1 || mask.get(f, 2) == 1;
            let right = mask.get(f, 1) == 1 || mask.get(f, 3) == 1;
            let c = match (left, right) {
                (true, false) => 'L',
                (false, true) => 'R',
                (true, true) => 'B',
                (false, false) => 'N',
            };
            if phases.last() != Some(&c) {
                phases.push(c);
            }
        }
        // Single-support phases must exist and strictly alternate L/R.
        let singles: Vec<char> = phases.iter().copied().filter(|&c| c == 'L' || c == 'R').collect();
        assert!(singles.len() >= 4, "too few support phases: {phases:?}");
        for pair in singles.windows(2) {
            assert_ne!(pair[0], pair[1], "same-side support twice: {phases:?}");
        }
        // Every frame keeps at least one support during walking... except a
        // brief swing overlap is not expected at 40% swing duty.
        assert!(
            !phases.contains(&'N'),
            "flight phase in a walk: {phases:?}"
        );
    }

    #[test]
    fn squat_feet_stay_grounded() {
        let template = SkeletonTemplate::default_humanoid();
        let seq = synth_generate(MotionKind::Squat, 3.0, 60.0, 19).unwrap();
        let pose = seq.to_local_pose();
        let gm = forward_kinematics(&pose, &template, &seq.root_translations()).unwrap();
        for f in 0..seq.len() {
            for &joint in &[L_ANKLE, R_ANKLE] {
                let z = gm.position(f, joint)[2];
                // Ankles hold a near-constant height while the pelvis drops.
                let z0 = gm.position(0, joint)[2];
                assert!((z - z0).abs() < 1e-6, "ankle drifted: {z} vs {z0}");
            }
        }
        // The squat actually goes down.
        let min_root = seq
            .frames
            .iter()
            .map(|fr| fr.root_translation[2])
            .fold(f64::INFINITY, f64::min);
        let max_root = seq
            .frames
            .iter()
            .map(|fr| fr.root_translation[2])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max_root - min_root > 0.05, "squat too shallow");
    }

    #[test]
    fn bad_arguments_error() {
        assert!(matches!(
            synth_generate(MotionKind::Squat, 0.01, 60.0, 1),
            Err(DataError::InvalidArg(_))
        ));
        assert!(matches!(
            "moonwalk".parse::<MotionKind>(),
            Err(DataError::UnknownKind(_))
        ));
    }
}
