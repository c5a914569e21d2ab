//! Evaluation metrics: rotation/position/velocity accuracy, jerk-based
//! smoothness, and ground/skate physical plausibility, with body-region
//! breakdowns.
//!
//! Units: MPJRE degrees, MPJPE/H-PE/U-PE/L-PE cm, MPJVE cm/s, Jitter
//! 10^2 m/s^3, Ground cm, Skate cm per contact frame.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::signals::{contact_mask_from_motion, ContactMask, ContactParams};
use crate::data::MotionSequence;
use crate::rotation::geodesic_angle_deg;
use crate::skeleton::{
    forward_kinematics, head_align, GlobalMotion, LocalPose, SkeletonTemplate, FEET_JOINTS, HEAD,
    JOINT_COUNT, LOWER_BODY, UPPER_BODY,
};

pub const HANDS: [usize; 2] = [20, 21];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: prediction has {pred} frames, ground truth {gt}")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("fps mismatch: prediction {pred}, ground truth {gt}")]
    FpsMismatch { pred: f64, gt: f64 },
    #[error("window too short: {t} frames, {needed} needed")]
    WindowTooShort { t: usize, needed: usize },
    #[error(transparent)]
    Skeleton(#[from] crate::skeleton::SkeletonError),
}

/// The nine evaluation metrics, keyed exactly as reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    #[serde(rename = "MPJRE")]
    pub mpjre: f64,
    #[serde(rename = "MPJPE")]
    pub mpjpe: f64,
    #[serde(rename = "MPJVE")]
    pub mpjve: f64,
    #[serde(rename = "Jitter")]
    pub jitter: f64,
    #[serde(rename = "Ground")]
    pub ground: f64,
    #[serde(rename = "Skate")]
    pub skate: f64,
    #[serde(rename = "H-PE")]
    pub h_pe: f64,
    #[serde(rename = "U-PE")]
    pub u_pe: f64,
    #[serde(rename = "L-PE")]
    pub l_pe: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: usize,
    /// Ground-truth contact events that gated the skate metric.
    pub contact_frames: usize,
    pub metrics: MetricValues,
}

/// Per-sequence reports plus the frame-weighted aggregate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub sequences: Vec<MetricsReport>,
    pub aggregate: MetricsReport,
}

#[inline]
fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Mean Euclidean position error over frames x subset joints, in cm.
pub fn mpjpe(
    pred: &[[f64; 3]],
    gt: &[[f64; 3]],
    frames: usize,
    subset: &[usize],
) -> Result<f64, MetricsError> {
    if pred.len() != gt.len() || pred.len() != frames * JOINT_COUNT {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let mut total = 0.0;
    for f in 0..frames {
        for &j in subset {
            total += dist(&pred[f * JOINT_COUNT + j], &gt[f * JOINT_COUNT + j]);
        }
    }
    Ok(total / (frames * subset.len()) as f64 * 100.0)
}

/// Mean geodesic angle between local rotations, in degrees.
pub fn mpjre(pred: &LocalPose, gt: &LocalPose) -> Result<f64, MetricsError> {
    if pred.frames != gt.frames {
        return Err(MetricsError::LengthMismatch {
            pred: pred.frames,
            gt: gt.frames,
        });
    }
    let mut total = 0.0;
    for f in 0..pred.frames {
        for j in 0..JOINT_COUNT {
            total += geodesic_angle_deg(pred.get(f, j), gt.get(f, j));
        }
    }
    Ok(total / (pred.frames * JOINT_COUNT) as f64)
}

/// Mean velocity error over frames x joints, in cm/s. Velocities are
/// per-frame differences scaled by fps.
pub fn mpjve(
    pred: &[[f64; 3]],
    gt: &[[f64; 3]],
    frames: usize,
    fps: f64,
) -> Result<f64, MetricsError> {
    if pred.len() != gt.len() || pred.len() != frames * JOINT_COUNT {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    if frames < 2 {
        return Err(MetricsError::WindowTooShort {
            t: frames,
            needed: 2,
        });
    }
    let mut total = 0.0;
    for f in 1..frames {
        for j in 0..JOINT_COUNT {
            let i = f * JOINT_COUNT + j;
            let k = (f - 1) * JOINT_COUNT + j;
            let dv = [
                (pred[i][0] - pred[k][0]) - (gt[i][0] - gt[k][0]),
                (pred[i][1] - pred[k][1]) - (gt[i][1] - gt[k][1]),
                (pred[i][2] - pred[k][2]) - (gt[i][2] - gt[k][2]),
            ];
            total += (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]).sqrt() * fps;
        }
    }
    Ok(total / ((frames - 1) * JOINT_COUNT) as f64 * 100.0)
}

/// Mean jerk of the predicted motion (third-order forward difference scaled
/// by fps^3), reported in units of 10^2 m/s^3.
pub fn jitter(pred: &[[f64; 3]], frames: usize, fps: f64) -> Result<f64, MetricsError> {
    if frames < 4 {
        return Err(MetricsError::WindowTooShort {
            t: frames,
            needed: 4,
        });
    }
    let mut total = 0.0;
    for f in 0..frames - 3 {
        for j in 0..JOINT_COUNT {
            let p0 = &pred[f * JOINT_COUNT + j];
            let p1 = &pred[(f + 1) * JOINT_COUNT + j];
            let p2 = &pred[(f + 2) * JOINT_COUNT + j];
            let p3 = &pred[(f + 3) * JOINT_COUNT + j];
            let mut norm2 = 0.0;
            for c in 0..3 {
                let d3 = p3[c] - 3.0 * p2[c] + 3.0 * p1[c] - p0[c];
                norm2 += d3 * d3;
            }
            total += norm2.sqrt() * fps * fps * fps;
        }
    }
    Ok(total / ((frames - 3) * JOINT_COUNT) as f64 / 100.0)
}

/// Mean absolute difference between the lowest predicted and lowest
/// ground-truth joint heights per frame, in cm.
pub fn ground_metric(
    pred: &[[f64; 3]],
    gt: &[[f64; 3]],
    frames: usize,
) -> Result<f64, MetricsError> {
    if pred.len() != gt.len() || pred.len() != frames * JOINT_COUNT {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let min_z = |pos: &[[f64; 3]], f: usize| -> f64 {
        (0..JOINT_COUNT)
            .map(|j| pos[f * JOINT_COUNT + j][2])
            .fold(f64::INFINITY, f64::min)
    };
    let mut total = 0.0;
    for f in 0..frames {
        total += (min_z(pred, f) - min_z(gt, f)).abs();
    }
    Ok(total / frames as f64 * 100.0)
}

/// Mean horizontal displacement of predicted feet across adjacent frames
/// during ground-truth contact, in cm per contact event. The frame-i mask
/// gates the (i, i+1) displacement. Returns the event count; zero events
/// yield a zero metric.
pub fn skate_metric(
    pred: &[[f64; 3]],
    contact: &ContactMask,
    frames: usize,
) -> Result<(f64, usize), MetricsError> {
    if pred.len() != frames * JOINT_COUNT || contact.frames != frames {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: contact.frames * JOINT_COUNT,
        });
    }
    if frames < 2 {
        return Err(MetricsError::WindowTooShort {
            t: frames,
            needed: 2,
        });
    }
    let mut total = 0.0;
    let mut events = 0usize;
    for f in 0..frames - 1 {
        for (i, &joint) in FEET_JOINTS.iter().enumerate() {
            if contact.get(f, i) == 0 {
                continue;
            }
            let a = &pred[f * JOINT_COUNT + joint];
            let b = &pred[(f + 1) * JOINT_COUNT + joint];
            total += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            events += 1;
        }
    }
    let value = if events == 0 { 0.0 } else { total / events as f64 * 100.0 };
    Ok((value, events))
}

/// Full evaluation of one prediction against its ground truth: FK on both,
/// head-aligns the prediction to the ground-truth head positions, derives
/// the ground-truth contact mask, and computes every metric.
pub fn evaluate_pair(
    pred: &MotionSequence,
    gt: &MotionSequence,
    template: &SkeletonTemplate,
) -> Result<MetricsReport, MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    if pred.fps != gt.fps {
        return Err(MetricsError::FpsMismatch {
            pred: pred.fps,
            gt: gt.fps,
        });
    }
    let frames = pred.len();
    let fps = gt.fps;
    let pred_pose = pred.to_local_pose();
    let gt_pose = gt.to_local_pose();
    let pred_gm = forward_kinematics(&pred_pose, template, &pred.root_translations())?;
    let gt_gm = forward_kinematics(&gt_pose, template, &gt.root_translations())?;
    let gt_heads: Vec<[f64; 3]> = (0..frames).map(|f| *gt_gm.position(f, HEAD)).collect();
    let aligned = head_align(&pred_gm.positions, &gt_heads);
    let contact = contact_mask_from_motion(&gt_gm, ContactParams::default());

    let full: Vec<usize> = (0..JOINT_COUNT).collect();
    let (skate, contact_frames) = skate_metric(&aligned, &contact, frames)?;
    let metrics = MetricValues {
        mpjre: mpjre(&pred_pose, &gt_pose)?,
        mpjpe: mpjpe(&aligned, &gt_gm.positions, frames, &full)?,
        mpjve: mpjve(&aligned, &gt_gm.positions, frames, fps)?,
        jitter: jitter(&aligned, frames, fps)?,
        ground: ground_metric(&aligned, &gt_gm.positions, frames)?,
        skate,
        h_pe: mpjpe(&aligned, &gt_gm.positions, frames, &HANDS)?,
        u_pe: mpjpe(&aligned, &gt_gm.positions, frames, &UPPER_BODY)?,
        l_pe: mpjpe(&aligned, &gt_gm.positions, frames, &LOWER_BODY)?,
    };
    Ok(MetricsReport {
        frames,
        contact_frames,
        metrics,
    })
}

/// Head-aligned global motion of a prediction against a ground truth;
/// exposed for tests and tooling.
pub fn aligned_prediction(
    pred: &MotionSequence,
    gt: &MotionSequence,
    template: &SkeletonTemplate,
) -> Result<(Vec<[f64; 3]>, GlobalMotion), MetricsError> {
    let pred_gm = forward_kinematics(&pred.to_local_pose(), template, &pred.root_translations())?;
    let gt_gm = forward_kinematics(&gt.to_local_pose(), template, &gt.root_translations())?;
    let heads: Vec<[f64; 3]> = (0..gt_gm.frames).map(|f| *gt_gm.position(f, HEAD)).collect();
    Ok((head_align(&pred_gm.positions, &heads), gt_gm))
}

/// Evaluates a set of prediction/ground-truth pairs and aggregates with
/// frame-count weights.
pub fn evaluate_set(
    pairs: &[(MotionSequence, MotionSequence)],
    template: &SkeletonTemplate,
) -> Result<EvaluationReport, MetricsError> {
    let mut sequences = Vec::with_capacity(pairs.len());
    for (pred, gt) in pairs {
        sequences.push(evaluate_pair(pred, gt, template)?);
    }
    let total_frames: usize = sequences.iter().map(|r| r.frames).sum();
    let mut agg = MetricValues::default();
    let mut contact_frames = 0usize;
    for r in &sequences {
        let w = r.frames as f64 / total_frames as f64;
        agg.mpjre += r.metrics.mpjre * w;
        agg.mpjpe += r.metrics.mpjpe * w;
        agg.mpjve += r.metrics.mpjve * w;
        agg.jitter += r.metrics.jitter * w;
        agg.ground += r.metrics.ground * w;
        agg.skate += r.metrics.skate * w;
        agg.h_pe += r.metrics.h_pe * w;
        agg.u_pe += r.metrics.u_pe * w;
        agg.l_pe += r.metrics.l_pe * w;
        contact_frames += r.contact_frames;
    }
    Ok(EvaluationReport {
        sequences,
        aggregate: MetricsReport {
            frames: total_frames,
            contact_frames,
            metrics: agg,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synth_generate, MotionKind};
    use crate::data::Frame;
    use crate::rotation::RotMatrix;

    fn static_positions(frames: usize, base: f64) -> Vec<[f64; 3]> {
        (0..frames * JOINT_COUNT)
            .map(|i| {
                let j = i % JOINT_COUNT;
                [j as f64 * 0.1, 0.0, base + j as f64 * 0.05]
            })
            .collect()
    }

    #[test]
    fn mpjpe_oracles() {
        let frames = 4;
        let gt = static_positions(frames, 0.5);
        let full: Vec<usize> = (0..JOINT_COUNT).collect();
        assert_eq!(mpjpe(&gt, &gt, frames, &full).unwrap(), 0.0);

        // Uniform 1 cm x-offset.
        let mut pred = gt.clone();
        for p in &mut pred {
            p[0] += 0.01;
        }
        assert!((mpjpe(&pred, &gt, frames, &full).unwrap() - 1.0).abs() < 1e-12);

        // Offset only on the wrists: full = 2/22 of the offset, H-PE = offset.
        let mut pred = gt.clone();
        for f in 0..frames {
            for &j in &HANDS {
                pred[f * JOINT_COUNT + j][1] += 0.03;
            }
        }
        let full_err = mpjpe(&pred, &gt, frames, &full).unwrap();
        let hand_err = mpjpe(&pred, &gt, frames, &HANDS).unwrap();
        assert!((hand_err - 3.0).abs() < 1e-12);
        assert!((full_err - 3.0 * 2.0 / 22.0).abs() < 1e-12);

        // Subset-consistency identity.
        let rest: Vec<usize> = (0..JOINT_COUNT).filter(|j| !HANDS.contains(j)).collect();
        let rest_err = mpjpe(&pred, &gt, frames, &rest).unwrap();
        let recomposed = (hand_err * HANDS.len() as f64 + rest_err * rest.len() as f64)
            / JOINT_COUNT as f64;
        assert!((full_err - recomposed).abs() < 1e-12);
    }

    #[test]
    fn mpjre_oracles() {
        let frames = 3;
        let gt = LocalPose::identity(frames);
        assert_eq!(mpjre(&gt, &gt).unwrap(), 0.0);

        // Every joint off by 10 degrees about z.
        let mut pred = LocalPose::identity(frames);
        for f in 0..frames {
            for j in 0..JOINT_COUNT {
                pred.set(f, j, RotMatrix::rot_z(10f64.to_radians()));
            }
        }
        assert!((mpjre(&pred, &gt).unwrap() - 10.0).abs() < 1e-9);

        // One joint of 22 off by 22 degrees: mean is exactly 1 degree.
        let mut pred = LocalPose::identity(frames);
        for f in 0..frames {
            pred.set(f, 5, RotMatrix::rot_x(22f64.to_radians()));
        }
        assert!((mpjre(&pred, &gt).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mpjve_oracles() {
        let frames = 5;
        let gt: Vec<[f64; 3]> = (0..frames * JOINT_COUNT)
            .map(|i| [(i / JOINT_COUNT) as f64 * 0.01, 0.0, 1.0])
            .collect();
        assert_eq!(mpjve(&gt, &gt, frames, 60.0).unwrap(), 0.0);

        // Constant offset has equal velocities.
        let mut off = gt.clone();
        for p in &mut off {
            p[1] += 0.3;
        }
        assert!(mpjve(&off, &gt, frames, 60.0).unwrap() < 1e-9);

        // Static prediction against 1 cm/frame at 60 fps: 60 cm/s.
        let pred = vec![[0.0, 0.0, 1.0]; frames * JOINT_COUNT];
        assert!((mpjve(&pred, &gt, frames, 60.0).unwrap() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn jitter_oracles() {
        let frames = 8;
        let fps = 60.0;
        // Constant velocity: zero jerk.
        let lin: Vec<[f64; 3]> = (0..frames * JOINT_COUNT)
            .map(|i| [(i / JOINT_COUNT) as f64 * 0.02, 0.0, 0.0])
            .collect();
        assert!(jitter(&lin, frames, fps).unwrap() < 1e-12);
        // Constant acceleration: zero jerk.
        let quad: Vec<[f64; 3]> = (0..frames * JOINT_COUNT)
            .map(|i| {
                let f = (i / JOINT_COUNT) as f64;
                [0.001 * f * f, 0.0, 0.0]
            })
            .collect();
        assert!(jitter(&quad, frames, fps).unwrap() < 1e-9);
        // Cubic c*i^3: third difference is exactly 6c per frame step.
        let c = 1e-6;
        let cubic: Vec<[f64; 3]> = (0..frames * JOINT_COUNT)
            .map(|i| {
                let f = (i / JOINT_COUNT) as f64;
                [c * f * f * f, 0.0, 0.0]
            })
            .collect();
        let expect = 6.0 * c * fps * fps * fps / 100.0;
        assert!((jitter(&cubic, frames, fps).unwrap() - expect).abs() < 1e-9);

        assert!(matches!(
            jitter(&lin[..3 * JOINT_COUNT], 3, fps),
            Err(MetricsError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn ground_oracles() {
        let frames = 3;
        let gt = static_positions(frames, 0.0);
        assert_eq!(ground_metric(&gt, &gt, frames).unwrap(), 0.0);
        let mut float = gt.clone();
        for p in &mut float {
            p[2] += 0.03;
        }
        assert!((ground_metric(&float, &gt, frames).unwrap() - 3.0).abs() < 1e-12);
        let mut sink = gt.clone();
        for f in 0..frames {
            sink[f * JOINT_COUNT][2] = -0.02; // lowest joint dips below zero
        }
        assert!((ground_metric(&sink, &gt, frames).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn skate_oracles() {
        let frames = 5;
        let still = static_positions(frames, 0.0);
        let ones = ContactMask::new(frames, vec![1; frames * 4]);
        let (v, events) = skate_metric(&still, &ones, frames).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(events, (frames - 1) * 4);

        // Grounded foot drifting 1 cm/frame in x.
        let mut drift = still.clone();
        for f in 0..frames {
            for &j in &FEET_JOINTS {
                drift[f * JOINT_COUNT + j][0] += 0.01 * f as f64;
            }
        }
        let (v, _) = skate_metric(&drift, &ones, frames).unwrap();
        assert!((v - 1.0).abs() < 1e-9);

        // Empty mask: zero with a zero event count.
        let zeros = ContactMask::new(frames, vec![0; frames * 4]);
        let (v, events) = skate_metric(&drift, &zeros, frames).unwrap();
        assert_eq!((v, events), (0.0, 0));
    }

    #[test]
    fn evaluate_pair_perfect_and_deterministic() {
        let template = SkeletonTemplate::default_humanoid();
        let gt = synth_generate(MotionKind::WalkCycle, 1.0, 60.0, 21).unwrap();
        let report = evaluate_pair(&gt, &gt, &template).unwrap();
        assert_eq!(report.frames, 60);
        let m = report.metrics;
        for v in [m.mpjre, m.mpjpe, m.mpjve, m.ground, m.skate, m.h_pe, m.u_pe, m.l_pe] {
            assert!(v.abs() < 1e-9, "nonzero metric for identical motions: {m:?}");
        }
        // Jitter is a property of the prediction, not an error: nonzero for
        // a moving sequence.
        assert!(m.jitter >= 0.0);

        let again = evaluate_pair(&gt, &gt, &template).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn evaluate_pair_validates_inputs() {
        let template = SkeletonTemplate::default_humanoid();
        let gt = synth_generate(MotionKind::IdleSway, 1.0, 60.0, 3).unwrap();
        let short = gt.window(0, 30);
        assert!(matches!(
            evaluate_pair(&short, &gt, &template),
            Err(MetricsError::LengthMismatch { .. })
        ));
        let mut refps = gt.clone();
        refps.fps = 30.0;
        assert!(matches!(
            evaluate_pair(&refps, &gt, &template),
            Err(MetricsError::FpsMismatch { .. })
        ));
    }

    #[test]
    fn report_serializes_the_exact_metric_set() {
        let report = MetricsReport::default();
        let json = serde_json::to_value(&report).unwrap();
        let keys: std::collections::BTreeSet<String> = json["metrics"]
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        let expect: std::collections::BTreeSet<String> = [
            "MPJRE", "MPJPE", "MPJVE", "Jitter", "Ground", "Skate", "H-PE", "U-PE", "L-PE",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(keys, expect);
    }

    #[test]
    fn aggregate_weights_by_frame_count() {
        let template = SkeletonTemplate::default_humanoid();
        let a = synth_generate(MotionKind::IdleSway, 1.0, 60.0, 4).unwrap();
        let b = synth_generate(MotionKind::ArmWave, 2.0, 60.0, 5).unwrap();
        // Predictions: slightly perturbed roots.
        let perturb = |seq: &MotionSequence, dx: f64| -> MotionSequence {
            let frames: Vec<Frame> = seq
                .frames
                .iter()
                .map(|f| {
                    let mut fr = f.clone();
                    fr.root_translation[0] += dx;
                    fr
                })
                .collect();
            MotionSequence::new(seq.fps, frames).unwrap()
        };
        let pa = perturb(&a, 0.01);
        let pb = perturb(&b, 0.02);
        let report = evaluate_set(
            &[(pa.clone(), a.clone()), (pb.clone(), b.clone())],
            &template,
        )
        .unwrap();
        let ra = evaluate_pair(&pa, &a, &template).unwrap();
        let rb = evaluate_pair(&pb, &b, &template).unwrap();
        let wa = ra.frames as f64 / (ra.frames + rb.frames) as f64;
        let wb = 1.0 - wa;
        let expect = ra.metrics.mpjpe * wa + rb.metrics.mpjpe * wb;
        assert!((report.aggregate.metrics.mpjpe - expect).abs() < 1e-12);
        assert_eq!(report.aggregate.frames, ra.frames + rb.frames);
        assert_eq!(report.sequences.len(), 2);
    }

    #[test]
    fn metrics_invariant_to_rigid_xy_translation() {
        let template = SkeletonTemplate::default_humanoid();
        let gt = synth_generate(MotionKind::WalkCycle, 1.0, 60.0, 9).unwrap();
        let pred = {
            let mut p = gt.clone();
            for f in &mut p.frames {
                f.rotations[3][0] += 0.05; // a real pose error
            }
            p
        };
        let base = evaluate_pair(&pred, &gt, &template).unwrap();
        let shift = |seq: &MotionSequence| -> MotionSequence {
            let mut s = seq.clone();
            for f in &mut s.frames {
                f.root_translation[0] += 1.7;
                f.root_translation[1] -= 0.4;
            }
            s
        };
        let shifted = evaluate_pair(&shift(&pred), &shift(&gt), &template).unwrap();
        let (a, b) = (base.metrics, shifted.metrics);
        for (x, y) in [
            (a.mpjre, b.mpjre),
            (a.mpjpe, b.mpjpe),
            (a.mpjve, b.mpjve),
            (a.jitter, b.jitter),
            (a.ground, b.ground),
            (a.skate, b.skate),
        ] {
            assert!((x - y).abs() < 1e-9, "metric changed under translation");
        }
    }
}
