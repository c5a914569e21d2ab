//! Uniform sampling of fixed-length training windows over a dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::signals::{
    contact_mask_from_motion, derive_signals_from_motion, ContactMask, ContactParams,
    TrackingSignals,
};
use crate::data::{DataError, MotionSequence};
use crate::skeleton::{forward_kinematics, GlobalMotion, LocalPose, SkeletonTemplate, JOINT_COUNT};

/// Draws (sequence, start) pairs uniformly; deterministic given the seed.
pub struct WindowSampler {
    lens: Vec<usize>,
    window: usize,
    rng: ChaCha8Rng,
}

impl WindowSampler {
    pub fn new(lens: &[usize], window: usize, seed: u64) -> Result<Self, DataError> {
        if lens.is_empty() {
            return Err(DataError::InvalidArg("empty dataset".into()));
        }
        for &len in lens {
            if len < window {
                return Err(DataError::SequenceTooShort { len, window });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0xDA7A);
        Ok(WindowSampler {
            lens: lens.to_vec(),
            window,
            rng,
        })
    }

    pub fn sample(&mut self) -> (usize, usize) {
        let seq = self.rng.gen_range(0..self.lens.len());
        let start = self.rng.gen_range(0..=self.lens[seq] - self.window);
        (seq, start)
    }

    pub fn sample_batch(&mut self, batch: usize) -> Vec<(usize, usize)> {
        (0..batch).map(|_| self.sample()).collect()
    }
}

/// One training window: tail-aligned tracking signals plus the ground truth
/// needed by the losses, all of length `t`.
#[derive(Clone, Debug)]
pub struct TrainingWindow {
    pub seq_index: usize,
    pub start: usize,
    pub signals: TrackingSignals,
    pub pose: LocalPose,
    pub motion: GlobalMotion,
    pub contact: ContactMask,
}

/// Infinite stream of window batches. Signals, FK, and contact masks are
/// derived once per sequence and sliced per window, so a window's first
/// frame keeps the velocity computed against the preceding sequence frame.
pub struct WindowBatches {
    sampler: WindowSampler,
    batch: usize,
    window: usize,
    signals: Vec<TrackingSignals>,
    poses: Vec<LocalPose>,
    motions: Vec<GlobalMotion>,
    contacts: Vec<ContactMask>,
}

pub fn window_batches(
    dataset: &[MotionSequence],
    template: &SkeletonTemplate,
    window: usize,
    batch: usize,
    seed: u64,
) -> Result<WindowBatches, DataError> {
    let lens: Vec<usize> = dataset.iter().map(|s| s.len()).collect();
    let sampler = WindowSampler::new(&lens, window, seed)?;
    let mut signals = Vec::with_capacity(dataset.len());
    let mut poses = Vec::with_capacity(dataset.len());
    let mut motions = Vec::with_capacity(dataset.len());
    let mut contacts = Vec::with_capacity(dataset.len());
    for seq in dataset {
        let pose = seq.to_local_pose();
        let gm = forward_kinematics(&pose, template, &seq.root_translations())?;
        signals.push(derive_signals_from_motion(&gm)?);
        contacts.push(contact_mask_from_motion(&gm, ContactParams::default()));
        poses.push(pose);
        motions.push(gm);
    }
    Ok(WindowBatches {
        sampler,
        batch,
        window,
        signals,
        poses,
        motions,
        contacts,
    })
}

impl WindowBatches {
    fn cut(&self, seq: usize, start: usize) -> TrainingWindow {
        let t = self.window;
        let pose_src = &self.poses[seq];
        let mut pose = LocalPose::identity(t);
        for f in 0..t {
            for j in 0..JOINT_COUNT {
                pose.set(f, j, *pose_src.get(start + f, j));
            }
        }
        let gm = &self.motions[seq];
        let motion = GlobalMotion {
            frames: t,
            positions: gm.positions[start * JOINT_COUNT..(start + t) * JOINT_COUNT].to_vec(),
            rotations: gm.rotations[start * JOINT_COUNT..(start + t) * JOINT_COUNT].to_vec(),
        };
        TrainingWindow {
            seq_index: seq,
            start,
            signals: self.signals[seq].window(start, t),
            pose,
            motion,
            contact: self.contacts[seq].window(start, t),
        }
    }
}

impl Iterator for WindowBatches {
    type Item = Vec<TrainingWindow>;

    fn next(&mut self) -> Option<Self::Item> {
        let picks = self.sampler.sample_batch(self.batch);
        Some(picks.into_iter().map(|(s, st)| self.cut(s, st)).collect())
    }
}
