//! Per-sequence precomputation shared by training and evaluation: tracking
//! signals, ground-truth tensors, and contact masks, sliced per window.

use crate::data::signals::{
    contact_mask_from_motion, derive_signals_from_motion, ContactMask, ContactParams,
    TrackingSignals,
};
use crate::data::MotionSequence;
use crate::loss::WindowTarget;
use crate::model::WindowInput;
use crate::nn::tensor::Tensor;
use crate::real::Real;
use crate::rotation::matrix_to_sixd;
use crate::runtime::RuntimeError;
use crate::skeleton::{forward_kinematics, SkeletonTemplate, HEAD, JOINT_COUNT};

pub struct PreparedSequence {
    pub frames: usize,
    pub signals: TrackingSignals,
    pub contact: ContactMask,
    theta: Vec<f64>,     // t x 22 x 6 local rotations as 6D
    local_pos: Vec<f64>, // t x 22 x 3 root-free FK
    headrel: Vec<f64>,   // t x 22 x 3 head-relative FK
    global: Vec<f64>,    // t x 22 x 3 global FK
    obs_head: Vec<f64>,  // t x 3 global head
}

impl PreparedSequence {
    pub fn from_motion(
        seq: &MotionSequence,
        template: &SkeletonTemplate,
    ) -> Result<Self, RuntimeError> {
        let t = seq.len();
        let pose = seq.to_local_pose();
        let gm = forward_kinematics(&pose, template, &seq.root_translations())?;
        let local = forward_kinematics(&pose, template, &vec![[0.0; 3]; t])?;
        let signals = derive_signals_from_motion(&gm)?;
        let contact = contact_mask_from_motion(&gm, ContactParams::default());

        let mut theta = Vec::with_capacity(t * JOINT_COUNT * 6);
        let mut local_pos = Vec::with_capacity(t * JOINT_COUNT * 3);
        let mut headrel = Vec::with_capacity(t * JOINT_COUNT * 3);
        let mut global = Vec::with_capacity(t * JOINT_COUNT * 3);
        let mut obs_head = Vec::with_capacity(t * 3);
        for f in 0..t {
            for j in 0..JOINT_COUNT {
                theta.extend(matrix_to_sixd(pose.get(f, j))?.0);
            }
            let head = *local.position(f, HEAD);
            for j in 0..JOINT_COUNT {
                let p = local.position(f, j);
                local_pos.extend(*p);
                headrel.extend([p[0] - head[0], p[1] - head[1], p[2] - head[2]]);
            }
            for j in 0..JOINT_COUNT {
                global.extend(*gm.position(f, j));
            }
            obs_head.extend(*gm.position(f, HEAD));
        }
        Ok(PreparedSequence {
            frames: t,
            signals,
            contact,
            theta,
            local_pos,
            headrel,
            global,
            obs_head,
        })
    }

    /// Network input for the window `[start, start + t)`.
    pub fn input_window<T: Real>(&self, start: usize, t: usize) -> Result<WindowInput<T>, RuntimeError> {
        let sliced = self.signals.window(start, t);
        Ok(WindowInput::from_signals(&sliced)?)
    }

    /// Loss targets for the window `[start, start + t)`.
    pub fn target_window<T: Real>(&self, start: usize, t: usize) -> Result<WindowTarget<T>, RuntimeError> {
        let cut3 = |src: &[f64], width: usize| -> Vec<f64> {
            src[start * width..(start + t) * width].to_vec()
        };
        let contact: Vec<f64> = (0..t)
            .flat_map(|f| {
                self.contact
                    .row(start + f)
                    .iter()
                    .map(|&m| m as f64)
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(WindowTarget {
            theta: Tensor::from_f64(vec![t, JOINT_COUNT, 6], &cut3(&self.theta, JOINT_COUNT * 6))
                .map_err(RuntimeError::Nn)?,
            local_pos: Tensor::from_f64(
                vec![t, JOINT_COUNT, 3],
                &cut3(&self.local_pos, JOINT_COUNT * 3),
            )
            .map_err(RuntimeError::Nn)?,
            headrel_pos: Tensor::from_f64(
                vec![t, JOINT_COUNT, 3],
                &cut3(&self.headrel, JOINT_COUNT * 3),
            )
            .map_err(RuntimeError::Nn)?,
            global_pos: Tensor::from_f64(
                vec![t, JOINT_COUNT, 3],
                &cut3(&self.global, JOINT_COUNT * 3),
            )
            .map_err(RuntimeError::Nn)?,
            obs_head: Tensor::from_f64(vec![t, 3], &cut3(&self.obs_head, 3))
                .map_err(RuntimeError::Nn)?,
            contact: Tensor::from_f64(vec![t, 4], &contact).map_err(RuntimeError::Nn)?,
        })
    }
}

pub struct PreparedDataset {
    pub sequences: Vec<PreparedSequence>,
}

impl PreparedDataset {
    pub fn prepare(
        dataset: &[MotionSequence],
        template: &SkeletonTemplate,
    ) -> Result<Self, RuntimeError> {
        let sequences = dataset
            .iter()
            .map(|s| PreparedSequence::from_motion(s, template))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PreparedDataset { sequences })
    }

    pub fn lens(&self) -> Vec<usize> {
        self.sequences.iter().map(|s| s.frames).collect()
    }
}
