//! Sliding-window streaming inference: a rolling buffer of signal frames,
//! full-window prediction, and per-frame emission of the last frame's pose
//! with global translation recovered by head alignment.

use std::collections::VecDeque;

use crate::data::signals::{TrackingSignals, SIGNAL_WIDTH};
use crate::data::{Frame, MotionSequence};
use crate::model::{PoseModel, WindowInput};
use crate::rotation::{matrix_to_axis_angle, sixd_to_matrix, AxisAngle, Rot6D, RotMatrix};
use crate::runtime::RuntimeError;
use crate::skeleton::{
    forward_kinematics, LocalPose, SkeletonTemplate, HEAD, JOINT_COUNT, ROOT,
};

/// One emitted prediction frame.
#[derive(Clone, Debug)]
pub struct StreamFrame {
    /// Raw 22 x 6 pose output for the emitted (last) window frame.
    pub theta_sixd: Vec<f64>,
    /// Local joint rotations recovered from the 6D output.
    pub rotations: Vec<AxisAngle>,
    /// Pelvis position after aligning the predicted head to the observed
    /// head position.
    pub root_translation: [f64; 3],
    /// Global root orientation (joint 0's rotation).
    pub root_orientation: RotMatrix,
}

/// Causal streaming predictor: one output frame per input frame, using the
/// current frame and the previous context frames. Until the buffer fills,
/// the window is left-padded by repeating the oldest retained observation.
pub struct StreamPredictor<'m> {
    model: &'m PoseModel<f32>,
    template: &'m SkeletonTemplate,
    context: usize,
    buffer: VecDeque<Vec<f64>>,
}

impl<'m> StreamPredictor<'m> {
    /// `context` limits how many real frames feed each prediction
    /// (default: the model's full window length).
    pub fn new(
        model: &'m PoseModel<f32>,
        template: &'m SkeletonTemplate,
        context: Option<usize>,
    ) -> Result<Self, RuntimeError> {
        let t = model.config.window;
        let context = context.unwrap_or(t);
        if context == 0 || context > t {
            return Err(RuntimeError::Schema(format!(
                "context window {context} must be in 1..={t}"
            )));
        }
        Ok(StreamPredictor {
            model,
            template,
            context,
            buffer: VecDeque::with_capacity(context),
        })
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
    }

    /// Feeds one 54-wide observation row and emits the prediction for it.
    pub fn push(&mut self, row: &[f64]) -> Result<StreamFrame, RuntimeError> {
        if row.len() != SIGNAL_WIDTH {
            return Err(RuntimeError::Schema(format!(
                "signal row has {} values, expected {SIGNAL_WIDTH}",
                row.len()
            )));
        }
        if self.buffer.len() == self.context {
            self.buffer.pop_front();
        }
        self.buffer.push_back(row.to_vec());

        let t = self.model.config.window;
        let mut data = Vec::with_capacity(t * SIGNAL_WIDTH);
        let oldest = self.buffer.front().expect("buffer nonempty");
        for _ in 0..t - self.buffer.len() {
            data.extend_from_slice(oldest);
        }
        for frame in &self.buffer {
            data.extend_from_slice(frame);
        }
        let signals = TrackingSignals::new(t, data);
        let input = WindowInput::<f32>::from_signals(&signals)?;
        let (_, theta) = self.model.full_forward(&input, self.template)?;

        // Last frame of the window is the current frame's prediction.
        let start = (t - 1) * JOINT_COUNT * 6;
        let theta_sixd: Vec<f64> = theta.data()[start..start + JOINT_COUNT * 6]
            .iter()
            .map(|&v| v as f64)
            .collect();
        let mut pose = LocalPose::identity(1);
        let mut rotations = Vec::with_capacity(JOINT_COUNT);
        for j in 0..JOINT_COUNT {
            let mut sixd = [0.0; 6];
            sixd.copy_from_slice(&theta_sixd[j * 6..j * 6 + 6]);
            let m = sixd_to_matrix(&Rot6D(sixd))?;
            rotations.push(matrix_to_axis_angle(&m));
            pose.set(0, j, m);
        }
        // Root-free FK, then align the predicted head onto the observed
        // head position; the aligned pelvis is the root translation.
        let gm = forward_kinematics(&pose, self.template, &[[0.0; 3]])?;
        let fk_head = gm.position(0, HEAD);
        let obs_head = &row[12..15];
        let shift = [
            obs_head[0] - fk_head[0],
            obs_head[1] - fk_head[1],
            obs_head[2] - fk_head[2],
        ];
        let pelvis = gm.position(0, ROOT);
        Ok(StreamFrame {
            theta_sixd,
            rotations,
            root_translation: [
                pelvis[0] + shift[0],
                pelvis[1] + shift[1],
                pelvis[2] + shift[2],
            ],
            root_orientation: *gm.rotation(0, ROOT),
        })
    }
}

/// Streams a full signal sequence through the predictor and assembles the
/// predicted motion. Latency is exactly one input frame.
pub fn infer_sequence(
    model: &PoseModel<f32>,
    template: &SkeletonTemplate,
    signals: &TrackingSignals,
    fps: f64,
    context: Option<usize>,
) -> Result<MotionSequence, RuntimeError> {
    let mut predictor = StreamPredictor::new(model, template, context)?;
    let mut frames = Vec::with_capacity(signals.frames);
    for f in 0..signals.frames {
        let out = predictor.push(signals.row(f))?;
        frames.push(Frame {
            rotations: out.rotations.iter().map(|r| r.0).collect(),
            root_translation: out.root_translation,
        });
    }
    Ok(MotionSequence::new(fps, frames)?)
}
