//! Training losses: stage-1, orientation/rotation/position L1 terms, hand
//! alignment after head alignment, multi-lag velocity and foot-contact
//! motion terms, and the ground penetration / foot height physical terms,
//! combined with fixed scale-balancing weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ForwardVars;
use crate::nn::graph::{Graph, Var};
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::{real, Real};
use crate::rotation::matrix_to_sixd;
use crate::skeleton::{
    forward_kinematics, GlobalMotion, LocalPose, SkeletonTemplate, HEAD, JOINT_COUNT,
};
use crate::data::signals::ContactMask;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("window too short: {t} frames for velocity lag {lag}")]
    WindowTooShort { t: usize, lag: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Loss-combination weights; defaults balance the term scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Foot-height weight inside the physical term.
    pub alpha: f64,
    /// Body orientation.
    pub beta: f64,
    /// Joint rotations.
    pub gamma: f64,
    /// Joint positions.
    pub delta: f64,
    /// Hand alignment.
    pub epsilon: f64,
    /// Motion term.
    pub zeta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 0.5,
            beta: 0.02,
            gamma: 2.0,
            delta: 5.0,
            epsilon: 5.0,
            zeta: 50.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        let all = [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.zeta,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(LossError::Nn(NnError::Graph(format!(
                "loss weights must be non-negative and finite: {all:?}"
            ))));
        }
        Ok(())
    }
}

/// Per-term switches for the ablation harness. A disabled term is excluded
/// from the total and reported as exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossToggles {
    pub hand: bool,
    pub velocity_short: bool,
    pub velocity_long: bool,
    pub foot_contact: bool,
    pub penetration: bool,
    pub foot_height: bool,
}

impl Default for LossToggles {
    fn default() -> Self {
        LossToggles {
            hand: true,
            velocity_short: true,
            velocity_long: true,
            foot_contact: true,
            penetration: true,
            foot_height: true,
        }
    }
}

impl LossToggles {
    pub fn basic_only() -> Self {
        LossToggles {
            hand: false,
            velocity_short: false,
            velocity_long: false,
            foot_contact: false,
            penetration: false,
            foot_height: false,
        }
    }

    pub fn without_motion(mut self) -> Self {
        self.velocity_short = false;
        self.velocity_long = false;
        self.foot_contact = false;
        self
    }

    pub fn without_physical(mut self) -> Self {
        self.penetration = false;
        self.foot_height = false;
        self
    }

    pub fn without_hand(mut self) -> Self {
        self.hand = false;
        self
    }
}

/// Named per-term loss values for one step or window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_first: f64,
    pub l_ori: f64,
    pub l_rot: f64,
    pub l_pos: f64,
    pub l_hand: f64,
    pub l_v1: f64,
    pub l_v3: f64,
    pub l_v5: f64,
    pub l_fc: f64,
    pub l_p: f64,
    pub l_fh: f64,
    pub total: f64,
}

impl LossReport {
    pub fn is_finite(&self) -> bool {
        [
            self.l_first,
            self.l_ori,
            self.l_rot,
            self.l_pos,
            self.l_hand,
            self.l_v1,
            self.l_v3,
            self.l_v5,
            self.l_fc,
            self.l_p,
            self.l_fh,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Ground-truth tensors for one training window.
#[derive(Clone, Debug)]
pub struct WindowTarget<T: Real> {
    /// (t, 22, 6) local rotations in 6D.
    pub theta: Tensor<T>,
    /// (t, 22, 3) root-free FK positions.
    pub local_pos: Tensor<T>,
    /// (t, 22, 3) head-relative positions.
    pub headrel_pos: Tensor<T>,
    /// (t, 22, 3) global positions.
    pub global_pos: Tensor<T>,
    /// (t, 3) observed head positions (global head).
    pub obs_head: Tensor<T>,
    /// (t, 4) feet contact mask.
    pub contact: Tensor<T>,
}

impl<T: Real> WindowTarget<T> {
    /// Precomputes every ground-truth quantity the losses consume.
    pub fn from_ground_truth(
        pose: &LocalPose,
        motion: &GlobalMotion,
        contact: &ContactMask,
        template: &SkeletonTemplate,
    ) -> Result<Self, LossError> {
        let t = pose.frames;
        assert_eq!(motion.frames, t);
        assert_eq!(contact.frames, t);
        let mut theta = Vec::with_capacity(t * JOINT_COUNT * 6);
        for f in 0..t {
            for j in 0..JOINT_COUNT {
                let sixd = matrix_to_sixd(pose.get(f, j))
                    .map_err(|e| LossError::Nn(NnError::Graph(e.to_string())))?;
                theta.extend(sixd.0.iter().map(|&v| T::from_f64(v)));
            }
        }
        let local = forward_kinematics(pose, template, &vec![[0.0; 3]; t])
            .map_err(|e| LossError::Nn(NnError::Graph(e.to_string())))?;
        let mut local_pos = Vec::with_capacity(t * JOINT_COUNT * 3);
        let mut headrel = Vec::with_capacity(t * JOINT_COUNT * 3);
        for f in 0..t {
            let head = *local.position(f, HEAD);
            for j in 0..JOINT_COUNT {
                let p = local.position(f, j);
                local_pos.extend([T::from_f64(p[0]), T::from_f64(p[1]), T::from_f64(p[2])]);
                headrel.extend([
                    T::from_f64(p[0] - head[0]),
                    T::from_f64(p[1] - head[1]),
                    T::from_f64(p[2] - head[2]),
                ]);
            }
        }
        let mut global_pos = Vec::with_capacity(t * JOINT_COUNT * 3);
        let mut obs_head = Vec::with_capacity(t * 3);
        for f in 0..t {
            for j in 0..JOINT_COUNT {
                let p = motion.position(f, j);
                global_pos.extend([T::from_f64(p[0]), T::from_f64(p[1]), T::from_f64(p[2])]);
            }
            let h = motion.position(f, HEAD);
            obs_head.extend([T::from_f64(h[0]), T::from_f64(h[1]), T::from_f64(h[2])]);
        }
        let contact_data: Vec<T> = contact.data().iter().map(|&m| real(m as f64)).collect();
        Ok(WindowTarget {
            theta: Tensor::new(vec![t, JOINT_COUNT, 6], theta).map_err(LossError::Nn)?,
            local_pos: Tensor::new(vec![t, JOINT_COUNT, 3], local_pos).map_err(LossError::Nn)?,
            headrel_pos: Tensor::new(vec![t, JOINT_COUNT, 3], headrel).map_err(LossError::Nn)?,
            global_pos: Tensor::new(vec![t, JOINT_COUNT, 3], global_pos).map_err(LossError::Nn)?,
            obs_head: Tensor::new(vec![t, 3], obs_head).map_err(LossError::Nn)?,
            contact: Tensor::new(vec![t, 4], contact_data).map_err(LossError::Nn)?,
        })
    }

    pub fn frames(&self) -> usize {
        self.theta.shape()[0]
    }
}

/// Graph handles for every enabled loss term.
pub struct LossGraph {
    pub l_first: Var,
    pub l_ori: Var,
    pub l_rot: Var,
    pub l_pos: Var,
    pub l_hand: Option<Var>,
    pub l_v1: Option<Var>,
    pub l_v3: Option<Var>,
    pub l_v5: Option<Var>,
    pub l_fc: Option<Var>,
    pub l_p: Option<Var>,
    pub l_fh: Option<Var>,
    pub total: Var,
}

impl LossGraph {
    pub fn report<T: Real>(&self, g: &Graph<T>) -> LossReport {
        let read = |v: Option<Var>| v.map(|v| g.scalar_value(v)).unwrap_or(0.0);
        LossReport {
            l_first: g.scalar_value(self.l_first),
            l_ori: g.scalar_value(self.l_ori),
            l_rot: g.scalar_value(self.l_rot),
            l_pos: g.scalar_value(self.l_pos),
            l_hand: read(self.l_hand),
            l_v1: read(self.l_v1),
            l_v3: read(self.l_v3),
            l_v5: read(self.l_v5),
            l_fc: read(self.l_fc),
            l_p: read(self.l_p),
            l_fh: read(self.l_fh),
            total: g.scalar_value(self.total),
        }
    }
}

/// Mean absolute difference over every element of two same-shaped nodes.
fn l1_mean<T: Real>(g: &mut Graph<T>, a: Var, b: Var) -> Result<Var, NnError> {
    let d = g.sub(a, b)?;
    g.mean_abs(d)
}

/// Basic terms: stage-1 loss, root orientation, joint rotations, and
/// root-free joint positions.
///
/// `p_local` is the root-free FK of the final pose; `p_init_headrel` the
/// head-relative FK of the stage-1 pose.
pub fn basic_losses<T: Real>(
    g: &mut Graph<T>,
    theta_init: Var,
    theta: Var,
    p_local: Var,
    p_init_headrel: Var,
    target: &WindowTarget<T>,
) -> Result<(Var, Var, Var, Var), NnError> {
    let gt_theta = g.constant(target.theta.clone());
    let gt_local = g.constant(target.local_pos.clone());
    let gt_headrel = g.constant(target.headrel_pos.clone());

    // Stage-1: pose parameters plus the head-relative positions.
    let param_term = l1_mean(g, theta_init, gt_theta)?;
    let pos_term = l1_mean(g, p_init_headrel, gt_headrel)?;
    let l_first = g.weighted_sum(&[(param_term, T::one()), (pos_term, T::one())])?;

    // Root orientation is joint 0's 6 values; rotations are the rest.
    let pred_ori = g.slice(theta, 1, 0, 1)?;
    let gt_ori = g.slice(gt_theta, 1, 0, 1)?;
    let l_ori = l1_mean(g, pred_ori, gt_ori)?;
    let pred_rot = g.slice(theta, 1, 1, JOINT_COUNT)?;
    let gt_rot = g.slice(gt_theta, 1, 1, JOINT_COUNT)?;
    let l_rot = l1_mean(g, pred_rot, gt_rot)?;

    let l_pos = l1_mean(g, p_local, gt_local)?;
    Ok((l_first, l_ori, l_rot, l_pos))
}

/// Head alignment inside the graph: shifts the root-free positions so the
/// head lands on the observed head position. Gradients flow through the
/// alignment into the pose.
pub fn head_align_graph<T: Real>(
    g: &mut Graph<T>,
    p_local: Var,
    obs_head: Var,
) -> Result<Var, NnError> {
    let rel = g.sub_ref_index(p_local, HEAD)?;
    g.add_per_frame(rel, obs_head)
}

/// Hand alignment loss: half the summed L1 distance of both global wrist
/// positions, averaged per frame.
pub fn hand_alignment_loss<T: Real>(
    g: &mut Graph<T>,
    p_global: Var,
    gt_global: Var,
) -> Result<Var, NnError> {
    let t = g.shape(p_global)[0];
    let pred = g.slice(p_global, 1, 20, 22)?;
    let gt = g.slice(gt_global, 1, 20, 22)?;
    let d = g.sub(pred, gt)?;
    let a = g.abs(d)?;
    let s = g.sum_all(a)?;
    g.scale(s, real(0.5 / t as f64))
}

/// Lag-l velocity loss: mean absolute difference between predicted and
/// ground-truth frame differences at lag `lag`.
pub fn velocity_loss<T: Real>(
    g: &mut Graph<T>,
    p_global: Var,
    gt_global: Var,
    lag: usize,
) -> Result<Var, LossError> {
    let t = g.shape(p_global)[0];
    if t <= lag {
        return Err(LossError::WindowTooShort { t, lag });
    }
    let pred_hi = g.slice(p_global, 0, lag, t)?;
    let pred_lo = g.slice(p_global, 0, 0, t - lag)?;
    let pred_vel = g.sub(pred_hi, pred_lo)?;
    let gt_hi = g.slice(gt_global, 0, lag, t)?;
    let gt_lo = g.slice(gt_global, 0, 0, t - lag)?;
    let gt_vel = g.sub(gt_hi, gt_lo)?;
    Ok(l1_mean(g, pred_vel, gt_vel)?)
}

/// Extracts the 4 feet-relevant joints (L/R ankle, L/R foot) as (t, 4, 3).
fn feet_slice<T: Real>(g: &mut Graph<T>, p: Var) -> Result<Var, NnError> {
    let ankles = g.slice(p, 1, 7, 9)?;
    let toes = g.slice(p, 1, 10, 12)?;
    g.concat(&[ankles, toes], 1)
}

/// Foot-contact loss: masked mean absolute per-frame velocity of the feet;
/// the frame-i mask gates the (i, i+1) displacement.
pub fn foot_contact_loss<T: Real>(
    g: &mut Graph<T>,
    p_global: Var,
    contact: &Tensor<T>,
) -> Result<Var, NnError> {
    let t = g.shape(p_global)[0];
    let feet = feet_slice(g, p_global)?;
    let hi = g.slice(feet, 0, 1, t)?;
    let lo = g.slice(feet, 0, 0, t - 1)?;
    let vel = g.sub(hi, lo)?;
    // Mask rows 0..t-1 broadcast over xyz.
    let mut m3 = Vec::with_capacity((t - 1) * 4 * 3);
    for f in 0..t - 1 {
        for foot in 0..4 {
            let m = contact.data()[f * 4 + foot];
            m3.extend([m, m, m]);
        }
    }
    let mask = g.constant(Tensor::new(vec![t - 1, 4, 3], m3)?);
    let masked = g.mul(vel, mask)?;
    g.mean_abs(masked)
}

/// Ground penetration: per-frame sum of below-ground joint depths, averaged
/// over frames. Zero when every joint stays above z = 0.
pub fn penetration_loss<T: Real>(g: &mut Graph<T>, p_global: Var) -> Result<Var, NnError> {
    let t = g.shape(p_global)[0];
    let z = g.slice(p_global, 2, 2, 3)?;
    let neg = g.neg(z)?;
    let hinge = g.relu(neg)?;
    let s = g.sum_all(hinge)?;
    g.scale(s, T::one() / real(t as f64))
}

/// Foot-height loss: pulls grounded feet onto the z = 0 plane; per-frame
/// sum over masked feet, averaged over frames.
pub fn foot_height_loss<T: Real>(
    g: &mut Graph<T>,
    p_global: Var,
    contact: &Tensor<T>,
) -> Result<Var, NnError> {
    let t = g.shape(p_global)[0];
    let feet = feet_slice(g, p_global)?;
    let z = g.slice(feet, 2, 2, 3)?;
    let mut m = Vec::with_capacity(t * 4);
    m.extend(contact.data().iter().copied());
    let mask = g.constant(Tensor::new(vec![t, 4, 1], m)?);
    let masked = g.mul(z, mask)?;
    let a = g.abs(masked)?;
    let s = g.sum_all(a)?;
    g.scale(s, T::one() / real(t as f64))
}

/// Builds every enabled loss term plus the weighted total:
/// total = L_first + beta L_ori + gamma L_rot + delta L_pos
///       + epsilon L_h + zeta (L_v1 + L_v3 + L_v5 + L_fc)
///       + (L_p + alpha L_fh).
/// Velocity lags that do not fit the window (t <= lag) are skipped and
/// reported as zero.
pub fn total_loss<T: Real>(
    g: &mut Graph<T>,
    fwd: &ForwardVars,
    target: &WindowTarget<T>,
    template: &SkeletonTemplate,
    weights: &LossWeights,
    toggles: &LossToggles,
) -> Result<LossGraph, LossError> {
    weights.validate()?;
    let t = target.frames();
    let rotmats = g.sixd_to_matrices(fwd.theta)?;
    let p_local = g.fk_positions(rotmats, None, template)?;
    let (l_first, l_ori, l_rot, l_pos) = basic_losses(
        g,
        fwd.theta_init,
        fwd.theta,
        p_local,
        fwd.p_init_headrel,
        target,
    )?;

    let obs_head = g.constant(target.obs_head.clone());
    let p_global = head_align_graph(g, p_local, obs_head)?;
    let gt_global = g.constant(target.global_pos.clone());

    let mut terms: Vec<(Var, T)> = vec![
        (l_first, T::one()),
        (l_ori, real(weights.beta)),
        (l_rot, real(weights.gamma)),
        (l_pos, real(weights.delta)),
    ];

    let l_hand = if toggles.hand {
        let v = hand_alignment_loss(g, p_global, gt_global)?;
        terms.push((v, real(weights.epsilon)));
        Some(v)
    } else {
        None
    };

    let vel = |lag: usize, on: bool, g: &mut Graph<T>| -> Result<Option<Var>, LossError> {
        if !on || t <= lag {
            return Ok(None);
        }
        let v = velocity_loss(g, p_global, gt_global, lag)?;
        Ok(Some(v))
    };
    let l_v1 = vel(1, toggles.velocity_short, g)?;
    let l_v3 = vel(3, toggles.velocity_long, g)?;
    let l_v5 = vel(5, toggles.velocity_long, g)?;
    for v in [l_v1, l_v3, l_v5].into_iter().flatten() {
        terms.push((v, real(weights.zeta)));
    }

    let l_fc = if toggles.foot_contact {
        let v = foot_contact_loss(g, p_global, &target.contact)?;
        terms.push((v, real(weights.zeta)));
        Some(v)
    } else {
        None
    };

    let l_p = if toggles.penetration {
        let v = penetration_loss(g, p_global)?;
        terms.push((v, T::one()));
        Some(v)
    } else {
        None
    };
    let l_fh = if toggles.foot_height {
        let v = foot_height_loss(g, p_global, &target.contact)?;
        terms.push((v, real(weights.alpha)));
        Some(v)
    } else {
        None
    };

    let total = g.weighted_sum(&terms)?;
    Ok(LossGraph {
        l_first,
        l_ori,
        l_rot,
        l_pos,
        l_hand,
        l_v1,
        l_v3,
        l_v5,
        l_fc,
        l_p,
        l_fh,
        total,
    })
}

#[cfg(test)]
mod tests;
