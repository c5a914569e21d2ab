use super::*;
use crate::data::signals::{derive_contact_mask, ContactMask};
use crate::data::synth::{synth_generate, MotionKind};
use crate::model::ForwardVars;
use crate::nn::gradcheck::grad_check;
use crate::nn::params::ParamStore;
use crate::skeleton::SkeletonTemplate;

/// Ground truth for a short window of a synthetic sequence.
fn make_target(kind: MotionKind, t: usize, start: usize, seed: u64) -> WindowTarget<f64> {
    let template = SkeletonTemplate::default_humanoid();
    let seq = synth_generate(kind, 2.0, 60.0, seed).unwrap();
    let contact = derive_contact_mask(&seq, &template).unwrap();
    let pose_full = seq.to_local_pose();
    let gm = crate::skeleton::forward_kinematics(&pose_full, &template, &seq.root_translations())
        .unwrap();
    let mut pose = crate::skeleton::LocalPose::identity(t);
    for f in 0..t {
        for j in 0..JOINT_COUNT {
            pose.set(f, j, *pose_full.get(start + f, j));
        }
    }
    let motion = crate::skeleton::GlobalMotion {
        frames: t,
        positions: gm.positions[start * JOINT_COUNT..(start + t) * JOINT_COUNT].to_vec(),
        rotations: gm.rotations[start * JOINT_COUNT..(start + t) * JOINT_COUNT].to_vec(),
    };
    WindowTarget::from_ground_truth(&pose, &motion, &contact.window(start, t), &template).unwrap()
}

/// Builds loss inputs that exactly reproduce the ground truth.
fn perfect_forward(g: &mut Graph<f64>, target: &WindowTarget<f64>) -> ForwardVars {
    let theta = g.constant(target.theta.clone());
    let theta_init = g.constant(target.theta.clone());
    let p_init_headrel = g.constant(target.headrel_pos.clone());
    ForwardVars {
        h_embed: theta, // placeholder; unused by the losses
        theta_init,
        theta,
        p_init_headrel,
        masked_tokens: Vec::new(),
    }
}

#[test]
fn perfect_prediction_zeroes_every_term() {
    // Error-type terms vanish identically at the ground truth. The
    // foot-contact and foot-height terms are absolute violation penalties:
    // they vanish only when the ground truth itself keeps grounded feet
    // still — true for the pinned-feet motions, not mid-lift-off in a walk.
    for kind in [MotionKind::IdleSway, MotionKind::Squat] {
        let target = make_target(kind, 9, 20, 5);
        let template = SkeletonTemplate::default_humanoid();
        let mut g = Graph::new();
        let fwd = perfect_forward(&mut g, &target);
        let lg = total_loss(
            &mut g,
            &fwd,
            &target,
            &template,
            &LossWeights::default(),
            &LossToggles::default(),
        )
        .unwrap();
        let r = lg.report(&g);
        for (name, v) in [
            ("l_first", r.l_first),
            ("l_ori", r.l_ori),
            ("l_rot", r.l_rot),
            ("l_pos", r.l_pos),
            ("l_hand", r.l_hand),
            ("l_v1", r.l_v1),
            ("l_v3", r.l_v3),
            ("l_v5", r.l_v5),
            ("l_fc", r.l_fc),
            ("l_p", r.l_p),
            ("l_fh", r.l_fh),
            ("total", r.total),
        ] {
            assert!(v.abs() < 1e-9, "{name} = {v} for perfect prediction ({kind:?})");
        }
    }

    // Walking ground truth: every error-type term is still exactly zero.
    let target = make_target(MotionKind::WalkCycle, 9, 20, 5);
    let template = SkeletonTemplate::default_humanoid();
    let mut g = Graph::new();
    let fwd = perfect_forward(&mut g, &target);
    let lg = total_loss(
        &mut g,
        &fwd,
        &target,
        &template,
        &LossWeights::default(),
        &LossToggles::default(),
    )
    .unwrap();
    let r = lg.report(&g);
    for (name, v) in [
        ("l_first", r.l_first),
        ("l_ori", r.l_ori),
        ("l_rot", r.l_rot),
        ("l_pos", r.l_pos),
        ("l_hand", r.l_hand),
        ("l_v1", r.l_v1),
        ("l_v3", r.l_v3),
        ("l_v5", r.l_v5),
        ("l_p", r.l_p),
    ] {
        assert!(v.abs() < 1e-9, "{name} = {v} for perfect walk prediction");
    }
    // Lift-off frames below the contact gates carry a small true penalty.
    assert!(r.l_fc >= 0.0 && r.l_fc < 0.01);
    assert!(r.l_fh >= 0.0 && r.l_fh < 0.05);
}

#[test]
fn total_is_the_weighted_sum_of_reported_terms() {
    let target = make_target(MotionKind::WalkCycle, 9, 10, 3);
    let template = SkeletonTemplate::default_humanoid();
    let mut g = Graph::new();
    // A generic wrong prediction: ground truth shifted and re-scaled.
    let theta = {
        let mut t = target.theta.clone();
        for v in t.data_mut() {
            *v = *v * 0.9 + 0.03;
        }
        g.constant(t)
    };
    let fwd = ForwardVars {
        h_embed: theta,
        theta_init: theta,
        theta,
        p_init_headrel: g.constant(target.headrel_pos.clone()),
        masked_tokens: Vec::new(),
    };
    let w = LossWeights::default();
    let lg = total_loss(&mut g, &fwd, &target, &template, &w, &LossToggles::default()).unwrap();
    let r = lg.report(&g);
    let expect = r.l_first
        + w.beta * r.l_ori
        + w.gamma * r.l_rot
        + w.delta * r.l_pos
        + w.epsilon * r.l_hand
        + w.zeta * (r.l_v1 + r.l_v3 + r.l_v5 + r.l_fc)
        + (r.l_p + w.alpha * r.l_fh);
    assert!(
        (r.total - expect).abs() < 1e-12,
        "total {} vs weighted sum {expect}",
        r.total
    );
    assert!(r.is_finite());
    assert!(r.l_rot > 0.0 && r.l_pos > 0.0);
}

#[test]
fn basic_loss_arithmetic_oracles() {
    let target = make_target(MotionKind::IdleSway, 6, 15, 7);
    let template = SkeletonTemplate::default_humanoid();
    let _ = template;
    let mut g = Graph::new();
    // Rotations offset by a constant 0.1 in every entry of joints 1..22;
    // root orientation left exact.
    let mut off = target.theta.clone();
    for f in 0..6 {
        for j in 1..JOINT_COUNT {
            for c in 0..6 {
                let i = (f * JOINT_COUNT + j) * 6 + c;
                off.data_mut()[i] += 0.1;
            }
        }
    }
    let theta = g.constant(off);
    let theta_init = g.constant(target.theta.clone());
    // Positions offset by 0.01 in every element.
    let mut plocal = target.local_pos.clone();
    for v in plocal.data_mut() {
        *v += 0.01;
    }
    let p_local = g.constant(plocal);
    let p_init_headrel = g.constant(target.headrel_pos.clone());
    let (l_first, l_ori, l_rot, l_pos) =
        basic_losses(&mut g, theta_init, theta, p_local, p_init_headrel, &target).unwrap();
    assert!(g.scalar_value(l_first).abs() < 1e-12);
    assert!(g.scalar_value(l_ori).abs() < 1e-12);
    // Mean over (t x 22 x 6) with 21 of 22 joints offset by 0.1.
    let expect_rot = 0.1 * 21.0 / 21.0; // slice excludes joint 0, so exactly 0.1
    assert!((g.scalar_value(l_rot) - expect_rot).abs() < 1e-12);
    assert!((g.scalar_value(l_pos) - 0.01).abs() < 1e-12);
}

#[test]
fn hand_loss_arithmetic_and_gradient_through_fk() {
    let target = make_target(MotionKind::ArmWave, 6, 12, 9);
    let t = 6;
    let mut g = Graph::new();
    // Prediction equals ground truth except both wrists shifted 0.02 m in x.
    let mut pred = target.global_pos.clone();
    for f in 0..t {
        for joint in [20usize, 21] {
            pred.data_mut()[(f * JOINT_COUNT + joint) * 3] += 0.02;
        }
    }
    let p_global = g.constant(pred);
    let gt_global = g.constant(target.global_pos.clone());
    let l = hand_alignment_loss(&mut g, p_global, gt_global).unwrap();
    assert!((g.scalar_value(l) - 0.02).abs() < 1e-12);

    // Gradient flows through FK + head alignment back to the pelvis chain.
    let template = SkeletonTemplate::default_humanoid();
    let mut g = Graph::<f64>::new();
    let theta = g.param(target.theta.clone());
    let rotmats = g.sixd_to_matrices(theta).unwrap();
    let p_local = g.fk_positions(rotmats, None, &template).unwrap();
    let obs_head = g.constant(target.obs_head.clone());
    let p_glob = head_align_graph(&mut g, p_local, obs_head).unwrap();
    let gt_glob = g.constant(target.global_pos.clone());
    let l = hand_alignment_loss(&mut g, p_glob, gt_glob).unwrap();
    let grads = g.backward(l).unwrap();
    let gtheta = grads.get(theta).expect("theta gradient");
    // Pelvis = joint 0: its rotation moves the whole chain including hands.
    let pelvis_grad: f64 = gtheta.data()[..6].iter().map(|v| v.abs()).sum();
    assert!(pelvis_grad > 1e-9, "hands decoupled from pelvis: {pelvis_grad}");
}

#[test]
fn velocity_loss_oracles() {
    let t = 12;
    let mut gt = vec![0.0f64; t * JOINT_COUNT * 3];
    // Ground truth moves 0.01 per frame in x.
    for f in 0..t {
        for j in 0..JOINT_COUNT {
            gt[(f * JOINT_COUNT + j) * 3] = 0.01 * f as f64;
        }
    }
    let gt_t = Tensor::new(vec![t, JOINT_COUNT, 3], gt.clone()).unwrap();
    // Static prediction.
    let pred_t = Tensor::zeros(vec![t, JOINT_COUNT, 3]);
    let mut g = Graph::new();
    let pred = g.constant(pred_t);
    let gtv = g.constant(gt_t.clone());
    let l1 = velocity_loss(&mut g, pred, gtv, 1).unwrap();
    assert!((g.scalar_value(l1) - 0.01 / 3.0).abs() < 1e-12);

    // Constant offset cancels exactly.
    let mut off = gt.clone();
    for v in off.iter_mut().step_by(3) {
        *v += 0.5;
    }
    let offv = g.constant(Tensor::new(vec![t, JOINT_COUNT, 3], off).unwrap());
    for lag in [1, 3, 5] {
        let l0 = velocity_loss(&mut g, offv, gtv, lag).unwrap();
        // Exact up to float cancellation in (p + c) - p.
        assert!(g.scalar_value(l0) < 1e-12, "lag {lag}");
    }

    // Slow sign-alternating error (period 10): lag-1 differences see only
    // the two flips, lag-5 sees the full swing every frame.
    let a = 0.02;
    let mut drift = gt.clone();
    for f in 0..t {
        let sign = if (f / 5) % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..JOINT_COUNT {
            drift[(f * JOINT_COUNT + j) * 3] += a * sign;
        }
    }
    let driftv = g.constant(Tensor::new(vec![t, JOINT_COUNT, 3], drift).unwrap());
    let lv1 = velocity_loss(&mut g, driftv, gtv, 1).unwrap();
    let lv5 = velocity_loss(&mut g, driftv, gtv, 5).unwrap();
    // Hand arithmetic: lag-1 flips at f=4->5 and f=9->10: 2 of 11 pairs with
    // |2a| in x. Lag-5: pairs (0..7): i and i+5 differ in sign except when
    // both lie in the same half... enumerate: signs +++++-----++; pairs
    // i=0..6: (+,-) x5 then (-,+) x2 -> all 7 differ by 2a.
    let expect_v1 = (2.0 * a) * 2.0 / (11.0 * 3.0);
    let expect_v5 = (2.0 * a) * 7.0 / (7.0 * 3.0);
    assert!((g.scalar_value(lv1) - expect_v1).abs() < 1e-12);
    assert!((g.scalar_value(lv5) - expect_v5).abs() < 1e-12);
    assert!(g.scalar_value(lv5) > g.scalar_value(lv1));

    // Lag must fit the window.
    assert!(matches!(
        velocity_loss(&mut g, pred, gtv, 12),
        Err(LossError::WindowTooShort { t: 12, lag: 12 })
    ));
}

#[test]
fn foot_contact_loss_oracles() {
    let t = 5;
    let mut pos = vec![0.0f64; t * JOINT_COUNT * 3];
    // All feet slide 0.01 per frame in x.
    for f in 0..t {
        for j in 0..JOINT_COUNT {
            pos[(f * JOINT_COUNT + j) * 3] = 0.01 * f as f64;
        }
    }
    let mut g = Graph::new();
    let p = g.constant(Tensor::new(vec![t, JOINT_COUNT, 3], pos).unwrap());
    let ones = Tensor::full(vec![t, 4], 1.0);
    let l = foot_contact_loss(&mut g, p, &ones).unwrap();
    assert!((g.scalar_value(l) - 0.01 / 3.0).abs() < 1e-12);

    // Zero mask kills the loss; static feet too.
    let zeros = Tensor::zeros(vec![t, 4]);
    let l = foot_contact_loss(&mut g, p, &zeros).unwrap();
    assert_eq!(g.scalar_value(l), 0.0);
    let static_p = g.constant(Tensor::full(vec![t, JOINT_COUNT, 3], 0.3));
    let l = foot_contact_loss(&mut g, static_p, &ones).unwrap();
    assert_eq!(g.scalar_value(l), 0.0);
}

#[test]
fn physical_loss_oracles() {
    let t = 4;
    let mut g = Graph::new();
    // Everything above ground: penetration 0.
    let above = g.constant(Tensor::full(vec![t, JOINT_COUNT, 3], 0.2));
    let l = penetration_loss(&mut g, above).unwrap();
    assert_eq!(g.scalar_value(l), 0.0);

    // One joint at z = -0.05 every frame: per-frame sum is 0.05.
    let mut pos = vec![0.2f64; t * JOINT_COUNT * 3];
    for f in 0..t {
        pos[(f * JOINT_COUNT + 4) * 3 + 2] = -0.05;
    }
    let sunk = g.constant(Tensor::new(vec![t, JOINT_COUNT, 3], pos).unwrap());
    let l = penetration_loss(&mut g, sunk).unwrap();
    assert!((g.scalar_value(l) - 0.05).abs() < 1e-12);

    // Grounded feet exactly at z = 0: foot height 0.
    let mut pos = vec![0.5f64; t * JOINT_COUNT * 3];
    for f in 0..t {
        for &joint in &crate::skeleton::FEET_JOINTS {
            pos[(f * JOINT_COUNT + joint) * 3 + 2] = 0.0;
        }
    }
    let grounded = g.constant(Tensor::new(vec![t, JOINT_COUNT, 3], pos.clone()).unwrap());
    let ones = Tensor::full(vec![t, 4], 1.0);
    let l = foot_height_loss(&mut g, grounded, &ones).unwrap();
    assert_eq!(g.scalar_value(l), 0.0);

    // Feet hovering at 2 cm with a full mask: per-frame sum 4 x 0.02.
    for f in 0..t {
        for &joint in &crate::skeleton::FEET_JOINTS {
            pos[(f * JOINT_COUNT + joint) * 3 + 2] = 0.02;
        }
    }
    let hovering = g.constant(Tensor::new(vec![t, JOINT_COUNT, 3], pos).unwrap());
    let l = foot_height_loss(&mut g, hovering, &ones).unwrap();
    assert!((g.scalar_value(l) - 0.08).abs() < 1e-12);
}

#[test]
fn toggles_zero_out_groups() {
    let target = make_target(MotionKind::WalkCycle, 9, 30, 11);
    let template = SkeletonTemplate::default_humanoid();
    let run = |toggles: LossToggles| -> LossReport {
        let mut g = Graph::new();
        let theta = {
            let mut t = target.theta.clone();
            for v in t.data_mut() {
                *v += 0.05;
            }
            g.constant(t)
        };
        let fwd = ForwardVars {
            h_embed: theta,
            theta_init: theta,
            theta,
            p_init_headrel: g.constant(target.headrel_pos.clone()),
            masked_tokens: Vec::new(),
        };
        let lg = total_loss(
            &mut g,
            &fwd,
            &target,
            &template,
            &LossWeights::default(),
            &toggles,
        )
        .unwrap();
        lg.report(&g)
    };
    let full = run(LossToggles::default());
    assert!(full.l_hand > 0.0 && full.l_v1 > 0.0 && full.l_fh > 0.0);

    let no_hand = run(LossToggles::default().without_hand());
    assert_eq!(no_hand.l_hand, 0.0);
    assert!((full.total - no_hand.total - LossWeights::default().epsilon * full.l_hand).abs() < 1e-9);

    let no_motion = run(LossToggles::default().without_motion());
    assert_eq!(no_motion.l_v1, 0.0);
    assert_eq!(no_motion.l_v3, 0.0);
    assert_eq!(no_motion.l_v5, 0.0);
    assert_eq!(no_motion.l_fc, 0.0);

    let no_phys = run(LossToggles::default().without_physical());
    assert_eq!(no_phys.l_p, 0.0);
    assert_eq!(no_phys.l_fh, 0.0);

    let basic = run(LossToggles::basic_only());
    assert_eq!(basic.l_hand, 0.0);
    assert_eq!(basic.l_fc, 0.0);
    let w = LossWeights::default();
    let expect = basic.l_first + w.beta * basic.l_ori + w.gamma * basic.l_rot + w.delta * basic.l_pos;
    assert!((basic.total - expect).abs() < 1e-12);
}

#[test]
fn total_loss_gradient_matches_finite_differences() {
    // Gradient of the full loss through FK and head alignment, with the
    // pose parameters as the only leaves.
    let target = make_target(MotionKind::WalkCycle, 6, 25, 13);
    let template = SkeletonTemplate::default_humanoid();
    let mut store = ParamStore::<f64>::new();
    // A prediction near but not at the ground truth; away from L1 kinks.
    let mut start = target.theta.clone();
    for (i, v) in start.data_mut().iter_mut().enumerate() {
        *v += 0.011 + 0.003 * ((i % 13) as f64);
    }
    store.register("theta", start).unwrap();
    let report = grad_check(
        &|g, vars| {
            let theta = vars[0];
            let fwd = ForwardVars {
                h_embed: theta,
                theta_init: theta,
                theta,
                p_init_headrel: {
                    let rot = g.sixd_to_matrices(theta)?;
                    let p = g.fk_positions(rot, None, &template)?;
                    g.sub_ref_index(p, HEAD)?
                },
                masked_tokens: Vec::new(),
            };
            let lg = total_loss(
                g,
                &fwd,
                &target,
                &template,
                &LossWeights::default(),
                &LossToggles::default(),
            )
            .map_err(|e| match e {
                LossError::Nn(e) => e,
                LossError::WindowTooShort { t, lag } => {
                    NnError::Graph(format!("window {t} too short for lag {lag}"))
                }
            })?;
            Ok(lg.total)
        },
        &store,
        1e-6,
    )
    .unwrap();
    assert!(
        report.max_rel_err < 1e-4,
        "loss gradient check failed: {report:?}"
    );
}
