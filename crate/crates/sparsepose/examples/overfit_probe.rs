//! Scratch probe: training speed and overfit feasibility at desk scale.

use std::time::Instant;

use sparsepose::data::signals::derive_tracking_signals;
use sparsepose::data::synth::{synth_generate, MotionKind};
use sparsepose::metrics::evaluate_set;
use sparsepose::model::ModelConfig;
use sparsepose::runtime::{infer_sequence, train, TrainConfig, TrainOptions};
use sparsepose::skeleton::SkeletonTemplate;

fn main() {
    let template = SkeletonTemplate::default_humanoid();
    let dataset: Vec<_> = MotionKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &k)| synth_generate(k, 10.0, 60.0, 100 + i as u64).unwrap())
        .collect();

    let args: Vec<String> = std::env::args().collect();
    let iters: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let batch: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(16);
    let lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3e-4);
    let mut model = ModelConfig::tiny();
    if let Some(d1) = args.get(4).and_then(|s| s.parse().ok()) {
        model.embed_dim = d1;
    }
    if let Some(d2) = args.get(5).and_then(|s| s.parse().ok()) {
        model.token_dim = d2;
    }
    if let Some(t) = args.get(6).and_then(|s| s.parse().ok()) {
        model.window = t;
    }
    if let Some(n) = args.get(7).and_then(|s| s.parse().ok()) {
        model.loops = n;
    }
    let mode = args.get(8).map(|s| s.as_str()).unwrap_or("full");
    if mode.contains("nomask") {
        model.mask_count = 0;
    }
    println!("config: {model:?} batch {batch} lr {lr} mode {mode}");

    let cfg = TrainConfig {
        batch,
        iterations: iters,
        lr,
        lr_after_drop: lr * 0.1,
        seed: 7,
        checkpoint_every: 0,
        model,
        toggles: {
            let mut t = if mode.contains("basic") {
                sparsepose::loss::LossToggles::basic_only()
            } else {
                sparsepose::loss::LossToggles::default()
            };
            if mode.contains("nomotion") {
                t = t.without_motion();
            }
            if mode.contains("nohand") {
                t = t.without_hand();
            }
            if mode.contains("nophys") {
                t = t.without_physical();
            }
            t
        },
        ..TrainConfig::default()
    };

    let t0 = Instant::now();
    let mut evals = Vec::new();
    let ds = dataset.clone();
    let tm = template.clone();
    let out = train(&cfg, &dataset, &template, TrainOptions {
        callback_every: 250,
        callback: Some(&mut |iter, model| {
            let pairs: Vec<_> = ds
                .iter()
                .map(|gt| {
                    let sig = derive_tracking_signals(gt, &tm).unwrap();
                    let pred = infer_sequence(model, &tm, &sig, gt.fps, None).unwrap();
                    (pred, gt.clone())
                })
                .collect();
            let report = evaluate_set(&pairs, &tm).unwrap();
            let m = report.aggregate.metrics;
            println!(
                "iter {iter}: mpjpe {:.2} cm, mpjre {:.2} deg, mpjve {:.1}, elapsed {:.0}s",
                m.mpjpe,
                m.mpjre,
                m.mpjve,
                t0.elapsed().as_secs_f64()
            );
            evals.push((iter, m.mpjpe, m.mpjre));
            m.mpjpe < 2.0 && m.mpjre < 5.0
        }),
        ..TrainOptions::default()
    })
    .unwrap();

    // Per-joint rotation error breakdown on the training set.
    let mut per_joint = vec![0.0f64; 22];
    let mut frames_total = 0usize;
    for gt in &dataset {
        let sig = derive_tracking_signals(gt, &template).unwrap();
        let pred = infer_sequence(&out.model, &template, &sig, gt.fps, None).unwrap();
        let pp = pred.to_local_pose();
        let gp = gt.to_local_pose();
        for f in 0..gt.len() {
            for j in 0..22 {
                per_joint[j] +=
                    sparsepose::rotation::geodesic_angle_deg(pp.get(f, j), gp.get(f, j));
            }
        }
        frames_total += gt.len();
    }
    for (j, v) in per_joint.iter().enumerate() {
        println!("joint {j:2}: {:7.2} deg", v / frames_total as f64);
    }

    for r in out.records.iter().step_by(500) {
        println!(
            "step {}: first {:.3} ori {:.3} rot {:.3} pos {:.3} hand {:.3} v1 {:.4} fc {:.4} p {:.4} fh {:.4} total {:.3}",
            r.step, r.loss.l_first, r.loss.l_ori, r.loss.l_rot, r.loss.l_pos,
            r.loss.l_hand, r.loss.l_v1, r.loss.l_fc, r.loss.l_p, r.loss.l_fh, r.loss.total
        );
    }
    let first: Vec<f64> = out.records.iter().take(100).map(|r| r.loss.total).collect();
    let last: Vec<f64> = out
        .records
        .iter()
        .rev()
        .take(100)
        .map(|r| r.loss.total)
        .collect();
    let med = |mut v: Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    println!(
        "ran {} iters in {:.0}s; median loss first100 {:.4} last100 {:.4}",
        out.iterations_run,
        t0.elapsed().as_secs_f64(),
        med(first),
        med(last)
    );
}
