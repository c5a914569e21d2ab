//! Scratch probe: classify full-model gradcheck discrepancies by their
//! h-dependence (kink crossing vs truncation vs roundoff vs bug).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparsepose::data::synth::{synth_generate, MotionKind};
use sparsepose::loss::{total_loss, LossToggles, LossWeights};
use sparsepose::model::{ModelConfig, PoseModel};
use sparsepose::nn::graph::Graph;
use sparsepose::runtime::PreparedSequence;
use sparsepose::skeleton::SkeletonTemplate;

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let template = SkeletonTemplate::default_humanoid();
    let seq = synth_generate(MotionKind::WalkCycle, 1.0, 60.0, seed).unwrap();
    let prepared = PreparedSequence::from_motion(&seq, &template).unwrap();
    let cfg = ModelConfig::tiny();
    let input = prepared.input_window::<f64>(10, cfg.window).unwrap();
    let target = prepared.target_window::<f64>(10, cfg.window).unwrap();
    let model = PoseModel::<f64>::new(cfg, seed).unwrap();
    let weights = LossWeights::default();
    let toggles = LossToggles::default();
    let mask_seed = seed ^ 0x5EED;

    let eval = |store: &sparsepose::nn::ParamStore<f64>| -> f64 {
        let mut g = Graph::new();
        let vars = store.insert_into_graph(&mut g);
        let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
        let fwd = model
            .forward(&mut g, &vars, &input, &template, Some(&mut rng))
            .unwrap();
        let lg = total_loss(&mut g, &fwd, &target, &template, &weights, &toggles).unwrap();
        g.scalar_value(lg.total)
    };

    // Analytic gradients.
    let mut g = Graph::new();
    let vars = model.store.insert_into_graph(&mut g);
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let fwd = model
        .forward(&mut g, &vars, &input, &template, Some(&mut rng))
        .unwrap();
    let lg = total_loss(&mut g, &fwd, &target, &template, &weights, &toggles).unwrap();
    let grads = g.backward(lg.total).unwrap();

    // Find the worst entry at h = 1e-5 over stage-1 params, then sweep h.
    let h0 = 1e-5;
    let mut worst = (0usize, 0usize, 0.0f64);
    for pidx in 0..model.store.len() {
        let analytic = grads.get(vars[pidx]).unwrap();
        let n = model.store.get(pidx).value.elems();
        for e in 0..n {
            let mut s = model.store.clone();
            let orig = s.get(pidx).value.data()[e];
            s.get_mut(pidx).value.data_mut()[e] = orig + h0;
            let up = eval(&s);
            s.get_mut(pidx).value.data_mut()[e] = orig - h0;
            let down = eval(&s);
            let fd = (up - down) / (2.0 * h0);
            let a = analytic.data()[e];
            if a.abs() < 1e-7 && fd.abs() < 1e-7 {
                continue;
            }
            let rel = (a - fd).abs() / a.abs().max(fd.abs());
            if rel > worst.2 {
                worst = (pidx, e, rel);
            }
        }
        if pidx > 8 {
            break; // stage-1 params only; keep the probe fast
        }
    }
    let (pidx, e, rel) = worst;
    println!(
        "worst among stage-1: {}[{}] rel {:.3e}",
        model.store.get(pidx).name,
        e,
        rel
    );
    let analytic = grads.get(vars[pidx]).unwrap().data()[e];
    println!("analytic = {analytic:+.12e}");
    for h in [1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
        let mut s = model.store.clone();
        let orig = s.get(pidx).value.data()[e];
        s.get_mut(pidx).value.data_mut()[e] = orig + h;
        let up = eval(&s);
        s.get_mut(pidx).value.data_mut()[e] = orig - h;
        let down = eval(&s);
        let fd = (up - down) / (2.0 * h);
        println!(
            "h={h:.0e}: fd = {fd:+.12e}  rel = {:.3e}",
            (analytic - fd).abs() / analytic.abs().max(fd.abs())
        );
    }
}
