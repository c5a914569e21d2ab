//! Training loop: uniform window sampling, masked forward passes,
//! batch-parallel backward with sample-ordered gradient reduction, Adam
//! with the two-phase learning-rate schedule, periodic checkpoints, and
//! line-delimited loss logging.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::windows::WindowSampler;
use crate::data::MotionSequence;
use crate::loss::{total_loss, LossReport, LossToggles, LossWeights};
use crate::model::{ModelConfig, PoseModel};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::graph::Graph;
use crate::nn::tensor::Tensor;
use crate::runtime::checkpoint::{save_checkpoint, CheckpointManifest};
use crate::runtime::dataset::PreparedDataset;
use crate::runtime::RuntimeError;
use crate::skeleton::SkeletonTemplate;

fn default_batch() -> usize {
    64
}
fn default_iterations() -> u64 {
    5000
}
fn default_lr() -> f64 {
    1e-4
}
fn default_lr_after_drop() -> f64 {
    1e-5
}
fn default_drop_frac() -> f64 {
    0.6
}
fn default_checkpoint_every() -> u64 {
    1000
}

/// Training hyperparameters. The defaults are desk-scale; the full-scale
/// schedule uses 100k iterations at batch 64 with the same two learning
/// rates and 60% drop point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_lr_after_drop")]
    pub lr_after_drop: f64,
    /// Fraction of iterations after which the learning rate drops.
    #[serde(default = "default_drop_frac")]
    pub lr_drop_frac: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weights: LossWeights,
    #[serde(default)]
    pub toggles: LossToggles,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: u64,
    #[serde(default = "ModelConfig::desk")]
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: default_batch(),
            iterations: default_iterations(),
            lr: default_lr(),
            lr_after_drop: default_lr_after_drop(),
            lr_drop_frac: default_drop_frac(),
            seed: 0,
            weights: LossWeights::default(),
            toggles: LossToggles::default(),
            checkpoint_every: default_checkpoint_every(),
            model: ModelConfig::desk(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RuntimeError> {
        if self.iterations == 0 || self.batch == 0 {
            return Err(RuntimeError::Schema(
                "iterations and batch must be positive".into(),
            ));
        }
        self.model.validate()?;
        self.weights
            .validate()
            .map_err(RuntimeError::Loss)?;
        Ok(())
    }
}

/// Scheduled learning rate: `lr` before the drop boundary, `lr_after_drop`
/// from the boundary on.
pub fn learning_rate(cfg: &TrainConfig, iteration: u64) -> f64 {
    let drop_at = (cfg.lr_drop_frac * cfg.iterations as f64).round() as u64;
    if iteration < drop_at {
        cfg.lr
    } else {
        cfg.lr_after_drop
    }
}

/// One logged training step.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub lr: f64,
    #[serde(flatten)]
    pub loss: LossReport,
}

/// Optional training plumbing: checkpoint directory, JSONL log sink, and a
/// periodic callback that can stop training early (returns true to stop).
#[derive(Default)]
pub struct TrainOptions<'a> {
    pub out_dir: Option<&'a Path>,
    pub log: Option<&'a mut dyn Write>,
    pub callback_every: u64,
    #[allow(clippy::type_complexity)]
    pub callback: Option<&'a mut dyn FnMut(u64, &PoseModel<f32>) -> bool>,
}

pub struct TrainOutcome {
    pub model: PoseModel<f32>,
    pub records: Vec<StepRecord>,
    /// Iterations actually run (smaller than configured on early stop).
    pub iterations_run: u64,
    pub final_checkpoint: Option<PathBuf>,
}

fn average_reports(reports: &[LossReport]) -> LossReport {
    let n = reports.len() as f64;
    let mut avg = LossReport::default();
    for r in reports {
        avg.l_first += r.l_first / n;
        avg.l_ori += r.l_ori / n;
        avg.l_rot += r.l_rot / n;
        avg.l_pos += r.l_pos / n;
        avg.l_hand += r.l_hand / n;
        avg.l_v1 += r.l_v1 / n;
        avg.l_v3 += r.l_v3 / n;
        avg.l_v5 += r.l_v5 / n;
        avg.l_fc += r.l_fc / n;
        avg.l_p += r.l_p / n;
        avg.l_fh += r.l_fh / n;
        avg.total += r.total / n;
    }
    avg
}

/// Trains a fresh model on the dataset. Deterministic given the seed:
/// window sampling, token-mask streams, and the sample-ordered gradient
/// reduction are all fixed, so two runs produce bit-identical checkpoints.
pub fn train(
    cfg: &TrainConfig,
    dataset: &[MotionSequence],
    template: &SkeletonTemplate,
    mut opts: TrainOptions<'_>,
) -> Result<TrainOutcome, RuntimeError> {
    cfg.validate()?;
    let prepared = PreparedDataset::prepare(dataset, template)?;
    let mut sampler = WindowSampler::new(&prepared.lens(), cfg.model.window, cfg.seed)?;
    let mut model = PoseModel::<f32>::new(cfg.model.clone(), cfg.seed)?;
    let mut adam = AdamState::new(&model.store);
    let mut records = Vec::with_capacity(cfg.iterations as usize);
    let mut last_checkpoint: Option<PathBuf> = None;
    let t = cfg.model.window;

    let manifest = |iteration: u64| -> CheckpointManifest {
        CheckpointManifest {
            schema_version: crate::runtime::checkpoint::CHECKPOINT_SCHEMA_VERSION,
            model: cfg.model.clone(),
            train: Some(cfg.clone()),
            iteration,
            seed: cfg.seed,
        }
    };

    let mut iterations_run = 0;
    for iter in 0..cfg.iterations {
        let picks = sampler.sample_batch(cfg.batch);
        let samples: Vec<_> = picks
            .iter()
            .enumerate()
            .map(|(idx, &(seq, start))| -> Result<_, RuntimeError> {
                let input = prepared.sequences[seq].input_window::<f32>(start, t)?;
                let target = prepared.sequences[seq].target_window::<f32>(start, t)?;
                // Unique, reproducible mask stream per (iteration, sample).
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream((1 << 63) | (iter * cfg.batch as u64 + idx as u64));
                Ok((input, target, rng))
            })
            .collect::<Result<_, _>>()?;

        type SampleOut = (Vec<Option<Tensor<f32>>>, LossReport);
        let results: Result<Vec<SampleOut>, RuntimeError> = samples
            .into_par_iter()
            .map(|(input, target, mut rng)| {
                let mut g = Graph::new();
                let pvars = model.insert_params(&mut g);
                let fwd = model.forward(&mut g, &pvars, &input, template, Some(&mut rng))?;
                let lg = total_loss(&mut g, &fwd, &target, template, &cfg.weights, &cfg.toggles)?;
                let mut grads = g.backward(lg.total)?;
                let per_param: Vec<Option<Tensor<f32>>> =
                    pvars.iter().map(|&v| grads.take(v)).collect();
                Ok((per_param, lg.report(&g)))
            })
            .collect();
        let results = results?;

        // Deterministic reduction: samples land in batch order regardless
        // of thread scheduling.
        model.store.zero_grads();
        let scale = 1.0 / cfg.batch as f32;
        let mut reports = Vec::with_capacity(results.len());
        for (per_param, report) in results {
            for (idx, g) in per_param.into_iter().enumerate() {
                if let Some(mut g) = g {
                    for v in g.data_mut() {
                        *v *= scale;
                    }
                    model.store.accumulate_grad(idx, &g)?;
                }
            }
            reports.push(report);
        }
        let lr = learning_rate(cfg, iter);
        adam_step(&mut model.store, &mut adam, lr)?;

        let avg = average_reports(&reports);
        if !avg.is_finite() || !model.store.all_finite() {
            return Err(RuntimeError::NonFiniteLoss {
                step: iter,
                last_checkpoint,
            });
        }
        let record = StepRecord {
            step: iter,
            lr,
            loss: avg,
        };
        debug_assert!(record.loss.is_finite());
        if let Some(log) = opts.log.as_mut() {
            serde_json::to_writer(&mut *log, &record)
                .map_err(|e| RuntimeError::Schema(e.to_string()))?;
            writeln!(log)?;
        }
        records.push(record);
        iterations_run = iter + 1;

        if let Some(dir) = opts.out_dir {
            if cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0 {
                let path = dir.join(format!("checkpoint_{:07}.bin", iter + 1));
                save_checkpoint(&model, &manifest(iter + 1), &path)?;
                last_checkpoint = Some(path);
            }
        }
        if opts.callback_every > 0 && (iter + 1) % opts.callback_every == 0 {
            if let Some(cb) = opts.callback.as_mut() {
                if cb(iter + 1, &model) {
                    break;
                }
            }
        }
    }

    let final_checkpoint = match opts.out_dir {
        Some(dir) => {
            let path = dir.join("checkpoint_final.bin");
            save_checkpoint(&model, &manifest(iterations_run), &path)?;
            Some(path)
        }
        None => None,
    };
    Ok(TrainOutcome {
        model,
        records,
        iterations_run,
        final_checkpoint,
    })
}
