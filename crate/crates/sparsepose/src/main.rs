//! Thin CLI over the library: data generation, training, evaluation,
//! streaming inference, and gradient checking.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use sparsepose::data::signals::derive_tracking_signals;
use sparsepose::data::{load_motion, save_motion, synth_generate, MotionKind, MotionSequence};
use sparsepose::loss::{total_loss, LossToggles, LossWeights};
use sparsepose::metrics::{evaluate_set, EvaluationReport};
use sparsepose::model::{ModelConfig, PoseModel};
use sparsepose::nn::gradcheck::grad_check_with_floor;
use sparsepose::runtime::{
    infer_sequence, load_checkpoint, train, RuntimeError, TrainConfig, TrainOptions,
};
use sparsepose::skeleton::SkeletonTemplate;

#[derive(Parser)]
#[command(
    name = "sparsepose",
    version,
    about = "Full-body motion estimation from sparse head and hand tracking signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic motion file.
    GenData {
        /// idle_sway | walk_cycle | arm_wave | squat
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
        #[arg(long, default_value_t = 60.0)]
        fps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a directory (or single file) of motion files.
    Train {
        /// Training config JSON; defaults to the desk-scale configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Output directory for checkpoints and the training log.
        #[arg(long)]
        out: PathBuf,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Iteration-count override.
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        skeleton: Option<PathBuf>,
    },
    /// Evaluate a checkpoint (or a prediction file) against ground truth.
    Eval {
        #[arg(long, conflicts_with = "pred")]
        checkpoint: Option<PathBuf>,
        /// Pre-computed prediction motion file (instead of a checkpoint).
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Ground-truth motion file or directory.
        #[arg(long)]
        data: PathBuf,
        /// Where to write the JSON report.
        #[arg(long)]
        report: PathBuf,
        /// Context window override for streaming inference.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        skeleton: Option<PathBuf>,
    },
    /// Stream one motion file through a checkpoint and write the prediction.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Context window override (defaults to the model's window).
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        skeleton: Option<PathBuf>,
    },
    /// Verify analytic gradients of the full model plus losses against
    /// central finite differences.
    Gradcheck {
        /// Model config JSON; defaults to the tiny configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Force the tiny configuration.
        #[arg(long)]
        tiny: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_template(path: &Option<PathBuf>) -> Result<SkeletonTemplate, RuntimeError> {
    match path {
        Some(p) => Ok(SkeletonTemplate::load(p)?),
        None => Ok(SkeletonTemplate::default_humanoid()),
    }
}

/// Loads a single motion file or every `*.json` in a directory, sorted by
/// file name for determinism.
fn load_dataset(path: &Path) -> Result<Vec<(String, MotionSequence)>, RuntimeError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "json").unwrap_or(false))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(RuntimeError::Schema(format!(
                "no .json motion files in {}",
                path.display()
            )));
        }
        files
            .into_iter()
            .map(|p| {
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                Ok((name, load_motion(&p)?))
            })
            .collect()
    } else {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        Ok(vec![(name, load_motion(path)?)])
    }
}

fn run(cmd: Command) -> Result<(), RuntimeError> {
    match cmd {
        Command::GenData {
            kind,
            seconds,
            fps,
            seed,
            out,
        } => {
            let kind: MotionKind = kind.parse()?;
            let seq = synth_generate(kind, seconds, fps, seed)?;
            save_motion(&seq, &out)?;
            println!(
                "wrote {} frames of {} at {} fps to {}",
                seq.len(),
                kind.name(),
                fps,
                out.display()
            );
            Ok(())
        }
        Command::Train {
            config,
            data,
            out,
            seed,
            iterations,
            skeleton,
        } => {
            let template = load_template(&skeleton)?;
            let mut cfg: TrainConfig = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
                    .map_err(|e| RuntimeError::Schema(format!("train config: {e}")))?,
                None => TrainConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(i) = iterations {
                cfg.iterations = i;
            }
            let dataset: Vec<MotionSequence> =
                load_dataset(&data)?.into_iter().map(|(_, s)| s).collect();
            std::fs::create_dir_all(&out)?;
            let mut log = std::io::BufWriter::new(std::fs::File::create(out.join("train_log.jsonl"))?);
            let progress = (cfg.iterations / 20).max(1);
            let outcome = train(&cfg, &dataset, &template, TrainOptions {
                out_dir: Some(&out),
                log: Some(&mut log),
                callback_every: progress,
                callback: Some(&mut |iter, _| {
                    eprintln!("iteration {iter}");
                    false
                }),
            })?;
            println!(
                "trained {} iterations; final loss {:.4}; checkpoint at {}",
                outcome.iterations_run,
                outcome.records.last().map(|r| r.loss.total).unwrap_or(f64::NAN),
                outcome.final_checkpoint.as_ref().unwrap().display()
            );
            Ok(())
        }
        Command::Eval {
            checkpoint,
            pred,
            data,
            report,
            window,
            skeleton,
        } => {
            let template = load_template(&skeleton)?;
            let gt = load_dataset(&data)?;
            let pairs: Vec<(MotionSequence, MotionSequence)> = match (&checkpoint, &pred) {
                (Some(ckpt), None) => {
                    let (model, _) = load_checkpoint(ckpt)?;
                    gt.iter()
                        .map(|(_, g)| {
                            let signals = derive_tracking_signals(g, &template)?;
                            let p = infer_sequence(&model, &template, &signals, g.fps, window)?;
                            Ok((p, g.clone()))
                        })
                        .collect::<Result<_, RuntimeError>>()?
                }
                (None, Some(pred_path)) => {
                    if gt.len() != 1 {
                        return Err(RuntimeError::Schema(
                            "--pred mode expects --data to be a single ground-truth file".into(),
                        ));
                    }
                    vec![(load_motion(pred_path)?, gt[0].1.clone())]
                }
                _ => {
                    return Err(RuntimeError::Schema(
                        "exactly one of --checkpoint or --pred is required".into(),
                    ))
                }
            };
            let result: EvaluationReport = evaluate_set(&pairs, &template)?;
            std::fs::write(
                &report,
                serde_json::to_string_pretty(&result)
                    .map_err(|e| RuntimeError::Schema(e.to_string()))?,
            )?;
            let m = result.aggregate.metrics;
            println!(
                "MPJRE {:.2} deg | MPJPE {:.2} cm | MPJVE {:.2} cm/s | Jitter {:.2} | Ground {:.2} cm | Skate {:.2} cm",
                m.mpjre, m.mpjpe, m.mpjve, m.jitter, m.ground, m.skate
            );
            println!("report written to {}", report.display());
            Ok(())
        }
        Command::Infer {
            checkpoint,
            input,
            output,
            window,
            skeleton,
        } => {
            let template = load_template(&skeleton)?;
            let (model, _) = load_checkpoint(&checkpoint)?;
            let gt = load_motion(&input)?;
            let signals = derive_tracking_signals(&gt, &template)?;
            let pred = infer_sequence(&model, &template, &signals, gt.fps, window)?;
            save_motion(&pred, &output)?;
            println!(
                "wrote {} predicted frames to {}",
                pred.len(),
                output.display()
            );
            Ok(())
        }
        Command::Gradcheck {
            config,
            tiny,
            seed,
            tolerance,
        } => {
            let model_cfg: ModelConfig = match (&config, tiny) {
                (_, true) | (None, _) => ModelConfig::tiny(),
                (Some(p), false) => serde_json::from_str(&std::fs::read_to_string(p)?)
                    .map_err(|e| RuntimeError::Schema(format!("model config: {e}")))?,
            };
            let report = run_gradcheck(&model_cfg, seed)?;
            println!(
                "gradcheck: max relative error {:.3e} over {} entries (worst: {})",
                report.max_rel_err,
                report.entries_checked,
                report
                    .worst_param
                    .as_deref()
                    .map(|p| format!("{p}[{}]", report.worst_index))
                    .unwrap_or_else(|| "-".into()),
            );
            if report.max_rel_err >= tolerance {
                return Err(RuntimeError::Schema(format!(
                    "gradient check failed: {:.3e} >= tolerance {tolerance:.1e}",
                    report.max_rel_err
                )));
            }
            Ok(())
        }
    }
}

/// Full-model double-precision gradient check on one synthetic window with
/// every loss toggle enabled.
fn run_gradcheck(
    cfg: &ModelConfig,
    seed: u64,
) -> Result<sparsepose::nn::gradcheck::GradCheckReport, RuntimeError> {
    use sparsepose::runtime::PreparedSequence;

    let template = SkeletonTemplate::default_humanoid();
    let seq = synth_generate(MotionKind::WalkCycle, 1.0, 60.0, seed)?;
    let prepared = PreparedSequence::from_motion(&seq, &template)?;
    let t = cfg.window;
    let input = prepared.input_window::<f64>(10, t)?;
    let target = prepared.target_window::<f64>(10, t)?;
    let model = PoseModel::<f64>::new(cfg.clone(), seed)?;
    let weights = LossWeights::default();
    let toggles = LossToggles::default();
    // A fixed mask keeps the loss a deterministic function of the
    // parameters across finite-difference evaluations.
    let mask_seed = seed ^ 0x5EED;
    // Resolution floor: the total loss is O(10), so central differences at
    // h = 1e-5 cannot rate gradients below ~1e-5; see grad_check_with_floor.
    let report = grad_check_with_floor(
        &|g, vars| {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(mask_seed);
            let fwd = model.forward(g, vars, &input, &template, Some(&mut rng))?;
            let lg = total_loss(g, &fwd, &target, &template, &weights, &toggles).map_err(|e| {
                sparsepose::nn::NnError::Graph(e.to_string())
            })?;
            Ok(lg.total)
        },
        &model.store,
        1e-5,
        3e-5,
    )?;
    Ok(report)
}
