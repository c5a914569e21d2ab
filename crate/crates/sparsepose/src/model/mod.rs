//! Two-stage pose network: frame-wise signal embedding and initial pose
//! regression, then joint-level tokens with tracked-joint substitution, an
//! embedded-input-features token, alternating spatial/temporal transformer
//! blocks, and a shared per-joint regressor head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::signals::{TrackingSignals, SIGNAL_WIDTH};
use crate::nn::graph::{Graph, Var};
use crate::nn::params::ParamStore;
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::{real, Real};
use crate::rotation::{gram_schmidt, RotationError};
use crate::skeleton::{SkeletonTemplate, HEAD, JOINT_COUNT, TRACKED_JOINTS};

/// Rotation tokens occupy 0..22, position tokens 22..44.
pub const TOKENS_PER_FRAME: usize = 44;

/// Spatial token count per STB: 44 joint tokens plus the EIF token.
pub const SPATIAL_TOKENS: usize = TOKENS_PER_FRAME + 1;

/// Pose parameter width: 22 joints x 6D rotation.
pub const POSE_WIDTH: usize = JOINT_COUNT * 6;

/// Token indices carrying observations; never maskable: head/wrist rotation
/// tokens and their position counterparts.
pub const PROTECTED_TOKENS: [usize; 6] = [15, 20, 21, 37, 42, 43];

/// Number of tokens the mask may select from.
pub const MASKABLE_TOKENS: usize = TOKENS_PER_FRAME - PROTECTED_TOKENS.len();

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
}

/// Network hyperparameters. `Default` is the full-scale configuration;
/// [`ModelConfig::desk`] and [`ModelConfig::tiny`] are CPU-friendly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input sequence length t.
    pub window: usize,
    /// Frame embedding width d1.
    pub embed_dim: usize,
    /// Joint token width d2.
    pub token_dim: usize,
    /// STB/TTB loop count n.
    pub loops: usize,
    pub heads: usize,
    /// Tokens replaced by the learned mask embedding during training.
    pub mask_count: usize,
    pub mlp_ratio: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            window: 41,
            embed_dim: 1024,
            token_dim: 512,
            loops: 6,
            heads: 4,
            mask_count: 2,
            mlp_ratio: 4,
        }
    }
}

impl ModelConfig {
    /// Desk-scale defaults for CPU training.
    pub fn desk() -> Self {
        ModelConfig {
            window: 11,
            embed_dim: 64,
            token_dim: 32,
            loops: 2,
            heads: 2,
            mask_count: 2,
            mlp_ratio: 4,
        }
    }

    /// Smallest config that still exercises every code path; used by the
    /// gradient checks.
    pub fn tiny() -> Self {
        ModelConfig {
            window: 5,
            embed_dim: 16,
            token_dim: 8,
            loops: 1,
            heads: 2,
            mask_count: 2,
            mlp_ratio: 4,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.window < 2 {
            return Err(ModelError::Config(format!("window {} < 2", self.window)));
        }
        if self.loops < 1 {
            return Err(ModelError::Config("loops must be >= 1".into()));
        }
        if self.heads == 0 || self.token_dim % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "token_dim {} not divisible by heads {}",
                self.token_dim, self.heads
            )));
        }
        if self.embed_dim == 0 || self.token_dim == 0 || self.mlp_ratio == 0 {
            return Err(ModelError::Config("zero dimension".into()));
        }
        if self.mask_count > MASKABLE_TOKENS {
            return Err(ModelError::Config(format!(
                "mask_count {} exceeds the {MASKABLE_TOKENS} maskable tokens",
                self.mask_count
            )));
        }
        Ok(())
    }
}

/// Group count for the regressor's group normalization: the largest divisor
/// of `channels` that is at most 32 while keeping at least 4 channels per
/// group. Tiny groups saturate the normalized values and starve gradients.
pub fn group_norm_groups(channels: usize) -> usize {
    let mut best = 1;
    for g in 1..=channels.min(32) {
        if channels % g == 0 && channels / g >= 4 {
            best = g;
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct MlpIds {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

#[derive(Clone, Copy, Debug)]
struct BlockIds {
    ln1g: usize,
    ln1b: usize,
    wq: usize,
    wk: usize,
    wv: usize,
    wo: usize,
    ln2g: usize,
    ln2b: usize,
    m1w: usize,
    m1b: usize,
    m2w: usize,
    m2b: usize,
}

#[derive(Clone, Debug)]
struct ParamIds {
    embed: MlpIds,
    reg: MlpIds,
    rot_w: usize,
    rot_b: usize,
    pos_w: usize,
    pos_b: usize,
    eif_w: usize,
    eif_b: usize,
    e_s: usize,
    e_t: usize,
    mask_embed: usize,
    stb: Vec<BlockIds>,
    ttb: Vec<BlockIds>,
    head_w1: usize,
    head_b1: usize,
    head_gng: usize,
    head_gnb: usize,
    head_w2: usize,
    head_b2: usize,
}

/// Per-window network input: raw signal rows plus the observed quantities
/// substituted into the token assembly.
#[derive(Clone, Debug)]
pub struct WindowInput<T: Real> {
    /// (t, 54) observation rows.
    pub x: Tensor<T>,
    /// (t, 3, 3, 3) observed global rotations of head, L wrist, R wrist.
    pub obs_rot: Tensor<T>,
    /// (t, 3, 3) observed positions re-expressed head-relative (head = 0).
    pub obs_pos_rel: Tensor<T>,
}

impl<T: Real> WindowInput<T> {
    /// Builds the input pack from tracking-signal rows: converts each
    /// device's observed 6D rotation to a matrix and re-expresses device
    /// positions relative to the observed head.
    pub fn from_signals(signals: &TrackingSignals) -> Result<Self, ModelError> {
        let t = signals.frames;
        let mut x = Vec::with_capacity(t * SIGNAL_WIDTH);
        for f in 0..t {
            x.extend(signals.row(f).iter().map(|&v| T::from_f64(v)));
        }
        let mut obs_rot = Vec::with_capacity(t * 3 * 9);
        let mut obs_pos = Vec::with_capacity(t * 3 * 3);
        for f in 0..t {
            let head = [
                signals.position(f, 0)[0],
                signals.position(f, 0)[1],
                signals.position(f, 0)[2],
            ];
            for d in 0..3 {
                let r6 = signals.rotation6(f, d);
                let m = gram_schmidt(&[r6[0], r6[1], r6[2], r6[3], r6[4], r6[5]])?;
                obs_rot.extend(m.iter().map(|&v| T::from_f64(v)));
                let p = signals.position(f, d);
                obs_pos.extend([
                    T::from_f64(p[0] - head[0]),
                    T::from_f64(p[1] - head[1]),
                    T::from_f64(p[2] - head[2]),
                ]);
            }
        }
        Ok(WindowInput {
            x: Tensor::new(vec![t, SIGNAL_WIDTH], x)?,
            obs_rot: Tensor::new(vec![t, 3, 3, 3], obs_rot)?,
            obs_pos_rel: Tensor::new(vec![t, 3, 3], obs_pos)?,
        })
    }
}

/// Graph handles produced by a forward pass.
pub struct ForwardVars {
    /// (t, d1) frame embeddings.
    pub h_embed: Var,
    /// (t, 22, 6) stage-1 pose.
    pub theta_init: Var,
    /// (t, 22, 6) final pose.
    pub theta: Var,
    /// (t, 22, 3) head-relative FK of the stage-1 pose, before tracked-joint
    /// substitution; reused by the stage-1 loss.
    pub p_init_headrel: Var,
    /// Token indices replaced by the mask embedding (empty in inference).
    pub masked_tokens: Vec<usize>,
}

pub struct PoseModel<T: Real> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    ids: ParamIds,
}

impl<T: Real> PoseModel<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let ids = register_params(&config, &mut store, &mut rng)?;
        Ok(PoseModel { config, store, ids })
    }

    /// Rebuilds a model around a store loaded from a checkpoint. Names and
    /// shapes must match the config's deterministic registration order.
    pub fn from_parts(config: ModelConfig, store: ParamStore<T>) -> Result<Self, ModelError> {
        config.validate()?;
        let mut probe = ParamStore::<T>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ids = register_params(&config, &mut probe, &mut rng)?;
        if probe.len() != store.len() {
            return Err(ModelError::Config(format!(
                "store has {} parameters, config requires {}",
                store.len(),
                probe.len()
            )));
        }
        for i in 0..probe.len() {
            if probe.get(i).name != store.get(i).name
                || probe.get(i).value.shape() != store.get(i).value.shape()
            {
                return Err(ModelError::Config(format!(
                    "parameter {i} mismatch: expected '{}' {:?}, found '{}' {:?}",
                    probe.get(i).name,
                    probe.get(i).value.shape(),
                    store.get(i).name,
                    store.get(i).value.shape()
                )));
            }
        }
        Ok(PoseModel { config, store, ids })
    }

    pub fn parameter_count(&self) -> usize {
        self.store.total_elems()
    }

    pub fn insert_params(&self, g: &mut Graph<T>) -> Vec<Var> {
        self.store.insert_into_graph(g)
    }

    /// Stage 1: frame-wise embedding and initial pose regression.
    /// X (t, 54) -> H_embed (t, d1), Theta_init (t, 22, 6).
    pub fn stage1_forward(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        x: Var,
    ) -> Result<(Var, Var), NnError> {
        let ids = &self.ids;
        let h = g.linear(x, p[ids.embed.w1], p[ids.embed.b1])?;
        let h = g.gelu(h)?;
        let h_embed = g.linear(h, p[ids.embed.w2], p[ids.embed.b2])?;
        let r = g.linear(h_embed, p[ids.reg.w1], p[ids.reg.b1])?;
        let r = g.gelu(r)?;
        let flat = g.linear(r, p[ids.reg.w2], p[ids.reg.b2])?;
        let theta_init = g.reshape(flat, vec![self.config.window, JOINT_COUNT, 6])?;
        Ok((h_embed, theta_init))
    }

    /// Builds the joint-level tokens: FK on the stage-1 pose, head-relative
    /// positions, relative-to-global rotations, tracked-joint substitution
    /// from the observations, then per-joint rotation/position embeddings
    /// plus the EIF token. Returns (H_init (t,44,d2), F (t,d2), and the
    /// head-relative FK positions before substitution).
    pub fn assemble_tokens(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        theta_init: Var,
        h_embed: Var,
        input: &WindowInput<T>,
        template: &SkeletonTemplate,
    ) -> Result<(Var, Var, Var), NnError> {
        let ids = &self.ids;
        let t = self.config.window;
        let rotmats = g.sixd_to_matrices(theta_init)?;
        let glob = g.fk_rotations(rotmats, template)?;
        let p_init = g.fk_positions(rotmats, None, template)?;
        let p_rel = g.sub_ref_index(p_init, HEAD)?;

        let obs_rot = g.constant(input.obs_rot.clone());
        let obs_pos = g.constant(input.obs_pos_rel.clone());
        let glob_sub = g.replace_rows(glob, &TRACKED_JOINTS, obs_rot)?;
        let pos_sub = g.replace_rows(p_rel, &TRACKED_JOINTS, obs_pos)?;

        let rot_flat = g.reshape(glob_sub, vec![t, JOINT_COUNT, 9])?;
        let h_rot = g.linear(rot_flat, p[ids.rot_w], p[ids.rot_b])?;
        let h_pos = g.linear(pos_sub, p[ids.pos_w], p[ids.pos_b])?;
        let h_init = g.concat(&[h_rot, h_pos], 1)?;
        let f = g.linear(h_embed, p[ids.eif_w], p[ids.eif_b])?;
        Ok((h_init, f, p_rel))
    }

    /// Replaces `mask_count` distinct non-protected token columns with the
    /// learned mask embedding. Returns the chosen indices.
    pub fn apply_token_mask(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        h_init: Var,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Var, Vec<usize>), NnError> {
        let indices = sample_mask_indices(self.config.mask_count, rng);
        if indices.is_empty() {
            return Ok((h_init, indices));
        }
        let t = self.config.window;
        let d2 = self.config.token_dim;
        let emb = g.broadcast_to(p[self.ids.mask_embed], vec![t, indices.len(), d2])?;
        let masked = g.replace_rows(h_init, &indices, emb)?;
        Ok((masked, indices))
    }

    /// Pre-norm transformer layer: LN -> attention -> residual,
    /// LN -> MLP -> residual.
    fn transformer_layer(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        blk: BlockIds,
        x: Var,
    ) -> Result<Var, NnError> {
        let a = g.layer_norm(x, p[blk.ln1g], p[blk.ln1b])?;
        let attn = g.multi_head_attention(
            a,
            p[blk.wq],
            p[blk.wk],
            p[blk.wv],
            p[blk.wo],
            self.config.heads,
        )?;
        let x = g.add(x, attn)?;
        let m = g.layer_norm(x, p[blk.ln2g], p[blk.ln2b])?;
        let h = g.linear(m, p[blk.m1w], p[blk.m1b])?;
        let h = g.gelu(h)?;
        let h = g.linear(h, p[blk.m2w], p[blk.m2b])?;
        g.add(x, h)
    }

    /// Spatial transformer block over one window: appends the EIF token,
    /// adds the spatial positional encoding, runs one transformer layer per
    /// frame, and drops the EIF output (the first 44 tokens survive).
    pub fn stb_forward(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        loop_idx: usize,
        h: Var,
        f: Var,
    ) -> Result<Var, NnError> {
        let t = self.config.window;
        let d2 = self.config.token_dim;
        let f_tok = g.reshape(f, vec![t, 1, d2])?;
        let s = g.concat(&[h, f_tok], 1)?;
        debug_assert_eq!(g.shape(s), &[t, SPATIAL_TOKENS, d2]);
        let s = g.add_broadcast(s, p[self.ids.e_s])?;
        let s = self.transformer_layer(g, p, self.ids.stb[loop_idx], s)?;
        g.slice(s, 1, 0, TOKENS_PER_FRAME)
    }

    /// Temporal transformer block: one transformer layer over the t frames
    /// of each feature slice, parameters shared across the 44 slices.
    pub fn ttb_forward(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        loop_idx: usize,
        h: Var,
    ) -> Result<Var, NnError> {
        let hp = g.permute(h, &[1, 0, 2])?;
        let hp = g.add_broadcast(hp, p[self.ids.e_t])?;
        let hp = self.transformer_layer(g, p, self.ids.ttb[loop_idx], hp)?;
        g.permute(hp, &[1, 0, 2])
    }

    /// n loops of (STB with the re-injected EIF token, then TTB). The
    /// positional encodings and F are the same objects at every loop.
    pub fn stacked_forward(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        h_init: Var,
        f: Var,
    ) -> Result<Var, NnError> {
        let mut h = h_init;
        for i in 0..self.config.loops {
            h = self.stb_forward(g, p, i, h, f)?;
            h = self.ttb_forward(g, p, i, h)?;
        }
        Ok(h)
    }

    /// Shared per-joint regressor: concatenates each joint's rotation and
    /// position features and applies linear -> group norm -> activation ->
    /// linear, 6 values per joint. Joint 0's output is the root orientation.
    pub fn regress_smpl(&self, g: &mut Graph<T>, p: &[Var], h_st: Var) -> Result<Var, NnError> {
        let ids = &self.ids;
        let rot_half = g.slice(h_st, 1, 0, JOINT_COUNT)?;
        let pos_half = g.slice(h_st, 1, JOINT_COUNT, TOKENS_PER_FRAME)?;
        let feats = g.concat(&[rot_half, pos_half], 2)?;
        let h = g.linear(feats, p[ids.head_w1], p[ids.head_b1])?;
        let groups = group_norm_groups(self.config.token_dim);
        let h = g.group_norm(h, groups, p[ids.head_gng], p[ids.head_gnb])?;
        let h = g.gelu(h)?;
        g.linear(h, p[ids.head_w2], p[ids.head_b2])
    }

    /// Full two-stage forward. `mask_rng` enables masked training; `None`
    /// is deterministic inference.
    pub fn forward(
        &self,
        g: &mut Graph<T>,
        p: &[Var],
        input: &WindowInput<T>,
        template: &SkeletonTemplate,
        mask_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardVars, NnError> {
        let t = self.config.window;
        if input.x.shape() != [t, SIGNAL_WIDTH] {
            return Err(NnError::shapes("forward", input.x.shape(), &[t, SIGNAL_WIDTH]));
        }
        let x = g.constant(input.x.clone());
        let (h_embed, theta_init) = self.stage1_forward(g, p, x)?;
        let (h_init, f, p_init_headrel) =
            self.assemble_tokens(g, p, theta_init, h_embed, input, template)?;
        let (h_tokens, masked_tokens) = match mask_rng {
            Some(rng) => self.apply_token_mask(g, p, h_init, rng)?,
            None => (h_init, Vec::new()),
        };
        let h_st = self.stacked_forward(g, p, h_tokens, f)?;
        let theta = self.regress_smpl(g, p, h_st)?;
        Ok(ForwardVars {
            h_embed,
            theta_init,
            theta,
            p_init_headrel,
            masked_tokens,
        })
    }

    /// Inference-mode forward returning the stage-1 and final poses as
    /// (t, 22, 6) tensors.
    pub fn full_forward(
        &self,
        input: &WindowInput<T>,
        template: &SkeletonTemplate,
    ) -> Result<(Tensor<T>, Tensor<T>), NnError> {
        let mut g = Graph::new();
        let p = self.insert_params(&mut g);
        let out = self.forward(&mut g, &p, input, template, None)?;
        Ok((g.value(out.theta_init).clone(), g.value(out.theta).clone()))
    }
}

/// Uniformly samples `count` distinct maskable token indices.
pub fn sample_mask_indices(count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..TOKENS_PER_FRAME)
        .filter(|i| !PROTECTED_TOKENS.contains(i))
        .collect();
    debug_assert_eq!(pool.len(), MASKABLE_TOKENS);
    let count = count.min(pool.len());
    // Partial Fisher-Yates.
    for i in 0..count {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

fn normal_sample(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; kept local so initialization never depends on external
    // distribution crates staying bit-stable.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

struct ParamBuilder<'s, T: Real> {
    store: &'s mut ParamStore<T>,
    rng: ChaCha8Rng,
}

impl<'s, T: Real> ParamBuilder<'s, T> {
    fn uniform(&mut self, fan_in: usize, n: usize) -> Vec<T> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        (0..n)
            .map(|_| real(self.rng.gen_range(-bound..bound)))
            .collect()
    }

    fn normal(&mut self, n: usize) -> Vec<T> {
        (0..n)
            .map(|_| real(normal_sample(&mut self.rng) * 0.02))
            .collect()
    }

    fn tensor(&mut self, name: String, t: Tensor<T>) -> Result<usize, ModelError> {
        self.store.register(name, t).map_err(ModelError::Nn)
    }

    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Result<(usize, usize), ModelError> {
        let wdata = self.uniform(fan_in, fan_in * fan_out);
        let w = self.tensor(format!("{name}.weight"), Tensor::new(vec![fan_in, fan_out], wdata)?)?;
        let bdata = self.uniform(fan_in, fan_out);
        let b = self.tensor(format!("{name}.bias"), Tensor::new(vec![fan_out], bdata)?)?;
        Ok((w, b))
    }

    fn affine(&mut self, name: &str, dim: usize) -> Result<(usize, usize), ModelError> {
        let g = self.tensor(format!("{name}.gamma"), Tensor::full(vec![dim], T::one()))?;
        let b = self.tensor(format!("{name}.beta"), Tensor::zeros(vec![dim]))?;
        Ok((g, b))
    }

    fn block(&mut self, prefix: &str, idx: usize, cfg: &ModelConfig) -> Result<BlockIds, ModelError> {
        let d2 = cfg.token_dim;
        let hidden = d2 * cfg.mlp_ratio;
        let (ln1g, ln1b) = self.affine(&format!("{prefix}.{idx}.ln1"), d2)?;
        let attn = |b: &mut Self, name: &str| -> Result<usize, ModelError> {
            let data = b.uniform(d2, d2 * d2);
            b.tensor(
                format!("{prefix}.{idx}.attn.{name}"),
                Tensor::new(vec![d2, d2], data)?,
            )
        };
        let wq = attn(self, "wq")?;
        let wk = attn(self, "wk")?;
        let wv = attn(self, "wv")?;
        let wo = attn(self, "wo")?;
        let (ln2g, ln2b) = self.affine(&format!("{prefix}.{idx}.ln2"), d2)?;
        let (m1w, m1b) = self.linear(&format!("{prefix}.{idx}.mlp.fc1"), d2, hidden)?;
        let (m2w, m2b) = self.linear(&format!("{prefix}.{idx}.mlp.fc2"), hidden, d2)?;
        Ok(BlockIds {
            ln1g,
            ln1b,
            wq,
            wk,
            wv,
            wo,
            ln2g,
            ln2b,
            m1w,
            m1b,
            m2w,
            m2b,
        })
    }
}

fn register_params<T: Real>(
    cfg: &ModelConfig,
    store: &mut ParamStore<T>,
    rng: &mut ChaCha8Rng,
) -> Result<ParamIds, ModelError> {
    let mut b = ParamBuilder {
        store,
        rng: rng.clone(),
    };
    let d1 = cfg.embed_dim;
    let d2 = cfg.token_dim;

    let (ew1, eb1) = b.linear("embed.fc1", SIGNAL_WIDTH, d1)?;
    let (ew2, eb2) = b.linear("embed.fc2", d1, d1)?;
    let (rw1, rb1) = b.linear("reg.fc1", d1, d1)?;
    let (rw2, rb2) = b.linear("reg.fc2", d1, POSE_WIDTH)?;
    // Bias the initial pose at the identity rotation: Gram-Schmidt stays
    // well-conditioned from the first step and FK starts at the rest pose.
    {
        let bias = b.store.get_mut(rb2).value.data_mut();
        for j in 0..JOINT_COUNT {
            for (c, &v) in crate::rotation::SIXD_IDENTITY.iter().enumerate() {
                bias[j * 6 + c] = real(v);
            }
        }
    }
    let (rot_w, rot_b) = b.linear("token.rot", 9, d2)?;
    let (pos_w, pos_b) = b.linear("token.pos", 3, d2)?;
    let (eif_w, eif_b) = b.linear("token.eif", d1, d2)?;
    let es_data = b.normal(SPATIAL_TOKENS * d2);
    let e_s = b.tensor(
        "pe.spatial".into(),
        Tensor::new(vec![SPATIAL_TOKENS, d2], es_data)?,
    )?;
    let et_data = b.normal(cfg.window * d2);
    let e_t = b.tensor("pe.temporal".into(), Tensor::new(vec![cfg.window, d2], et_data)?)?;
    let me_data = b.normal(d2);
    let mask_embed = b.tensor("mask.embed".into(), Tensor::new(vec![d2], me_data)?)?;

    let mut stb = Vec::with_capacity(cfg.loops);
    let mut ttb = Vec::with_capacity(cfg.loops);
    for i in 0..cfg.loops {
        stb.push(b.block("stb", i, cfg)?);
        ttb.push(b.block("ttb", i, cfg)?);
    }

    let (head_w1, head_b1) = b.linear("head.fc1", 2 * d2, d2)?;
    let (head_gng, head_gnb) = b.affine("head.gn", d2)?;
    let (head_w2, head_b2) = b.linear("head.fc2", d2, 6)?;

    Ok(ParamIds {
        embed: MlpIds {
            w1: ew1,
            b1: eb1,
            w2: ew2,
            b2: eb2,
        },
        reg: MlpIds {
            w1: rw1,
            b1: rb1,
            w2: rw2,
            b2: rb2,
        },
        rot_w,
        rot_b,
        pos_w,
        pos_b,
        eif_w,
        eif_b,
        e_s,
        e_t,
        mask_embed,
        stb,
        ttb,
        head_w1,
        head_b1,
        head_gng,
        head_gnb,
        head_w2,
        head_b2,
    })
}
