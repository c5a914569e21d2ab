//! Checkpoint file: a JSON manifest (schema version, configs, iteration,
//! seed) followed by a named tensor table with row-major little-endian f32
//! payloads.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{ModelConfig, PoseModel};
use crate::nn::params::ParamStore;
use crate::nn::tensor::Tensor;
use crate::runtime::train::TrainConfig;
use crate::runtime::RuntimeError;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

const MAGIC: &[u8; 4] = b"SPPK";
const DTYPE_F32: u8 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub train: Option<TrainConfig>,
    pub iteration: u64,
    pub seed: u64,
}

impl CheckpointManifest {
    pub fn new(model: ModelConfig, iteration: u64, seed: u64) -> Self {
        CheckpointManifest {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            model,
            train: None,
            iteration,
            seed,
        }
    }
}

pub fn save_checkpoint(
    model: &PoseModel<f32>,
    manifest: &CheckpointManifest,
    path: impl AsRef<Path>,
) -> Result<(), RuntimeError> {
    std::fs::write(path, encode(model, manifest)?)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], RuntimeError> {
        if self.pos + n > self.buf.len() {
            return Err(RuntimeError::Schema(format!(
                "truncated checkpoint while reading {what} at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, RuntimeError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, RuntimeError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8, RuntimeError> {
        Ok(self.take(1, what)?[0])
    }
}

fn read_store(bytes: &[u8]) -> Result<(CheckpointManifest, ParamStore<f32>), RuntimeError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(RuntimeError::Schema("bad magic bytes".into()));
    }
    let version = r.u32("format version")?;
    if version != CHECKPOINT_SCHEMA_VERSION {
        return Err(RuntimeError::Schema(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mlen = r.u64("manifest length")? as usize;
    let manifest: CheckpointManifest = serde_json::from_slice(r.take(mlen, "manifest")?)
        .map_err(|e| RuntimeError::Schema(format!("manifest parse: {e}")))?;
    if manifest.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(RuntimeError::Schema(format!(
            "unsupported manifest schema version {}",
            manifest.schema_version
        )));
    }
    let count = r.u32("tensor count")? as usize;
    let mut store = ParamStore::new();
    for i in 0..count {
        let nlen = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(nlen, "name")?)
            .map_err(|e| RuntimeError::Schema(format!("tensor {i} name not utf8: {e}")))?
            .to_string();
        let dtype = r.u8("dtype")?;
        if dtype != DTYPE_F32 {
            return Err(RuntimeError::Schema(format!(
                "tensor '{name}': unsupported dtype {dtype}"
            )));
        }
        let ndim = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32("dimension")? as usize);
        }
        let elems: usize = shape.iter().product();
        let raw = r.take(elems * 4, "tensor payload")?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store
            .register(name, Tensor::new(shape, data).map_err(RuntimeError::Nn)?)
            .map_err(RuntimeError::Nn)?;
    }
    if r.pos != bytes.len() {
        return Err(RuntimeError::Schema(format!(
            "{} trailing bytes after tensor table",
            bytes.len() - r.pos
        )));
    }
    Ok((manifest, store))
}

/// Loads a checkpoint, building the model from the manifest's config.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(PoseModel<f32>, CheckpointManifest), RuntimeError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (manifest, store) = read_store(&bytes)?;
    let model = PoseModel::from_parts(manifest.model.clone(), store)
        .map_err(|e| RuntimeError::ShapeMismatch(e.to_string()))?;
    Ok((model, manifest))
}

/// Loads checkpoint parameters into an existing model; the stored config
/// and every tensor shape must match.
pub fn load_checkpoint_into(
    model: &mut PoseModel<f32>,
    path: impl AsRef<Path>,
) -> Result<CheckpointManifest, RuntimeError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (manifest, store) = read_store(&bytes)?;
    if manifest.model != model.config {
        return Err(RuntimeError::ShapeMismatch(format!(
            "checkpoint config {:?} does not match model config {:?}",
            manifest.model, model.config
        )));
    }
    let loaded = PoseModel::from_parts(manifest.model.clone(), store)
        .map_err(|e| RuntimeError::ShapeMismatch(e.to_string()))?;
    model.store = loaded.store;
    Ok(manifest)
}

/// Serializes a checkpoint into a writer (used for in-memory byte
/// comparisons in tests).
pub fn write_checkpoint_bytes(
    model: &PoseModel<f32>,
    manifest: &CheckpointManifest,
    w: &mut impl Write,
) -> Result<(), RuntimeError> {
    w.write_all(&encode(model, manifest)?)?;
    Ok(())
}

fn encode(
    model: &PoseModel<f32>,
    manifest: &CheckpointManifest,
) -> Result<Vec<u8>, RuntimeError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_SCHEMA_VERSION.to_le_bytes());
    let manifest_bytes =
        serde_json::to_vec(manifest).map_err(|e| RuntimeError::Schema(e.to_string()))?;
    out.extend_from_slice(&(manifest_bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(&manifest_bytes);
    out.extend_from_slice(&(model.store.len() as u32).to_le_bytes());
    for p in model.store.iter() {
        let name = p.name.as_bytes();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        out.push(DTYPE_F32);
        out.push(p.value.shape().len() as u8);
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}
