//! Differentiable numeric core: tensors with reverse-mode gradients, the
//! layer primitives the model needs, parameter storage, and Adam.

pub mod adam;
pub mod gradcheck;
pub mod graph;
pub mod motion_ops;
pub mod ops;
pub mod params;
pub mod tensor;


pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{Grads, Graph, Var};
pub use params::ParamStore;
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("graph error: {0}")]
    Graph(String),
    #[error("missing gradient for parameter '{0}'")]
    MissingGrad(String),
    #[error("degenerate rotation input: {0}")]
    Degenerate(String),
}

impl NnError {
    pub(crate) fn shapes(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        NnError::ShapeMismatch {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }
}
