//! Named parameter storage shared by the model, optimizer, and checkpoints.

use std::collections::HashMap;

use crate::nn::graph::{Graph, Var};
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::Real;

#[derive(Clone, Debug)]
pub struct Param<T: Real> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Option<Tensor<T>>,
}

/// Registration order is the canonical parameter order everywhere: graph
/// insertion, gradient reduction, optimizer state, and checkpoints.
#[derive(Clone, Debug)]
pub struct ParamStore<T: Real> {
    params: Vec<Param<T>>,
    index: HashMap<String, usize>,
    step: u64,
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            index: HashMap::new(),
            step: 0,
        }
    }

    pub fn register(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<usize, NnError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(NnError::Graph(format!("duplicate parameter name '{name}'")));
        }
        let idx = self.params.len();
        self.index.insert(name.clone(), idx);
        self.params.push(Param {
            name,
            value,
            grad: None,
        });
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn total_elems(&self) -> usize {
        self.params.iter().map(|p| p.value.elems()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn bump_step(&mut self) {
        self.step += 1;
    }

    pub fn get(&self, idx: usize) -> &Param<T> {
        &self.params[idx]
    }

    pub fn get_mut(&mut self, idx: usize) -> &mut Param<T> {
        &mut self.params[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.params.iter_mut()
    }

    /// Initializes every gradient buffer to zeros.
    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad = Some(Tensor::zeros(p.value.shape().to_vec()));
        }
    }

    /// Drops all gradient buffers.
    pub fn clear_grads(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    pub fn accumulate_grad(&mut self, idx: usize, g: &Tensor<T>) -> Result<(), NnError> {
        let p = &mut self.params[idx];
        if g.shape() != p.value.shape() {
            return Err(NnError::shapes("accumulate_grad", p.value.shape(), g.shape()));
        }
        match &mut p.grad {
            Some(existing) => existing.add_assign(g),
            slot @ None => *slot = Some(g.clone()),
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.all_finite())
    }

    /// Inserts every parameter into a graph as a gradient-requiring leaf,
    /// in registration order.
    pub fn insert_into_graph(&self, g: &mut Graph<T>) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| g.param(p.value.clone()))
            .collect()
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: p.value.cast::<U>(),
                    grad: None,
                })
                .collect(),
            index: self.index.clone(),
            step: self.step,
        }
    }
}
