//! Recorded computation graph with reverse-mode differentiation.
//!
//! Nodes are appended in topological order as ops execute; `backward` walks
//! them in reverse, accumulating adjoints. Each graph is built per forward
//! pass and owned by one thread, so batches can run data-parallel with
//! deterministic, sample-ordered gradient reduction outside the graph.

use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::{real, Real};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

pub(crate) type BackFn<T> = Box<dyn Fn(&Tensor<T>, &Values<'_, T>, &mut Grads<T>) + Send>;

pub(crate) struct Node<T: Real> {
    pub(crate) value: Tensor<T>,
    pub(crate) needs_grad: bool,
    pub(crate) back: Option<BackFn<T>>,
}

/// Read-only view of node values during the backward pass.
pub struct Values<'g, T: Real>(pub(crate) &'g [Node<T>]);

impl<'g, T: Real> Values<'g, T> {
    #[inline]
    pub fn get(&self, v: Var) -> &Tensor<T> {
        &self.0[v.0].value
    }
}

/// Adjoint buffers, indexed by node id. Accumulation into nodes that do not
/// require gradients is silently dropped.
pub struct Grads<T: Real> {
    slots: Vec<Option<Tensor<T>>>,
    needs: Vec<bool>,
}

impl<T: Real> Grads<T> {
    #[inline]
    pub fn needs(&self, v: Var) -> bool {
        self.needs[v.0]
    }

    pub fn accumulate(&mut self, v: Var, g: Tensor<T>) {
        if !self.needs[v.0] {
            return;
        }
        match &mut self.slots[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.slots[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.slots[v.0].take()
    }
}

pub struct Graph<T: Real> {
    pub(crate) nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf that does not require gradients (inputs, ground truth, masks).
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, false, None)
    }

    /// Leaf that requires gradients (parameters).
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, true, None)
    }

    #[inline]
    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    #[inline]
    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value helper for loss nodes.
    pub fn scalar_value(&self, v: Var) -> f64 {
        self.nodes[v.0].value.scalar_value().to_f64()
    }

    pub(crate) fn needs_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Id the next pushed node will get; lets backward closures read their
    /// own output through [`Values`].
    pub(crate) fn next_id(&self) -> Var {
        Var(self.nodes.len())
    }

    pub(crate) fn push(&mut self, value: Tensor<T>, needs_grad: bool, back: Option<BackFn<T>>) -> Var {
        let id = Var(self.nodes.len());
        self.nodes.push(Node {
            value,
            needs_grad,
            back,
        });
        id
    }

    /// Reverse-mode sweep from a scalar loss. Returns the adjoint buffers;
    /// leaf gradients stay available, interior ones are dropped as soon as
    /// they have been propagated.
    pub fn backward(&self, loss: Var) -> Result<Grads<T>, NnError> {
        let loss_node = &self.nodes[loss.0];
        if loss_node.value.elems() != 1 {
            return Err(NnError::Graph(format!(
                "backward requires a scalar loss, got shape {:?}",
                loss_node.value.shape()
            )));
        }
        let mut grads = Grads {
            slots: (0..self.nodes.len()).map(|_| None).collect(),
            needs: self.nodes.iter().map(|n| n.needs_grad).collect(),
        };
        if !loss_node.needs_grad {
            // Loss does not depend on any parameter; nothing to do.
            return Ok(grads);
        }
        grads.accumulate(
            loss,
            Tensor::with_shape_unchecked(loss_node.value.shape().to_vec(), vec![real(1.0)]),
        );
        let values = Values(&self.nodes);
        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            match &node.back {
                Some(back) => {
                    // Interior node: propagate and drop its adjoint.
                    if let Some(g) = grads.take(Var(id)) {
                        back(&g, &values, &mut grads);
                    }
                }
                None => {} // leaf: keep the adjoint for the caller
            }
        }
        Ok(grads)
    }
}
