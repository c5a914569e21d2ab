//! Adam optimizer with bias correction.

use crate::nn::params::ParamStore;
use crate::nn::tensor::Tensor;
use crate::nn::NnError;
use crate::real::{real, Real};

/// Per-parameter first/second moment accumulators plus hyperparameters.
#[derive(Clone, Debug)]
pub struct AdamState<T: Real> {
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(store: &ParamStore<T>) -> Self {
        AdamState {
            beta1: real(0.9),
            beta2: real(0.999),
            epsilon: real(1e-8),
            m: store
                .iter()
                .map(|p| Tensor::zeros(p.value.shape().to_vec()))
                .collect(),
            v: store
                .iter()
                .map(|p| Tensor::zeros(p.value.shape().to_vec()))
                .collect(),
        }
    }
}

/// One Adam update over every parameter. Requires populated gradients;
/// clears them and increments the store's step counter.
pub fn adam_step<T: Real>(
    store: &mut ParamStore<T>,
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<(), NnError> {
    for idx in 0..store.len() {
        if store.get(idx).grad.is_none() {
            return Err(NnError::MissingGrad(store.get(idx).name.clone()));
        }
    }
    store.bump_step();
    let t = store.step();
    let lr: T = real(lr);
    let one = T::one();
    let bc1 = one - state.beta1.powi(t as i32);
    let bc2 = one - state.beta2.powi(t as i32);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    for idx in 0..store.len() {
        let grad = store.get_mut(idx).grad.take().expect("checked above");
        let p = store.get_mut(idx);
        let m = state.m[idx].data_mut();
        let v = state.v[idx].data_mut();
        let w = p.value.data_mut();
        for i in 0..w.len() {
            let g = grad.data()[i];
            m[i] = b1 * m[i] + (one - b1) * g;
            v[i] = b2 * v[i] + (one - b2) * g * g;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            w[i] = w[i] - lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_leave_parameters_unchanged() {
        let mut store = ParamStore::<f64>::new();
        store
            .register("w", Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap())
            .unwrap();
        let mut state = AdamState::new(&store);
        store.zero_grads();
        adam_step(&mut store, &mut state, 0.1).unwrap();
        assert_eq!(store.get(0).value.data(), &[1.0, -2.0, 0.5]);
        assert_eq!(store.step(), 1);
        assert!(store.get(0).grad.is_none(), "grads cleared");
    }

    #[test]
    fn missing_grad_is_an_error() {
        let mut store = ParamStore::<f64>::new();
        store.register("w", Tensor::scalar(1.0)).unwrap();
        let mut state = AdamState::new(&store);
        assert!(matches!(
            adam_step(&mut store, &mut state, 0.1),
            Err(NnError::MissingGrad(_))
        ));
    }

    #[test]
    fn descends_a_quadratic() {
        // One step on f(w) = w^2 at w = 1 moves downhill.
        let mut store = ParamStore::<f64>::new();
        store.register("w", Tensor::scalar(1.0)).unwrap();
        let mut state = AdamState::new(&store);
        store.zero_grads();
        store
            .accumulate_grad(0, &Tensor::scalar(2.0))
            .unwrap();
        adam_step(&mut store, &mut state, 0.1).unwrap();
        let w = store.get(0).value.scalar_value();
        assert!(w < 1.0, "w should decrease, got {w}");

        // 500 steps on f(w) = (w - 3)^2 converge close to 3. This is a
        // frozen reference run of the standard scalar recursion.
        let mut store = ParamStore::<f64>::new();
        store.register("w", Tensor::scalar(0.0)).unwrap();
        let mut state = AdamState::new(&store);
        for _ in 0..500 {
            let w = store.get(0).value.scalar_value();
            store.zero_grads();
            store
                .accumulate_grad(0, &Tensor::scalar(2.0 * (w - 3.0)))
                .unwrap();
            adam_step(&mut store, &mut state, 0.1).unwrap();
        }
        let w = store.get(0).value.scalar_value();
        assert!((w - 3.0).abs() < 1e-2, "converged to {w}");
    }
}
