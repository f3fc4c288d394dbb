//! Minimal deterministic neural kernel: dense layers, ReLU, softmax, KL
//! loss, reverse-mode gradients, Adam, and seeded initialization.

mod adam;
mod dense;
mod loss;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use dense::DenseLayer;
pub use loss::{
    kl_loss, kl_softmax_backward, relu, relu_in_place, softmax, softmax_backward,
    softmax_in_place, PROB_FLOOR,
};
pub use rng::{derive_seed, splitmix64, RngStream};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Anything that owns trainable tensors in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn tensor_shapes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    /// All parameters concatenated in tensor order.
    fn flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    /// Mutable access to the parameter at a flat index.
    fn param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for t in self.tensors_mut() {
            if index < t.len() {
                return Some(&mut t[index]);
            }
            index -= t.len();
        }
        None
    }
}

/// Adam step over any parameter container with a same-shaped gradient.
pub fn adam_step<P: Parameters>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState,
) -> Result<(), NnError> {
    let g = grads.tensors();
    let mut p = params.tensors_mut();
    state.step(&mut p, &g)
}
