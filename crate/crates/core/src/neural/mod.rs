//! A small from-scratch deep-learning kernel: tensors, layers with exact
//! backward passes, softmax cross-entropy and Adam.

mod adam;
pub mod layers;
mod loss;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState, DEFAULT_LR};
pub use layers::{Layer, LayerSpec, Sequential, SequentialCache};
pub use loss::softmax_cross_entropy;
pub use tensor::Tensor;
