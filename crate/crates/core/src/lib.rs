//! Hybrid quantum-classical image classifiers.
//!
//! A small convolutional network feeds four rotation angles into an exactly
//! simulated 4-qubit parametrized circuit; the 16 basis-state probabilities
//! it produces are mapped to class scores by a dense layer. Everything is
//! trained end to end, with parameter-shift derivatives through the circuit.
//!
//! Modules, bottom-up:
//! - [`statevector`]: complex statevector simulation (H, Ry, CNOT).
//! - [`circuits`]: the three 4-qubit circuits, readout and Jacobians.
//! - [`neural`]: tensors, layers with backprop, cross-entropy, Adam.
//! - [`hybrid`]: model assembly, training, evaluation, checkpoints,
//!   coarse-to-fine routing.
//! - [`datasets`]: image folders, stratified splits, synthetic data.
//! - [`metrics`]: confusion matrices and classification reports.
//! - [`cli`]: config-driven command implementations.

pub mod circuits;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod hybrid;
pub mod metrics;
pub mod neural;
pub mod statevector;
mod util;

pub use error::{Error, Result};
