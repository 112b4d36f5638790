//! Hybrid quantum-classical regression: a statevector simulator with
//! differentiable circuit layers, circuit descriptors, a truncated Fock-space
//! photonic backend, and the tabular data pipeline that feeds them.

pub mod ansatz;
pub mod circuit;
pub mod data;
pub mod descriptors;
pub mod encodings;
pub mod error;
pub mod fock;
pub mod gradients;
pub mod model;
pub mod statevector;

pub use error::{QnnError, Result};
