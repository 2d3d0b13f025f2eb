//! Simulation, low-degree approximation and learning tools for shallow
//! quantum circuits built from single-qubit gates and multi-qubit CZ gates.
//!
//! Everything is dense and exact up to floating point; sizes are capped by
//! [`config::max_qubits`].

pub mod circuit;
pub mod config;
pub mod dilation;
pub mod error;
pub mod learner;
pub mod linalg;
pub mod lowdeg;
pub mod minimax;
pub mod pauli;
pub mod random;
pub mod reduction;
pub mod shadow;

pub use circuit::{ChannelSpec, ChoiObject, Layer, Qac0Circuit};
pub use error::{Error, Result};
pub use linalg::{norm, partial_trace, psd_sqrt, tensor, DenseOperator, NormKind, C64};
pub use pauli::{PauliExpansion, PauliString};
