//! Minimal dense arrays for small convolutional and graph models: layer
//! kernels, tape-based reverse-mode gradients, Adam, a portable seeded PRNG
//! and the `PSNT` tensor file format.

pub mod adam;
pub mod error;
pub mod gradcheck;
pub mod ops;
pub mod param;
pub mod psnt;
pub mod real;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use adam::{Adam, AdamConfig};
pub use error::{Result, TensorError};
pub use ops::{Activation, LossKind};
pub use param::{ParamSet, Parameter};
pub use real::Real;
pub use rng::{derive_seed, Rng};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
