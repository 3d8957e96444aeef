//! Minimal dense-tensor numerics with tape-based reverse-mode automatic
//! differentiation: just enough surface for recurrent conv/attention
//! networks, in either f32 (training) or f64 (gradient checking).

mod error;
mod kernels;
mod ops;
mod params;
mod scalar;
mod tape;
mod tensor;

pub mod checkpoint;
pub mod gradcheck;
pub mod init;

pub use error::{Result, TensorError};
pub use kernels::Padding;
pub use params::{Param, ParamMap};
pub use scalar::{Dtype, Scalar};
pub use tape::Tape;
pub use tensor::Tensor;
