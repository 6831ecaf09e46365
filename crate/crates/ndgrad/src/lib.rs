//! Reverse-mode automatic differentiation over dense tensors, sized for
//! image-restoration experiments rather than general deep learning.
//!
//! The building blocks:
//!
//! - [`Tensor`]: a dense row-major array of `f32` or `f64` with explicit shape.
//! - [`Graph`] / [`Var`]: a Wengert tape of operations. Every op records a
//!   closure that maps the upstream gradient to per-parent contributions;
//!   [`Graph::backward`] replays the tape in reverse creation order.
//! - Periodic 2-D image ops: convolution (direct and FFT-based), subsampling
//!   with exact zero-insertion adjoint, bicubic resampling on the torus,
//!   cyclic shifts and crops.
//! - [`check::finite_diff_check`]: central-difference validation of gradients.
//!
//! All image ops treat the domain as periodic: indices wrap modulo the extent
//! and adjoints are exact, which keeps operator/adjoint pairs honest to
//! near machine precision instead of "up to boundary effects".
//!
//! Precision is a type parameter everywhere. Tests and spectral checks run in
//! `f64`; training runs in `f32`. There is no global state and no implicit
//! conversion between the two.

#![forbid(unsafe_code)]

pub mod check;
mod error;
pub mod fft;
mod graph;
mod scalar;
mod tensor;

pub mod ops;

pub use error::{NdError, NdResult};
pub use graph::{Gradients, Graph, Var};
pub use scalar::{DType, Scalar};
pub use tensor::Tensor;
