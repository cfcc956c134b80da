//! Maximal dimensions of irreducible representations of the symmetric group.
//!
//! The crate computes `d_N = max dim λ` exactly for moderate `N`, evaluates the
//! exact energy decomposition of `log ∏ h²` around the limit shape, solves the
//! local slope-`ρ` log-gas problem, builds near-optimal global shapes, and
//! estimates the constant governing `d_N = √(N!)·exp(−(𝔡 + o(1))√N)`.

pub mod error;
pub mod estimate;
pub mod functionals;
pub mod global_build;
pub mod local_gas;
pub mod maxdim;
pub mod partitions;
pub mod quadrature;
pub mod scalar;
pub mod shape;
pub mod special;

pub use error::{Error, Result};
pub use partitions::{BigDim, Partition, StepFunction};
pub use scalar::{Real, Slope};

/// Double-precision instantiations of the generic kernels.
pub type ShapeEval64 = shape::ShapeEval<f64>;
pub type LocalKernel64 = local_gas::LocalKernel<f64>;
pub type LocalKernel32 = local_gas::LocalKernel<f32>;
pub type QuadratureConfig64 = functionals::QuadratureConfig<f64>;
