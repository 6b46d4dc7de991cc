//! Solvers and numerics for multi-task linear regression under a shared
//! low-rank representation.
//!
//! Every task `t` observes `y_t = X_t θ_t + ε_t` and the stacked coefficient
//! matrix `Θ = [θ_1, …, θ_T]ᵀ` factors as `W·B` with `B` an `s × d` matrix
//! with orthonormal rows. The crate provides:
//!
//! * [`linalg`]: dense matrices, Householder QR, one-sided Jacobi SVD,
//!   symmetric eigen-decomposition and pseudo-inverses;
//! * [`model`]: task data, coefficient types and the block-diagonal operator;
//! * [`synthetic`]: the seeded Gaussian data-generating process;
//! * [`metasp`]: the iterative hard-thresholding subspace pursuit solver;
//! * [`baselines`]: method of moments, alternating minimization, factored
//!   gradient descent and nuclear-norm proximal gradient;
//! * [`metrics`]: coefficient and subspace distances plus runtime checks of
//!   the restricted isometry and contraction bounds;
//! * [`adaptation`]: test-task adaptation, the four-stage split protocol and
//!   feature preprocessing.
//!
//! The crate is `no_std` and only needs `alloc`. Wall-clock measurements are
//! injected through the [`Clock`] trait.

#![no_std]

extern crate alloc;

pub mod adaptation;
pub mod baselines;
mod clock;
mod error;
pub mod linalg;
pub mod metasp;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod solver;
pub mod synthetic;

pub use clock::{Clock, NoClock};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{
    Coefficients, FactoredCoefficients, GroundTruth, MultiTaskDataset, Subspace, TaskData,
};
pub use solver::{FitContext, FitResult, IterationTrace, Method};
