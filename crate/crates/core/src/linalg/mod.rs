//! Dense linear-algebra primitives.
//!
//! All routines are pure functions of their inputs. Singular vectors are only
//! ever consumed through the spans they define, so ties among equal singular
//! values may resolve to any orthonormal basis of the shared subspace.

mod eigen;
mod matrix;
mod qr;
mod solve;
mod svd;

pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use matrix::{axpy, dot, norm, Matrix};
pub use solve::{
    cholesky_solve, lq, numerical_rank, orthonormalize_rows, pseudo_inverse, solve_psd, PINV_RTOL,
};
pub use svd::{singular_values, spectral_norm, svd, truncated_svd, TruncatedSvd};

pub(crate) use svd::right_singular_system;
