//! Competing estimators. All of them return the same [`FitResult`](crate::FitResult) as the
//! subspace pursuit solver.
//!
//! Randomly initialized methods draw their starting point from a ChaCha8
//! stream seeded by the config's `seed`.

mod altmin;
mod bm;
mod mom;
mod nuc;

pub use altmin::{altmin_fit, altmingd_fit, AltMinConfig, AltMinGdConfig};
pub use bm::{bm_fit, bm_gradient, BmConfig};
pub use mom::{moment_matrix, mom_fit, MomEstimate};
pub(crate) use mom::mom_fit_full;
pub use nuc::{default_reg_coeff, nuc_fit, soft_threshold_singular_values, NucConfig};

use alloc::vec::Vec;

use crate::adaptation::adapt_task;
use crate::linalg::Matrix;
use crate::model::{MultiTaskDataset, Subspace};

/// Per-task least-squares weights given a basis; row `t` of the result is
/// `w_t`. The flag reports a pseudo-inverse fallback on any task.
pub(crate) fn least_squares_weights(dataset: &MultiTaskDataset, b: &Subspace) -> (Matrix, bool) {
    let s = b.rank();
    let mut w = Matrix::zeros(dataset.task_count(), s);
    let mut degenerate = false;
    for (t, task) in dataset.tasks().iter().enumerate() {
        let fit = adapt_task(b, task).expect("task dimension matches dataset");
        degenerate |= fit.degenerate;
        w.row_mut(t).copy_from_slice(&fit.weights);
    }
    (w, degenerate)
}

/// `X_tᵀ·r_t` for every task, stacked as rows.
pub(crate) fn residual_correlations(dataset: &MultiTaskDataset, theta: &Matrix) -> (Matrix, f64) {
    let mut out = Matrix::zeros(dataset.task_count(), dataset.dim());
    let mut loss = 0.0;
    for (t, task) in dataset.tasks().iter().enumerate() {
        let r: Vec<f64> = task.residual(theta.row(t));
        loss += crate::linalg::dot(&r, &r);
        out.row_mut(t)
            .copy_from_slice(&task.design().transpose_matvec(&r));
    }
    (out, loss)
}
