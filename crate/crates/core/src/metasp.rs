//! Meta subspace pursuit: iterative hard thresholding on the stacked
//! coefficient matrix.
//!
//! Each iteration takes one gradient step per task,
//! `θ̂_t = θ_t + (γ/m_t)·X_tᵀ(y_t − X_t·θ_t)`, projects the stacked `Θ̂` onto
//! matrices of rank at most `s` by truncating its SVD, and reads the
//! representation off the top `s` right singular vectors. Iterates start at
//! zero.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{right_singular_system, Matrix};
use crate::model::{loss_unchecked, Coefficients, MultiTaskDataset, Subspace, TaskData};
use crate::solver::{FitContext, FitResult, Tracer};

#[derive(Debug, Clone, PartialEq)]
pub struct MetaSpConfig {
    pub rank: usize,
    /// Step size `γ`. Convergence guarantees cover `γ ≤ 1`; larger values
    /// are accepted and reported by [`MetaSpConfig::within_theory`].
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once `‖Θ⁽ᵏ⁺¹⁾ − Θ⁽ᵏ⁾‖_F / ‖Θ⁽ᵏ⁾‖_F` falls below this.
    pub rel_tol: f64,
}

impl MetaSpConfig {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;

    pub fn new(rank: usize, step_size: f64, max_iters: usize) -> Self {
        Self {
            rank,
            step_size,
            max_iters,
            rel_tol: Self::DEFAULT_REL_TOL,
        }
    }

    pub fn within_theory(&self) -> bool {
        self.step_size <= 1.0
    }

    fn validate(&self, dataset: &MultiTaskDataset) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::invalid("step size must be finite and > 0"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::invalid("rel_tol must be >= 0"));
        }
        check_rank(self.rank, dataset)
    }
}

pub(crate) fn check_rank(rank: usize, dataset: &MultiTaskDataset) -> Result<()> {
    let k = dataset.task_count().min(dataset.dim());
    if rank == 0 || rank > k {
        return Err(Error::invalid(alloc::format!(
            "rank {rank} outside 1..={k} (T = {}, d = {})",
            dataset.task_count(),
            dataset.dim()
        )));
    }
    Ok(())
}

/// One gradient step on a single task, with `m = task.samples()`.
pub fn gd_step(task: &TaskData, theta_t: &[f64], gamma: f64) -> Result<Vec<f64>> {
    Error::check_dim("gd_step coefficient length", task.dim(), theta_t.len())?;
    Ok(gd_step_unchecked(task, theta_t, gamma))
}

fn gd_step_unchecked(task: &TaskData, theta_t: &[f64], gamma: f64) -> Vec<f64> {
    let r = task.residual(theta_t);
    let g = task.design().transpose_matvec(&r);
    let c = gamma / task.samples() as f64;
    theta_t.iter().zip(g).map(|(t, gi)| t + c * gi).collect()
}

/// Best rank-`s` approximation together with its row space.
#[derive(Debug, Clone)]
pub struct Thresholded {
    pub coefficients: Coefficients,
    pub subspace: Subspace,
    /// The `s` retained singular values.
    pub singular_values: Vec<f64>,
    /// Input was zero; `subspace` is then the canonical frame.
    pub degenerate: bool,
}

/// `H_s(Θ̂)`: keeps the `s` leading singular triplets. The returned subspace
/// has the top `s` right singular vectors as rows.
pub fn hard_threshold(theta_hat: &Coefficients, s: usize) -> Result<Thresholded> {
    let m = theta_hat.theta();
    let k = m.rows().min(m.cols());
    if s == 0 || s > k {
        return Err(Error::invalid(alloc::format!("rank {s} outside 1..={k}")));
    }
    Ok(hard_threshold_matrix(m, s))
}

pub(crate) fn hard_threshold_matrix(m: &Matrix, s: usize) -> Thresholded {
    let (sigma, v) = right_singular_system(m);
    let vs = v.leading_columns(s);
    let degenerate = sigma[0] == 0.0;
    let (theta, basis) = if degenerate {
        (Matrix::zeros(m.rows(), m.cols()), Matrix::identity(m.cols()).leading_rows(s))
    } else {
        // U_s·D_s·V_sᵀ = Θ̂·V_s·V_sᵀ
        (m.matmul(&vs).matmul_transpose(&vs), vs.transpose())
    };
    Thresholded {
        coefficients: Coefficients { theta },
        subspace: Subspace::from_basis_unchecked(basis),
        singular_values: sigma[..s].to_vec(),
        degenerate,
    }
}

/// Runs meta subspace pursuit from the zero initialization.
pub fn fit(dataset: &MultiTaskDataset, cfg: &MetaSpConfig, ctx: FitContext<'_>) -> Result<FitResult> {
    cfg.validate(dataset)?;
    let (tasks, dim) = (dataset.task_count(), dataset.dim());
    let mut tracer = Tracer::new(ctx);
    let mut theta = Matrix::zeros(tasks, dim);
    let mut subspace = Subspace::canonical(cfg.rank, dim);
    let mut degenerate = true;
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iters {
        let mut theta_hat = Matrix::zeros(tasks, dim);
        for (t, task) in dataset.tasks().iter().enumerate() {
            let row = gd_step_unchecked(task, theta.row(t), cfg.step_size);
            theta_hat.row_mut(t).copy_from_slice(&row);
        }
        if !theta_hat.is_finite() {
            return Err(diverged(k, theta, subspace, tracer, degenerate));
        }
        let step = hard_threshold_matrix(&theta_hat, cfg.rank);
        let new_theta = step.coefficients.theta;
        let loss = loss_unchecked(dataset, &new_theta);
        if !loss.is_finite() {
            return Err(diverged(k, theta, subspace, tracer, degenerate));
        }
        let change = new_theta.sub(&theta).frobenius_norm();
        let scale = theta.frobenius_norm().max(1e-30);
        theta = new_theta;
        subspace = step.subspace;
        degenerate = step.degenerate;
        iterations = k;
        tracer.record(k, loss, &theta, Some(&subspace));
        if change / scale < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        coefficients: Coefficients { theta },
        subspace,
        trace: tracer.rows,
        iterations,
        converged,
        degenerate,
    })
}

fn diverged(
    iteration: usize,
    theta: Matrix,
    subspace: Subspace,
    tracer: Tracer<'_>,
    degenerate: bool,
) -> Error {
    Error::Diverged {
        iteration,
        last: Some(Box::new(FitResult {
            coefficients: Coefficients { theta },
            subspace,
            trace: tracer.rows,
            iterations: iteration - 1,
            converged: false,
            degenerate,
        })),
    }
}
