//! Burer-Monteiro factored gradient descent on `L(W·B)`.
//!
//! `W` and `B` are updated simultaneously. The weight block uses the per-task
//! normalized loss `‖y_t − X_t·Bᵀ·w_t‖²/(2m_t)` and the basis block the
//! pooled `L/(2N)`, so both blocks have curvature of order one and a single
//! step size serves both.

use alloc::boxed::Box;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::residual_correlations;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_rows, Matrix};
use crate::metasp::check_rank;
use crate::model::{Coefficients, MultiTaskDataset, Subspace};
use crate::solver::{FitContext, FitResult, Tracer};

#[derive(Debug, Clone, PartialEq)]
pub struct BmConfig {
    pub rank: usize,
    pub step_size: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl BmConfig {
    pub fn new(rank: usize, step_size: f64, max_iters: usize, seed: u64) -> Self {
        Self {
            rank,
            step_size,
            max_iters,
            rel_tol: 1e-12,
            seed,
        }
    }
}

/// Gradients `(∇_W, ∇_B)` of the block-normalized objective together with
/// the raw loss `L(W·B)`.
pub fn bm_gradient(dataset: &MultiTaskDataset, w: &Matrix, b: &Matrix) -> (Matrix, Matrix, f64) {
    let theta = w.matmul(b);
    let (corr, loss) = residual_correlations(dataset, &theta);
    let n = dataset.total_samples() as f64;
    // ∇_{w_t} = −(1/m_t)·B·X_tᵀr_t
    let mut gw = corr.matmul_transpose(b);
    for (t, task) in dataset.tasks().iter().enumerate() {
        let c = -1.0 / task.samples() as f64;
        for v in gw.row_mut(t) {
            *v *= c;
        }
    }
    // ∇_B = −(1/N)·Σ_t w_t·(X_tᵀr_t)ᵀ
    let gb = w.transpose_matmul(&corr).scale(-1.0 / n);
    (gw, gb, loss)
}

/// Factored gradient descent from a random Gaussian start:
/// `W ~ N(0, 1)`, `B ~ N(0, 1/d)` entrywise.
pub fn bm_fit(dataset: &MultiTaskDataset, cfg: &BmConfig, ctx: FitContext<'_>) -> Result<FitResult> {
    check_rank(cfg.rank, dataset)?;
    if !(cfg.step_size.is_finite() && cfg.step_size > 0.0) {
        return Err(Error::invalid("step size must be finite and > 0"));
    }
    let (tasks, dim, s) = (dataset.task_count(), dataset.dim(), cfg.rank);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = 1.0 / libm::sqrt(dim as f64);
    let mut w = Matrix::from_fn(tasks, s, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut b = Matrix::from_fn(s, dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let mut theta = w.matmul(&b);
    let mut tracer = Tracer::new(ctx);
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iters {
        let (gw, gb, _) = bm_gradient(dataset, &w, &b);
        let nw = w.sub(&gw.scale(cfg.step_size));
        let nb = b.sub(&gb.scale(cfg.step_size));
        let next = nw.matmul(&nb);
        let loss = crate::model::loss_unchecked(dataset, &next);
        if !next.is_finite() || !loss.is_finite() {
            let (subspace, degenerate) = span_of(&b);
            return Err(Error::Diverged {
                iteration: k,
                last: Some(Box::new(FitResult {
                    coefficients: Coefficients { theta },
                    subspace,
                    trace: tracer.rows,
                    iterations: k - 1,
                    converged: false,
                    degenerate,
                })),
            });
        }
        let change = next.sub(&theta).frobenius_norm() / theta.frobenius_norm().max(1e-30);
        w = nw;
        b = nb;
        theta = next;
        iterations = k;
        if ctx.truth.is_some() {
            let (subspace, _) = span_of(&b);
            tracer.record(k, loss, &theta, Some(&subspace));
        } else {
            tracer.record(k, loss, &theta, None);
        }
        if change < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let (subspace, degenerate) = span_of(&b);
    Ok(FitResult {
        coefficients: Coefficients { theta },
        subspace,
        trace: tracer.rows,
        iterations,
        converged,
        degenerate,
    })
}

fn span_of(b: &Matrix) -> (Subspace, bool) {
    match orthonormalize_rows(b) {
        Ok(q) => (Subspace::from_basis_unchecked(q), false),
        Err(_) => (Subspace::canonical(b.rows(), b.cols()), true),
    }
}
