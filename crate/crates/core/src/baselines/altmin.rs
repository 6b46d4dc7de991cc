//! Alternating minimization over `(W, B)`.
//!
//! Both variants refit every `w_t` by least squares on the projected design
//! `X_t·Bᵀ`. `AltMin` then solves exactly for `B` given `W` as one
//! `(s·d)`-dimensional least-squares problem; `AltMinGD` takes a single
//! gradient step on `B`. After either update the rows of `B` are
//! re-orthonormalized by `B = L·Q` and `W` absorbs `L`, so `Θ = W·B` is
//! unchanged by the re-orthonormalization.

use alloc::boxed::Box;
use alloc::vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{least_squares_weights, residual_correlations};
use crate::error::{Error, Result};
use crate::linalg::{lq, singular_values, solve_psd, Matrix};
use crate::metasp::check_rank;
use crate::model::{loss_unchecked, Coefficients, MultiTaskDataset, Subspace};
use crate::solver::{FitContext, FitResult, Tracer};
use crate::synthetic::random_subspace;

#[derive(Debug, Clone, PartialEq)]
pub struct AltMinConfig {
    pub rank: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Starting basis; drawn at random from `seed` when absent.
    pub initial_subspace: Option<Subspace>,
}

impl AltMinConfig {
    pub fn new(rank: usize, max_iters: usize, seed: u64) -> Self {
        Self {
            rank,
            max_iters,
            rel_tol: 1e-10,
            seed,
            initial_subspace: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltMinGdConfig {
    pub rank: usize,
    pub step_size: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub initial_subspace: Option<Subspace>,
}

impl AltMinGdConfig {
    pub fn new(rank: usize, step_size: f64, max_iters: usize, seed: u64) -> Self {
        Self {
            rank,
            step_size,
            max_iters,
            rel_tol: 1e-10,
            seed,
            initial_subspace: None,
        }
    }
}

fn initial_basis(
    dataset: &MultiTaskDataset,
    rank: usize,
    seed: u64,
    given: &Option<Subspace>,
) -> Result<Subspace> {
    match given {
        Some(b) => {
            Error::check_dim("initial subspace rank", rank, b.rank())?;
            Error::check_dim("initial subspace dimension", dataset.dim(), b.ambient_dim())?;
            Ok(b.clone())
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random_subspace(dataset.dim(), rank, &mut rng))
        }
    }
}

/// Exact minimizer of `Σ_t ‖y_t − X_t·Bᵀ·w_t‖²` over `B` for fixed `W`,
/// from the normal equations `Σ_t (w_t w_tᵀ ⊗ X_tᵀX_t)·vec(B) = Σ_t w_t ⊗ X_tᵀy_t`
/// with `vec(B)` stacking the rows of `B`.
fn solve_basis(dataset: &MultiTaskDataset, w: &Matrix) -> Result<(Matrix, bool)> {
    let d = dataset.dim();
    let s = w.cols();
    let n = s * d;
    let mut h = Matrix::zeros(n, n);
    let mut g = vec![0.0; n];
    for (t, task) in dataset.tasks().iter().enumerate() {
        let wt = w.row(t);
        let gram = task.design().gram();
        let xty = task.design().transpose_matvec(task.response());
        for a in 0..s {
            for (i, v) in xty.iter().enumerate() {
                g[a * d + i] += wt[a] * v;
            }
            for b in a..s {
                let c = wt[a] * wt[b];
                if c == 0.0 {
                    continue;
                }
                for i in 0..d {
                    let src = gram.row(i);
                    let dst = &mut h.row_mut(a * d + i)[b * d..(b + 1) * d];
                    for (x, y) in dst.iter_mut().zip(src) {
                        *x += c * y;
                    }
                }
            }
        }
    }
    // Mirror the upper block triangle.
    for a in 0..s {
        for b in 0..a {
            for i in 0..d {
                for j in 0..d {
                    let v = h.get(b * d + j, a * d + i);
                    h.set(a * d + i, b * d + j, v);
                }
            }
        }
    }
    let (x, fallback) = solve_psd(&h, &g)?;
    Ok((Matrix::from_raw(s, d, x), fallback))
}

/// Splits `B = L·Q`; returns `None` when `B` is numerically rank deficient.
fn reorthonormalize(b: &Matrix) -> Option<(Matrix, Matrix)> {
    let (l, q) = lq(b);
    let sv = singular_values(&l);
    let smax = sv[0];
    if !(smax > 0.0) || *sv.last().unwrap() <= 1e-12 * smax {
        return None;
    }
    Some((l, q))
}

struct AltState {
    w: Matrix,
    basis: Subspace,
    degenerate: bool,
}

/// Shared outer loop. `update` maps the freshly refit weights and current
/// basis to a new (non-orthonormal) basis.
fn alternate<F>(
    dataset: &MultiTaskDataset,
    max_iters: usize,
    rel_tol: f64,
    init: Subspace,
    ctx: FitContext<'_>,
    mut update: F,
) -> Result<FitResult>
where
    F: FnMut(&Matrix, &Subspace) -> Result<(Matrix, bool)>,
{
    let mut tracer = Tracer::new(ctx);
    let (w0, deg0) = least_squares_weights(dataset, &init);
    let mut state = AltState {
        w: w0,
        basis: init,
        degenerate: deg0,
    };
    let mut theta = state.w.matmul(state.basis.basis());
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=max_iters {
        let (w, deg_w) = least_squares_weights(dataset, &state.basis);
        let (raw, deg_b) = update(&w, &state.basis)?;
        if !raw.is_finite() {
            return Err(Error::Diverged {
                iteration: k,
                last: Some(Box::new(FitResult {
                    coefficients: Coefficients { theta },
                    subspace: state.basis,
                    trace: tracer.rows,
                    iterations: k - 1,
                    converged: false,
                    degenerate: state.degenerate,
                })),
            });
        }
        state.degenerate |= deg_w || deg_b;
        match reorthonormalize(&raw) {
            Some((l, q)) => {
                state.w = w.matmul(&l);
                state.basis = Subspace::from_basis_unchecked(q);
            }
            None => {
                state.w = w;
                state.degenerate = true;
            }
        }
        let next = state.w.matmul(state.basis.basis());
        let change = next.sub(&theta).frobenius_norm() / theta.frobenius_norm().max(1e-30);
        theta = next;
        iterations = k;
        let loss = loss_unchecked(dataset, &theta);
        tracer.record(k, loss, &theta, Some(&state.basis));
        if change < rel_tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        coefficients: Coefficients { theta },
        subspace: state.basis,
        trace: tracer.rows,
        iterations,
        converged,
        degenerate: state.degenerate,
    })
}

/// Alternating minimization with an exact least-squares update of `B`.
pub fn altmin_fit(dataset: &MultiTaskDataset, cfg: &AltMinConfig, ctx: FitContext<'_>) -> Result<FitResult> {
    check_rank(cfg.rank, dataset)?;
    let init = initial_basis(dataset, cfg.rank, cfg.seed, &cfg.initial_subspace)?;
    alternate(dataset, cfg.max_iters, cfg.rel_tol, init, ctx, |w, _| {
        solve_basis(dataset, w)
    })
}

/// Alternating minimization with one gradient step on `B` per iteration,
/// using the gradient of `L(W·B)/(2N)`.
pub fn altmingd_fit(
    dataset: &MultiTaskDataset,
    cfg: &AltMinGdConfig,
    ctx: FitContext<'_>,
) -> Result<FitResult> {
    check_rank(cfg.rank, dataset)?;
    if !(cfg.step_size.is_finite() && cfg.step_size >= 0.0) {
        return Err(Error::invalid("step size must be finite and >= 0"));
    }
    let init = initial_basis(dataset, cfg.rank, cfg.seed, &cfg.initial_subspace)?;
    let n = dataset.total_samples() as f64;
    let gamma = cfg.step_size;
    alternate(dataset, cfg.max_iters, cfg.rel_tol, init, ctx, |w, b| {
        let theta = w.matmul(b.basis());
        let (corr, _) = residual_correlations(dataset, &theta);
        // -∇_B = (1/N)·Σ_t w_t·(X_tᵀ r_t)ᵀ = (1/N)·Wᵀ·corr
        let step = w.transpose_matmul(&corr).scale(gamma / n);
        Ok((b.basis().add(&step), false))
    })
}
