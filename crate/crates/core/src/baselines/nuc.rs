//! Nuclear-norm regularized least squares by proximal gradient.
//!
//! Minimizes `L(Θ)/(2N) + λ·‖Θ‖_*`. The smooth part has a block-diagonal
//! Hessian with blocks `X_tᵀX_t/N`, so its Lipschitz constant is
//! `max_t σ_max(X_t)²/N` and the step is its inverse. The proximal map of the
//! nuclear norm soft-thresholds the singular values. Steps are taken from a
//! Nesterov extrapolation of the last two iterates (FISTA).

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::residual_correlations;
use crate::error::{Error, Result};
use crate::linalg::{right_singular_system, spectral_norm, Matrix};
use crate::metasp::check_rank;
use crate::model::{Coefficients, MultiTaskDataset, Subspace};
use crate::solver::{FitContext, FitResult, Tracer};

#[derive(Debug, Clone, PartialEq)]
pub struct NucConfig {
    pub rank: usize,
    /// `λ`. When absent it is derived from `noise_sd` by
    /// [`default_reg_coeff`].
    pub reg_coeff: Option<f64>,
    pub noise_sd: Option<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl NucConfig {
    pub fn new(rank: usize, reg_coeff: f64, max_iters: usize, seed: u64) -> Self {
        Self {
            rank,
            reg_coeff: Some(reg_coeff),
            noise_sd: None,
            max_iters,
            rel_tol: 1e-10,
            seed,
        }
    }

    /// `λ` from the noise level instead of an explicit value.
    pub fn from_noise(rank: usize, noise_sd: f64, max_iters: usize, seed: u64) -> Self {
        Self {
            reg_coeff: None,
            noise_sd: Some(noise_sd),
            ..Self::new(rank, 0.0, max_iters, seed)
        }
    }

    fn lambda(&self, dataset: &MultiTaskDataset) -> Result<f64> {
        let lambda = match (self.reg_coeff, self.noise_sd) {
            (Some(l), _) => l,
            (None, Some(sigma)) => default_reg_coeff(
                sigma,
                dataset.task_count(),
                dataset.dim(),
                dataset.min_samples(),
            ),
            (None, None) => {
                return Err(Error::invalid("nuc needs reg_coeff or noise_sd"));
            }
        };
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(alloc::format!(
                "regularization coefficient must be > 0, got {lambda}"
            )));
        }
        Ok(lambda)
    }
}

/// `λ = (σ/T)·√((T + d²/m)/(m·T))`.
pub fn default_reg_coeff(sigma: f64, tasks: usize, dim: usize, m: usize) -> f64 {
    let (t, d, m) = (tasks as f64, dim as f64, m as f64);
    sigma / t * libm::sqrt((t + d * d / m) / (m * t))
}

/// Proximal map of `τ·‖·‖_*`: singular values become `max(σ_i − τ, 0)`.
/// Also returns the right singular vectors (columns) of the input, ordered
/// by decreasing singular value.
pub fn soft_threshold_singular_values(m: &Matrix, tau: f64) -> (Matrix, Matrix, Vec<f64>) {
    let (sigma, v) = right_singular_system(m);
    let factors: Vec<f64> = sigma
        .iter()
        .map(|&s| if s > tau { (s - tau) / s } else { 0.0 })
        .collect();
    // U·diag(σ − τ)₊·Vᵀ = M·V·diag(f)·Vᵀ
    let out = m.matmul(&v).scale_columns(&factors).matmul_transpose(&v);
    let shrunk = sigma.iter().map(|&s| (s - tau).max(0.0)).collect();
    (out, v, shrunk)
}

pub fn nuc_fit(dataset: &MultiTaskDataset, cfg: &NucConfig, ctx: FitContext<'_>) -> Result<FitResult> {
    check_rank(cfg.rank, dataset)?;
    let lambda = cfg.lambda(dataset)?;
    let (tasks, dim, s) = (dataset.task_count(), dataset.dim(), cfg.rank);
    let n = dataset.total_samples() as f64;
    let lipschitz = dataset
        .tasks()
        .iter()
        .map(|t| { let n = spectral_norm(t.design()); n * n })
        .fold(0.0, f64::max)
        / n;
    if !(lipschitz > 0.0) {
        return Err(Error::degenerate("all designs are zero"));
    }
    let step = 1.0 / lipschitz;
    let tau = lambda * step;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = Matrix::from_fn(tasks, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut subspace = Subspace::canonical(s, dim);
    let mut degenerate = false;
    let mut tracer = Tracer::new(ctx);
    let mut converged = false;
    let mut iterations = 0;
    let mut previous = theta.clone();
    let mut momentum = 1.0;

    for k in 1..=cfg.max_iters {
        let next_momentum = (1.0 + libm::sqrt(1.0 + 4.0 * momentum * momentum)) / 2.0;
        let beta = (momentum - 1.0) / next_momentum;
        momentum = next_momentum;
        let anchor = theta.add(&theta.sub(&previous).scale(beta));
        let (corr, _) = residual_correlations(dataset, &anchor);
        // Z − η·∇ with ∇_t = −X_tᵀr_t/N
        let forward = anchor.add(&corr.scale(step / n));
        if !forward.is_finite() {
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
        let (next, v, shrunk) = soft_threshold_singular_values(&forward, tau);
        subspace = Subspace::from_basis_unchecked(v.leading_columns(s).transpose());
        degenerate = shrunk[0] == 0.0;
        let change = next.sub(&theta).frobenius_norm() / theta.frobenius_norm().max(1e-30);
        previous = core::mem::replace(&mut theta, next);
        iterations = k;
        let loss = crate::model::loss_unchecked(dataset, &theta);
        tracer.record(k, loss, &theta, Some(&subspace));
        if change < cfg.rel_tol {
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
