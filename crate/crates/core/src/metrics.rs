//! Evaluation metrics and numeric checks of the convergence theory.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, singular_values, spectral_norm, Matrix};
use crate::model::{Coefficients, GroundTruth, MultiTaskDataset, Subspace};
use crate::synthetic::{random_subspace, task_diversity};

/// Slack allowed when testing the subspace-error inequality.
pub const THEOREM3_SLACK: f64 = 1e-8;

/// Normalized squared coefficient error `‖Θ̂ − Θ*‖²_F / T`.
pub fn dist1(theta_hat: &Coefficients, gt: &GroundTruth) -> Result<f64> {
    let (a, b) = (theta_hat.theta(), gt.theta().theta());
    Error::check_dim("dist1 rows", b.rows(), a.rows())?;
    Error::check_dim("dist1 cols", b.cols(), a.cols())?;
    Ok(dist1_matrix(a, b))
}

pub(crate) fn dist1_matrix(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).frobenius_norm_sq() / a.rows() as f64
}

/// Sine of the largest principal angle between two row spans,
/// `‖B₁(I − B₂ᵀB₂)‖₂`.
///
/// For equal ranks this is `√(1 − σ_min(B₁B₂ᵀ)²)`. Near-coincident spans
/// lose accuracy in that form, so small values are recomputed from the
/// residual `B₁ − (B₁B₂ᵀ)B₂`. Unequal ranks always use the residual form,
/// which is then not symmetric in its arguments.
pub fn sine_angle(b1: &Subspace, b2: &Subspace) -> Result<f64> {
    Error::check_dim("sine_angle ambient dimension", b1.ambient_dim(), b2.ambient_dim())?;
    let c = b1.basis().matmul_transpose(b2.basis());
    let residual = || {
        let d = b1.basis().sub(&c.matmul(b2.basis()));
        spectral_norm(&d).clamp(0.0, 1.0)
    };
    if b1.rank() != b2.rank() {
        return Ok(residual());
    }
    let smin = singular_values(&c).last().copied().unwrap_or(0.0).min(1.0);
    let sin = libm::sqrt((1.0 - smin * smin).max(0.0));
    if sin < 1e-4 {
        Ok(residual())
    } else {
        Ok(sin.min(1.0))
    }
}

/// Closed-form bound on the restricted isometry constant of `A/√m`:
/// `√((8(a+1)r − 4)/(3m) · ln(2r/ε))`.
pub fn theorem1_bound(r: usize, m: usize, a: f64, eps: f64) -> f64 {
    let r = r as f64;
    let num = 8.0 * (a + 1.0) * r - 4.0;
    libm::sqrt(num / (3.0 * m as f64) * libm::log(2.0 * r / eps))
}

/// Per-iteration contraction factor of the coefficient error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRate {
    /// `2√2·(1 − γ + γ·δ₃ₛ)`.
    pub factor: f64,
    pub contracts: bool,
}

/// Contraction factor for step size `gamma` given an isometry constant
/// `delta3s`, either a plug-in bound or an empirical estimate.
pub fn theorem2_rate(gamma: f64, delta3s: f64) -> ContractionRate {
    let factor = 2.0 * core::f64::consts::SQRT_2 * (1.0 - gamma + gamma * delta3s);
    ContractionRate {
        factor,
        contracts: factor < 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem3Check {
    /// `sin∠(B⁽ᵏ⁾, B*)`.
    pub lhs: f64,
    /// `‖Θ* − Θ⁽ᵏ⁾‖_F / √(λ_s·T)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks that the subspace error is controlled by the coefficient error.
pub fn theorem3_check(b_k: &Subspace, gt: &GroundTruth, theta_k: &Coefficients) -> Result<Theorem3Check> {
    let lambda = task_diversity(gt);
    if !(lambda > 0.0) {
        return Err(Error::degenerate("task diversity is zero"));
    }
    theorem3_check_with(b_k, gt, theta_k, lambda)
}

/// As [`theorem3_check`] with a precomputed task-diversity constant.
pub fn theorem3_check_with(
    b_k: &Subspace,
    gt: &GroundTruth,
    theta_k: &Coefficients,
    lambda: f64,
) -> Result<Theorem3Check> {
    let lhs = sine_angle(b_k, gt.subspace())?;
    let t = gt.task_count() as f64;
    let err = libm::sqrt(dist1(theta_k, gt)? * t);
    let rhs = err / libm::sqrt(lambda * t);
    Ok(Theorem3Check {
        lhs,
        rhs,
        holds: lhs <= rhs + THEOREM3_SLACK,
    })
}

/// Monte-Carlo estimate of the restricted isometry constant.
#[derive(Debug, Clone, PartialEq)]
pub struct RipEstimate {
    pub rank_probed: usize,
    pub samples: usize,
    /// `Σ_t ‖X_t·θ_t‖²/m_t ÷ ‖Θ‖²_F` per probe.
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(1 − min_ratio, max_ratio − 1)`.
    pub delta_hat: f64,
    /// [`theorem1_bound`] at the smallest task sample size.
    pub theory_bound: f64,
}

impl RipEstimate {
    /// Number of probes whose ratio lies in `[1 − β, 1 + β]`.
    pub fn within(&self, beta: f64) -> usize {
        self.ratios.iter().filter(|&&r| (r - 1.0).abs() <= beta).count()
    }
}

/// Probes the isometry of `A/√m` on random rank-`r` matrices `Θ = V·B`
/// with `B` uniformly random row-orthonormal and `V` Gaussian.
/// `a` and `eps` parameterize the reported theory bound.
pub fn rip_probe(
    dataset: &MultiTaskDataset,
    r: usize,
    samples: usize,
    seed: u64,
    a: f64,
    eps: f64,
) -> Result<RipEstimate> {
    crate::metasp::check_rank(r, dataset)?;
    if samples == 0 {
        return Err(Error::invalid("need at least one probe"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (tasks, dim) = (dataset.task_count(), dataset.dim());
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let b = random_subspace(dim, r, &mut rng);
        let v = Matrix::from_fn(tasks, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let theta = v.matmul(b.basis());
        let energy: f64 = dataset
            .tasks()
            .iter()
            .enumerate()
            .map(|(t, task)| {
                let p = task.predict(theta.row(t));
                dot(&p, &p) / task.samples() as f64
            })
            .sum();
        ratios.push(energy / theta.frobenius_norm_sq());
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RipEstimate {
        rank_probed: r,
        samples,
        delta_hat: (1.0 - min_ratio).max(max_ratio - 1.0).max(0.0),
        min_ratio,
        max_ratio,
        ratios,
        theory_bound: theorem1_bound(r, dataset.min_samples(), a, eps),
    })
}
