//! Seeded data-generating process for simulated experiments.
//!
//! The shared basis `B*` is the transpose of the first `s` columns of the
//! `Q` factor of a `d × d` standard-normal matrix (Haar distributed when the
//! diagonal of `R` is made positive). Weights are i.i.d. `N(0, 1)`, features
//! i.i.d. `N(0, 1)` (or Rademacher) and noise i.i.d. `N(0, σ²)`.
//!
//! Randomness comes from ChaCha8. The ground truth draws from one stream and
//! every task draws from its own stream selected by task index, so tasks can
//! be generated in any order or in parallel with identical results.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::model::{FactoredCoefficients, GroundTruth, MultiTaskDataset, Subspace, TaskData};
use crate::seed::derive_seed;

const TRUTH_STREAM: u64 = 0x7472_7574_68;
const DATA_STREAM: u64 = 0x6461_7461;

/// Distribution of the design entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureDistribution {
    #[default]
    Gaussian,
    /// `±1` with equal probability; sub-Gaussian with unit variance.
    Rademacher,
}

/// Per-task sample sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleSizes {
    Uniform(usize),
    PerTask(Vec<usize>),
}

impl SampleSizes {
    pub fn for_task(&self, t: usize) -> usize {
        match self {
            SampleSizes::Uniform(m) => *m,
            SampleSizes::PerTask(ms) => ms[t],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub dim: usize,
    pub rank: usize,
    pub tasks: usize,
    pub samples: SampleSizes,
    pub sigma: f64,
    pub seed: u64,
    pub features: FeatureDistribution,
}

impl DgpConfig {
    /// Gaussian design with `m` samples per task.
    pub fn new(dim: usize, rank: usize, tasks: usize, m: usize, sigma: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            dim,
            rank,
            tasks,
            samples: SampleSizes::Uniform(m),
            sigma,
            seed,
            features: FeatureDistribution::Gaussian,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.rank > self.dim {
            return Err(Error::invalid("need 1 <= s <= d"));
        }
        if self.tasks == 0 {
            return Err(Error::invalid("need T >= 1"));
        }
        match &self.samples {
            SampleSizes::Uniform(m) if *m == 0 => return Err(Error::invalid("need m >= 1")),
            SampleSizes::PerTask(ms) => {
                Error::check_dim("per-task sample sizes", self.tasks, ms.len())?;
                if ms.iter().any(|&m| m == 0) {
                    return Err(Error::invalid("need m_t >= 1"));
                }
            }
            _ => {}
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("need finite sigma >= 0"));
        }
        Ok(())
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// A uniformly random `s`-dimensional row-orthonormal basis of `R^d`.
pub fn random_subspace(dim: usize, rank: usize, rng: &mut impl Rng) -> Subspace {
    assert!(1 <= rank && rank <= dim);
    let g = Matrix::from_fn(dim, dim, |_, _| normal(rng));
    let q = crate::linalg::lq(&g.transpose()).1;
    // lq(gᵀ) returns Qᵀ of g = Q·R; its first rows are the first columns of Q.
    Subspace::from_basis_unchecked(q.leading_rows(rank))
}

/// Draws `(W*, B*)` deterministically from `cfg.seed`.
pub fn generate_ground_truth(cfg: &DgpConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, TRUTH_STREAM]));
    let subspace = random_subspace(cfg.dim, cfg.rank, &mut rng);
    let weights = Matrix::from_fn(cfg.tasks, cfg.rank, |_, _| normal(&mut rng));
    GroundTruth::new(FactoredCoefficients::new(weights, subspace)?, cfg.sigma)
}

/// Generates one task's design and noisy responses.
pub fn generate_task(gt: &GroundTruth, cfg: &DgpConfig, t: usize) -> Result<TaskData> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, DATA_STREAM]));
    rng.set_stream(t as u64);
    let m = cfg.samples.for_task(t);
    let d = cfg.dim;
    let design = match cfg.features {
        FeatureDistribution::Gaussian => Matrix::from_fn(m, d, |_, _| normal(&mut rng)),
        FeatureDistribution::Rademacher => {
            Matrix::from_fn(m, d, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
        }
    };
    let signal = design.matvec(gt.theta().task(t));
    let response = signal
        .into_iter()
        .map(|v| v + gt.noise_sd() * normal(&mut rng))
        .collect();
    TaskData::new(design, response)
}

/// Generates all tasks of `y_t = X_t·θ_t* + ε_t`.
pub fn generate_dataset(gt: &GroundTruth, cfg: &DgpConfig) -> Result<MultiTaskDataset> {
    cfg.validate()?;
    Error::check_dim("ground truth tasks", cfg.tasks, gt.task_count())?;
    Error::check_dim("ground truth dimension", cfg.dim, gt.dim())?;
    let tasks = (0..cfg.tasks)
        .map(|t| generate_task(gt, cfg, t))
        .collect::<Result<Vec<_>>>()?;
    MultiTaskDataset::new(tasks)
}

/// Smallest eigenvalue of `W*ᵀW*/T`, the task-diversity constant.
pub fn task_diversity(gt: &GroundTruth) -> f64 {
    weight_diversity(gt.weights())
}

pub(crate) fn weight_diversity(w: &Matrix) -> f64 {
    let xi = w.gram().scale(1.0 / w.rows() as f64);
    let eig = symmetric_eigen(&xi).expect("gram matrix is square and finite");
    eig.values.last().copied().unwrap_or(0.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::loss;

    #[test]
    fn ground_truth_is_orthonormal_and_deterministic() {
        let cfg = DgpConfig::new(20, 3, 10, 5, 1.0, 42).unwrap();
        let a = generate_ground_truth(&cfg).unwrap();
        let b = generate_ground_truth(&cfg).unwrap();
        assert!(a.subspace().basis().row_orthonormality_residual() < 1e-10);
        assert_eq!(a, b);
        let da = generate_dataset(&a, &cfg).unwrap();
        let db = generate_dataset(&b, &cfg).unwrap();
        assert_eq!(da, db);
    }

    #[test]
    fn noiseless_dataset_has_zero_loss() {
        let cfg = DgpConfig::new(10, 2, 6, 4, 0.0, 3).unwrap();
        let gt = generate_ground_truth(&cfg).unwrap();
        let ds = generate_dataset(&gt, &cfg).unwrap();
        assert!(loss(&ds, gt.theta()).unwrap() < 1e-24);
    }

    #[test]
    fn rademacher_entries_are_signs() {
        let mut cfg = DgpConfig::new(5, 1, 2, 3, 0.0, 1).unwrap();
        cfg.features = FeatureDistribution::Rademacher;
        let gt = generate_ground_truth(&cfg).unwrap();
        let ds = generate_dataset(&gt, &cfg).unwrap();
        assert!(ds.task(0).design().as_slice().iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn diversity_examples() {
        let t = 8usize;
        let sqrt_t = libm::sqrt(t as f64);
        let w = Matrix::from_fn(t, 2, |i, j| if i == j { sqrt_t } else { 0.0 });
        let gt = GroundTruth::new(
            FactoredCoefficients::new(w, Subspace::canonical(2, 3)).unwrap(),
            0.0,
        )
        .unwrap();
        assert!((task_diversity(&gt) - 1.0).abs() < 1e-14);

        let gt = GroundTruth::new(
            FactoredCoefficients::new(Matrix::zeros(4, 2), Subspace::canonical(2, 3)).unwrap(),
            0.0,
        )
        .unwrap();
        assert_eq!(task_diversity(&gt), 0.0);
    }

    #[test]
    fn invalid_configs() {
        assert!(DgpConfig::new(3, 4, 1, 1, 0.0, 0).is_err());
        assert!(DgpConfig::new(3, 0, 1, 1, 0.0, 0).is_err());
        assert!(DgpConfig::new(3, 1, 0, 1, 0.0, 0).is_err());
        assert!(DgpConfig::new(3, 1, 1, 0, 0.0, 0).is_err());
        assert!(DgpConfig::new(3, 1, 1, 1, -1.0, 0).is_err());
    }
}
