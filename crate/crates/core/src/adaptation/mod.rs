//! Adapting a learned representation to new tasks, and evaluating it.
//!
//! A new task is fit inside a basis `B` by least squares on the projected
//! design `X·Bᵀ`; the two reference arms replace `B` with a random basis or
//! skip the representation entirely and use the pseudo-inverse solution.

mod preprocess;
mod protocol;

pub use preprocess::{preprocess, PreprocessOutcome, PreprocessSpec, RawRow, RawTaskTable, Transform};
pub use protocol::{
    run_protocol, Arm, MetaLearner, ProtocolOutcome, SplitProtocol, Stage, StageReport,
};

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, solve_psd};
use crate::model::{Subspace, TaskData};
use crate::seed::derive_seed;
use crate::synthetic::random_subspace;

/// Smallest `|truth|` that [`mre`] divides by.
pub const MRE_FLOOR: f64 = 1e-12;

const RANDOM_B_STREAM: u64 = 0x7261_6e64_42;

/// Weights and coefficients of one adapted task.
#[derive(Debug, Clone, PartialEq)]
pub struct Adapted {
    /// `w`, length `s`.
    pub weights: Vec<f64>,
    /// `Bᵀw`, length `d`.
    pub theta: Vec<f64>,
    /// The `s × s` normal equations were singular and the pseudo-inverse was
    /// used.
    pub degenerate: bool,
}

/// Least-squares weights in the basis `b`:
/// `w = ((X·Bᵀ)ᵀ(X·Bᵀ))†(X·Bᵀ)ᵀy` and `θ = Bᵀw`.
pub fn adapt_task(b: &Subspace, task: &TaskData) -> Result<Adapted> {
    Error::check_dim("adaptation feature dimension", b.ambient_dim(), task.dim())?;
    let z = task.design().matmul_transpose(b.basis());
    let rhs = z.transpose_matvec(task.response());
    let (weights, degenerate) = solve_psd(&z.gram(), &rhs)?;
    let theta = b.lift(&weights);
    Ok(Adapted {
        weights,
        theta,
        degenerate,
    })
}

/// Minimum-norm least-squares coefficients `X†y`.
pub fn lsq_pinv(task: &TaskData) -> Result<Vec<f64>> {
    Ok(pseudo_inverse(task.design())?.matvec(task.response()))
}

/// A random row-orthonormal `s × d` basis, deterministic in `seed`.
pub fn random_b(dim: usize, rank: usize, seed: u64) -> Result<Subspace> {
    if rank == 0 || rank > dim {
        return Err(Error::invalid("random basis needs 1 <= s <= d"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, RANDOM_B_STREAM]));
    Ok(random_subspace(dim, rank, &mut rng))
}

/// Mean relative error `mean_i |p_i − y_i| / |y_i|`.
///
/// Points with `|y_i| ≤ MRE_FLOOR` are skipped; see [`mre_counted`].
pub fn mre(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    mre_counted(predictions, truth).map(|(v, _)| v)
}

/// [`mre`] together with the number of skipped points.
pub fn mre_counted(predictions: &[f64], truth: &[f64]) -> Result<(f64, usize)> {
    Error::check_dim("mre input length", truth.len(), predictions.len())?;
    if truth.is_empty() {
        return Err(Error::invalid("mre needs at least one point"));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (p, y) in predictions.iter().zip(truth) {
        let ay = y.abs();
        if !(ay > MRE_FLOOR) {
            continue;
        }
        sum += (p - y).abs() / ay;
        used += 1;
    }
    if used == 0 {
        return Err(Error::degenerate("every truth value is zero"));
    }
    Ok((sum / used as f64, truth.len() - used))
}
