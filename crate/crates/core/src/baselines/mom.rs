
use crate::error::Result;
use crate::linalg::{symmetric_eigen, Matrix};
use crate::metasp::check_rank;
use crate::model::{compose, FactoredCoefficients, MultiTaskDataset, Subspace};
use crate::solver::{FitContext, FitResult, Tracer};

/// Method-of-moments subspace estimate.
#[derive(Debug, Clone)]
pub struct MomEstimate {
    pub subspace: Subspace,
    /// The moment matrix was zero; `subspace` is the canonical frame.
    pub degenerate: bool,
}

/// `M = (1/N)·Σ_t Σ_j y_{t,j}²·x_{t,j}·x_{t,j}ᵀ`, symmetric by construction.
pub fn moment_matrix(dataset: &MultiTaskDataset) -> Matrix {
    let d = dataset.dim();
    let mut m = Matrix::zeros(d, d);
    for task in dataset.tasks() {
        for (j, &y) in task.response().iter().enumerate() {
            let w = y * y;
            if w == 0.0 {
                continue;
            }
            let x = task.design().row(j);
            for a in 0..d {
                let c = w * x[a];
                if c == 0.0 {
                    continue;
                }
                let row = &mut m.row_mut(a)[a..];
                for (dst, &xb) in row.iter_mut().zip(&x[a..]) {
                    *dst += c * xb;
                }
            }
        }
    }
    let n = dataset.total_samples() as f64;
    for a in 0..d {
        for b in a..d {
            let v = m.get(a, b) / n;
            m.set(a, b, v);
            m.set(b, a, v);
        }
    }
    m
}

/// Top-`s` eigenvectors of the moment matrix as a row-orthonormal basis.
pub fn mom_fit(dataset: &MultiTaskDataset, s: usize) -> Result<MomEstimate> {
    if s == 0 || s > dataset.dim() {
        return Err(crate::error::Error::invalid("need 1 <= s <= d"));
    }
    let m = moment_matrix(dataset);
    if m.max_abs() == 0.0 {
        return Ok(MomEstimate {
            subspace: Subspace::canonical(s, dataset.dim()),
            degenerate: true,
        });
    }
    let eig = symmetric_eigen(&m)?;
    let basis = eig.vectors.leading_columns(s).transpose();
    Ok(MomEstimate {
        subspace: Subspace::from_basis_unchecked(basis),
        degenerate: false,
    })
}

pub(crate) fn mom_fit_full(
    dataset: &MultiTaskDataset,
    s: usize,
    ctx: FitContext<'_>,
) -> Result<FitResult> {
    check_rank(s, dataset)?;
    let mut tracer = Tracer::new(ctx);
    let est = mom_fit(dataset, s)?;
    let (w, fallback) = super::least_squares_weights(dataset, &est.subspace);
    let theta = compose(&FactoredCoefficients::new(w, est.subspace.clone())?);
    let loss = crate::model::loss_unchecked(dataset, theta.theta());
    tracer.record(1, loss, theta.theta(), Some(&est.subspace));
    Ok(FitResult {
        coefficients: theta,
        subspace: est.subspace,
        trace: tracer.rows,
        iterations: 1,
        converged: true,
        degenerate: est.degenerate || fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::sine_angle;
    use crate::model::TaskData;
    use alloc::vec;

    #[test]
    fn aligned_single_task() {
        // X = √m·I_d with θ* = e₁ gives y = √m·e₁, so M = m²/N·e₁e₁ᵀ.
        let d = 4;
        let root = libm::sqrt(d as f64);
        let x = Matrix::identity(d).scale(root);
        let y = x.matvec(&[1.0, 0.0, 0.0, 0.0]);
        let ds = MultiTaskDataset::new(vec![TaskData::new(x, y).unwrap()]).unwrap();
        let est = mom_fit(&ds, 1).unwrap();
        assert!(!est.degenerate);
        let target = Subspace::canonical(1, d);
        assert!(sine_angle(&est.subspace, &target).unwrap() <= 1e-6);
        let m = moment_matrix(&ds);
        assert!((m.get(0, 0) - 4.0 * 4.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_response_is_degenerate() {
        let ds = MultiTaskDataset::new(vec![TaskData::new(Matrix::identity(3), vec![0.0; 3]).unwrap()]).unwrap();
        let est = mom_fit(&ds, 2).unwrap();
        assert!(est.degenerate);
        assert!(est.subspace.basis().row_orthonormality_residual() < 1e-15);
    }
}
