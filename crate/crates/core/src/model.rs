//! Domain types for the shared-representation multi-task linear model.
//!
//! Subspaces are stored as `s × d` matrices with orthonormal rows and every
//! distance is defined on row spans.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Row-orthonormality tolerance enforced by [`Subspace::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// One regression task: an `m_t × d` design and its `m_t` responses.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    design: Matrix,
    response: Vec<f64>,
}

impl TaskData {
    pub fn new(design: Matrix, response: Vec<f64>) -> Result<Self> {
        Error::check_dim("task response length", design.rows(), response.len())?;
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("task response"));
        }
        Ok(Self { design, response })
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn samples(&self) -> usize {
        self.design.rows()
    }

    pub fn dim(&self) -> usize {
        self.design.cols()
    }

    /// Rows selected by `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<TaskData> {
        if idx.is_empty() {
            return Err(Error::invalid("cannot select zero rows"));
        }
        let d = self.dim();
        let mut data = Vec::with_capacity(idx.len() * d);
        let mut resp = Vec::with_capacity(idx.len());
        for &i in idx {
            data.extend_from_slice(self.design.row(i));
            resp.push(self.response[i]);
        }
        TaskData::new(Matrix::new(idx.len(), d, data)?, resp)
    }

    /// `X·θ`.
    pub fn predict(&self, theta: &[f64]) -> Vec<f64> {
        self.design.matvec(theta)
    }

    /// `y − X·θ`.
    pub fn residual(&self, theta: &[f64]) -> Vec<f64> {
        self.design
            .matvec(theta)
            .into_iter()
            .zip(&self.response)
            .map(|(p, y)| y - p)
            .collect()
    }
}

/// `T` tasks sharing the feature dimension `d`. Sample sizes may differ.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskDataset {
    tasks: Vec<TaskData>,
    dim: usize,
}

impl MultiTaskDataset {
    pub fn new(tasks: Vec<TaskData>) -> Result<Self> {
        let dim = tasks
            .first()
            .ok_or_else(|| Error::invalid("dataset needs at least one task"))?
            .dim();
        for t in &tasks {
            Error::check_dim("task feature dimension", dim, t.dim())?;
        }
        Ok(Self { tasks, dim })
    }

    pub fn tasks(&self) -> &[TaskData] {
        &self.tasks
    }

    pub fn task(&self, t: usize) -> &TaskData {
        &self.tasks[t]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    /// `N = Σ_t m_t`.
    pub fn total_samples(&self) -> usize {
        self.tasks.iter().map(TaskData::samples).sum()
    }

    /// Smallest per-task sample size.
    pub fn min_samples(&self) -> usize {
        self.tasks.iter().map(TaskData::samples).min().unwrap_or(0)
    }

    /// Concatenated responses `Y`.
    pub fn responses(&self) -> Vec<f64> {
        self.tasks.iter().flat_map(|t| t.response().iter().copied()).collect()
    }

    fn check_coefficients(&self, coeffs: &Coefficients) -> Result<()> {
        Error::check_dim("coefficient rows (tasks)", self.task_count(), coeffs.theta.rows())?;
        Error::check_dim("coefficient columns (features)", self.dim, coeffs.theta.cols())
    }
}

/// Stacked per-task coefficients, `T × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub(crate) theta: Matrix,
}

impl Coefficients {
    pub fn new(theta: Matrix) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(Self { theta })
    }

    pub fn zeros(tasks: usize, dim: usize) -> Self {
        Self {
            theta: Matrix::zeros(tasks, dim),
        }
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn task(&self, t: usize) -> &[f64] {
        self.theta.row(t)
    }

    pub fn into_matrix(self) -> Matrix {
        self.theta
    }
}

/// Shared representation: an `s × d` basis with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.rows() > basis.cols() {
            return Err(Error::invalid("subspace rank exceeds ambient dimension"));
        }
        let residual = basis.row_orthonormality_residual();
        if !(residual <= ORTHONORMAL_TOL) {
            return Err(Error::invalid(alloc::format!(
                "subspace basis rows are not orthonormal (residual {residual:e})"
            )));
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_basis_unchecked(basis: Matrix) -> Self {
        Self { basis }
    }

    /// The first `s` standard basis vectors of `R^d`.
    pub fn canonical(s: usize, d: usize) -> Self {
        assert!(1 <= s && s <= d);
        Self {
            basis: Matrix::identity(d).leading_rows(s),
        }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }

    /// Coordinates `B·x` of a vector in the basis.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.basis.matvec(x)
    }

    /// `Bᵀ·w`.
    pub fn lift(&self, w: &[f64]) -> Vec<f64> {
        self.basis.transpose_matvec(w)
    }
}

/// `Θ = W·B` with `W` of size `T × s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredCoefficients {
    weights: Matrix,
    subspace: Subspace,
}

impl FactoredCoefficients {
    pub fn new(weights: Matrix, subspace: Subspace) -> Result<Self> {
        Error::check_dim("factor inner dimension", subspace.rank(), weights.cols())?;
        Ok(Self { weights, subspace })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }
}

/// Ground-truth parameters of a synthetic experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    factored: FactoredCoefficients,
    theta: Coefficients,
    noise_sd: f64,
}

impl GroundTruth {
    pub fn new(factored: FactoredCoefficients, noise_sd: f64) -> Result<Self> {
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::invalid("noise standard deviation must be finite and >= 0"));
        }
        let theta = compose(&factored);
        Ok(Self {
            factored,
            theta,
            noise_sd,
        })
    }

    pub fn factored(&self) -> &FactoredCoefficients {
        &self.factored
    }

    /// `Θ* = W*·B*`.
    pub fn theta(&self) -> &Coefficients {
        &self.theta
    }

    pub fn subspace(&self) -> &Subspace {
        self.factored.subspace()
    }

    pub fn weights(&self) -> &Matrix {
        self.factored.weights()
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn task_count(&self) -> usize {
        self.factored.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.factored.subspace.ambient_dim()
    }

    pub fn rank(&self) -> usize {
        self.factored.subspace.rank()
    }
}

/// Block-diagonal operator `A(Θ)`: the concatenation of `X_t·θ_t` over tasks.
pub fn apply_operator(dataset: &MultiTaskDataset, coeffs: &Coefficients) -> Result<Vec<f64>> {
    dataset.check_coefficients(coeffs)?;
    let mut out = Vec::with_capacity(dataset.total_samples());
    for (t, task) in dataset.tasks().iter().enumerate() {
        out.extend(task.predict(coeffs.task(t)));
    }
    Ok(out)
}

/// `L(Θ) = ‖A(Θ) − Y‖²`.
pub fn loss(dataset: &MultiTaskDataset, coeffs: &Coefficients) -> Result<f64> {
    dataset.check_coefficients(coeffs)?;
    Ok(loss_unchecked(dataset, &coeffs.theta))
}

pub(crate) fn loss_unchecked(dataset: &MultiTaskDataset, theta: &Matrix) -> f64 {
    dataset
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let r = task.residual(theta.row(t));
            dot(&r, &r)
        })
        .sum()
}

/// `Θ = W·B`.
pub fn compose(factored: &FactoredCoefficients) -> Coefficients {
    Coefficients {
        theta: factored.weights.matmul(factored.subspace.basis()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn task(rows: &[&[f64]], y: &[f64]) -> TaskData {
        TaskData::new(Matrix::from_rows(rows).unwrap(), y.to_vec()).unwrap()
    }

    #[test]
    fn operator_examples() {
        let ds = MultiTaskDataset::new(vec![task(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0])]).unwrap();
        let c = Coefficients::new(Matrix::from_rows(&[&[3.0, 4.0]]).unwrap()).unwrap();
        assert_eq!(apply_operator(&ds, &c).unwrap(), vec![3.0, 4.0]);
        assert_eq!(apply_operator(&ds, &Coefficients::zeros(1, 2)).unwrap(), vec![0.0, 0.0]);

        let ds = MultiTaskDataset::new(vec![
            task(&[&[1.0, 0.0]], &[0.0]),
            task(&[&[0.0, 2.0]], &[0.0]),
        ])
        .unwrap();
        let c = Coefficients::new(Matrix::from_rows(&[&[5.0, 1.0], &[1.0, 7.0]]).unwrap()).unwrap();
        assert_eq!(apply_operator(&ds, &c).unwrap(), vec![5.0, 14.0]);
    }

    #[test]
    fn operator_dimension_mismatch() {
        let ds = MultiTaskDataset::new(vec![task(&[&[1.0, 0.0]], &[0.0])]).unwrap();
        assert!(matches!(
            apply_operator(&ds, &Coefficients::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(loss(&ds, &Coefficients::zeros(1, 3)).is_err());
    }

    #[test]
    fn loss_examples() {
        let ds = MultiTaskDataset::new(vec![task(&[&[1.0, 0.0], &[0.0, 1.0]], &[3.0, 4.0])]).unwrap();
        let exact = Coefficients::new(Matrix::from_rows(&[&[3.0, 4.0]]).unwrap()).unwrap();
        assert_eq!(loss(&ds, &exact).unwrap(), 0.0);
        let ds = MultiTaskDataset::new(vec![task(&[&[1.0, 0.0], &[0.0, 1.0]], &[3.0, 5.0])]).unwrap();
        assert_eq!(loss(&ds, &exact).unwrap(), 1.0);
    }

    #[test]
    fn compose_examples() {
        let b = Subspace::canonical(2, 4);
        let f = FactoredCoefficients::new(Matrix::identity(2), b.clone()).unwrap();
        let theta = compose(&f);
        assert_eq!(theta.theta().as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let f = FactoredCoefficients::new(Matrix::zeros(3, 2), b).unwrap();
        assert_eq!(compose(&f).theta().max_abs(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(TaskData::new(Matrix::identity(2), vec![1.0]).is_err());
        assert!(MultiTaskDataset::new(vec![]).is_err());
        assert!(MultiTaskDataset::new(vec![
            task(&[&[1.0, 0.0]], &[0.0]),
            task(&[&[1.0, 0.0, 0.0]], &[0.0]),
        ])
        .is_err());
        assert!(Subspace::new(Matrix::from_rows(&[&[1.0, 1.0]]).unwrap()).is_err());
        assert!(GroundTruth::new(
            FactoredCoefficients::new(Matrix::identity(1), Subspace::canonical(1, 2)).unwrap(),
            -1.0
        )
        .is_err());
    }
}
