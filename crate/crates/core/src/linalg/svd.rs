//! Singular value decomposition.
//!
//! Tall inputs are first reduced to a square triangular factor by Householder
//! QR. The factor is then diagonalized by one-sided (Hestenes) Jacobi
//! rotations, which gives singular values to high relative accuracy. Wide
//! inputs are handled through their transpose.

use alloc::vec::Vec;

use super::matrix::{axpy, dot, norm, Matrix};
use super::qr::HouseholderQr;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `rows × s`, orthonormal columns.
    pub left: Matrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `cols × s`, orthonormal columns.
    pub right: Matrix,
}

impl TruncatedSvd {
    /// `left · diag(σ) · rightᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.left
            .scale_columns(&self.singular_values)
            .matmul_transpose(&self.right)
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

/// Result of the Jacobi sweep on a square matrix `a = u·diag(σ)·vᵀ`.
struct SquareSvd {
    /// Columns of `u` stored as rows, in sorted order.
    u_rows: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    /// Columns of `v` stored as rows, in sorted order.
    v_rows: Vec<Vec<f64>>,
}

/// One-sided Jacobi on a square matrix. Columns of `a` are orthogonalized in
/// place while the same rotations accumulate in `v`.
fn jacobi_square(a: &Matrix, want_u: bool) -> SquareSvd {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    // Work on columns as contiguous rows.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = alloc::vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (n as f64);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(core::cmp::Ordering::Equal));

    let v_rows: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    let sorted_sigma: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let u_rows = if want_u {
        let smax = sorted_sigma.first().copied().unwrap_or(0.0);
        let cutoff = smax * f64::EPSILON * (n as f64);
        let mut u: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut missing = Vec::new();
        for (k, &j) in order.iter().enumerate() {
            let s = sigma[j];
            if s > cutoff && s > 0.0 {
                u.push(cols[j].iter().map(|x| x / s).collect());
            } else {
                u.push(alloc::vec![0.0; n]);
                missing.push(k);
            }
        }
        complete_orthonormal(&mut u, &missing);
        u
    } else {
        Vec::new()
    };
    SquareSvd {
        u_rows,
        sigma: sorted_sigma,
        v_rows,
    }
}

fn rotate(vs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vs.split_at_mut(q);
    let xp = &mut head[p];
    let xq = &mut tail[0];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Fills the vectors at `missing` so that the whole set is orthonormal,
/// using Gram-Schmidt against the standard basis.
pub(crate) fn complete_orthonormal(vs: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let n = vs[0].len();
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < n, "cannot complete orthonormal basis");
            let mut e = alloc::vec![0.0; n];
            e[candidate] = 1.0;
            candidate += 1;
            // Two passes of modified Gram-Schmidt for stability.
            for _ in 0..2 {
                for (k, other) in vs.iter().enumerate() {
                    if k == slot || (missing.contains(&k) && other.iter().all(|&x| x == 0.0)) {
                        continue;
                    }
                    let c = dot(&e, other);
                    axpy(-c, other, &mut e);
                }
            }
            let nrm = norm(&e);
            if nrm > 1e-6 {
                for x in e.iter_mut() {
                    *x /= nrm;
                }
                vs[slot] = e;
                break;
            }
        }
    }
}

fn rows_to_columns(rows: &[Vec<f64>], take: usize) -> Matrix {
    let n = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(n, take, |i, j| rows[j][i])
}

fn check_finite(m: &Matrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("svd input"))
    }
}

/// Thin SVD with `k = min(rows, cols)` triplets.
pub fn svd(m: &Matrix) -> Result<TruncatedSvd> {
    check_finite(m)?;
    let k = m.rows().min(m.cols());
    Ok(svd_leading(m, k))
}

/// The `s` leading singular triplets of `m`. The reconstruction is a best
/// rank-`s` approximation of `m` in Frobenius norm.
pub fn truncated_svd(m: &Matrix, s: usize) -> Result<TruncatedSvd> {
    check_finite(m)?;
    let k = m.rows().min(m.cols());
    if s == 0 || s > k {
        return Err(Error::invalid(alloc::format!(
            "rank {s} outside 1..={k} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(svd_leading(m, s))
}

fn svd_leading(m: &Matrix, s: usize) -> TruncatedSvd {
    if m.rows() >= m.cols() {
        let qr = HouseholderQr::new(m);
        let sq = jacobi_square(&qr.r(), true);
        let u_small = rows_to_columns(&sq.u_rows, s);
        TruncatedSvd {
            left: qr.apply_q(&u_small),
            singular_values: sq.sigma[..s].to_vec(),
            right: rows_to_columns(&sq.v_rows, s),
        }
    } else {
        let t = svd_leading(&m.transpose(), s);
        TruncatedSvd {
            left: t.right,
            singular_values: t.singular_values,
            right: t.left,
        }
    }
}

/// All singular values of `m`, nonincreasing. Cheaper than [`svd`] because
/// no singular vectors are formed.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let tall = if m.rows() >= m.cols() {
        HouseholderQr::new(m)
    } else {
        HouseholderQr::new(&m.transpose())
    };
    jacobi_square(&tall.r(), false).sigma
}

/// Singular values and right singular vectors (`cols × k`, `k = min(rows,
/// cols)`). Avoids forming the left factor, which is what the hard and soft
/// thresholding operators need: both act as `M·V·diag(f)·Vᵀ`.
pub(crate) fn right_singular_system(m: &Matrix) -> (Vec<f64>, Matrix) {
    if m.rows() >= m.cols() {
        let qr = HouseholderQr::new(m);
        let sq = jacobi_square(&qr.r(), false);
        let k = sq.sigma.len();
        (sq.sigma, rows_to_columns(&sq.v_rows, k))
    } else {
        // mᵀ = Q·R, so m = Rᵀ·Qᵀ and the right vectors of m are Q·u(R).
        let qr = HouseholderQr::new(&m.transpose());
        let sq = jacobi_square(&qr.r(), true);
        let k = sq.sigma.len();
        let u_small = rows_to_columns(&sq.u_rows, k);
        (sq.sigma, qr.apply_q(&u_small))
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input() {
        let m = Matrix::from_diag(&[3.0, 2.0, 1.0]);
        let t = truncated_svd(&m, 2).unwrap();
        assert!((t.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((t.singular_values[1] - 2.0).abs() < 1e-14);
        let rec = t.reconstruct();
        assert!(rec.sub(&Matrix::from_diag(&[3.0, 2.0, 0.0])).max_abs() < 1e-14);
    }

    #[test]
    fn zero_input_has_orthonormal_factors() {
        let m = Matrix::zeros(4, 3);
        let t = truncated_svd(&m, 1).unwrap();
        assert_eq!(t.singular_values, alloc::vec![0.0]);
        assert!(t.left.column_orthonormality_residual() < 1e-12);
        assert!(t.right.column_orthonormality_residual() < 1e-12);
        assert_eq!(t.reconstruct().max_abs(), 0.0);
    }

    #[test]
    fn rank_out_of_range() {
        let m = Matrix::identity(3);
        assert!(truncated_svd(&m, 0).is_err());
        assert!(truncated_svd(&m, 4).is_err());
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&Matrix::from_diag(&[3.0, 2.0, 1.0])) - 3.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&Matrix::zeros(2, 3)), 0.0);
        let swap = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!((spectral_norm(&swap) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wide_right_system_is_orthonormal() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 0.0, -1.0], &[0.5, 0.0, 3.0, 1.0]]).unwrap();
        let (sigma, v) = right_singular_system(&m);
        assert_eq!(v.shape(), (4, 2));
        assert!(v.column_orthonormality_residual() < 1e-13);
        // m·v has orthogonal columns of norm σ.
        let mv = m.matmul(&v);
        let g = mv.gram();
        assert!((g.get(0, 0) - sigma[0] * sigma[0]).abs() < 1e-12);
        assert!(g.get(0, 1).abs() < 1e-12);
    }
}
