use alloc::vec::Vec;

use super::matrix::Matrix;
use super::qr::HouseholderQr;
use super::svd::{singular_values, svd};
use crate::error::{Error, Result};

/// Singular values below `PINV_RTOL · σ_max` are treated as zero.
pub const PINV_RTOL: f64 = 1e-12;

/// Moore-Penrose pseudo-inverse computed from the thin SVD.
pub fn pseudo_inverse(m: &Matrix) -> Result<Matrix> {
    let f = svd(m)?;
    let smax = f.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = PINV_RTOL * smax;
    let inv: Vec<f64> = f
        .singular_values
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    // M† = V·diag(1/σ)·Uᵀ
    Ok(f.right.scale_columns(&inv).matmul_transpose(&f.left))
}

/// Numerical rank with the pseudo-inverse tolerance.
pub fn numerical_rank(m: &Matrix) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > PINV_RTOL * smax && s > 0.0).count()
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky.
/// Returns `None` when a pivot is not safely positive.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut l = Matrix::zeros(n, n);
    let max_diag = (0..n).map(|i| a.get(i, i)).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    for j in 0..n {
        let lj = l.row(j);
        let d = a.get(j, j) - lj[..j].iter().map(|x| x * x).sum::<f64>();
        if d <= max_diag * 1e-13 {
            return None;
        }
        let d = libm::sqrt(d);
        l.set(j, j, d);
        for i in j + 1..n {
            let (li, lj) = (l.row(i), l.row(j));
            let s: f64 = li[..j].iter().zip(&lj[..j]).map(|(x, y)| x * y).sum();
            l.set(i, j, (a.get(i, j) - s) / d);
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let s: f64 = l.row(i)[..i].iter().zip(&y[..i]).map(|(x, y)| x * y).sum();
        y[i] = (y[i] - s) / l.get(i, i);
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l.get(k, i) * y[k]).sum();
        y[i] = (y[i] - s) / l.get(i, i);
    }
    Some(y)
}

/// Solves the symmetric positive-semidefinite system `A x = b`. Falls back to
/// the pseudo-inverse when Cholesky fails; the flag reports the fallback.
pub fn solve_psd(a: &Matrix, b: &[f64]) -> Result<(Vec<f64>, bool)> {
    if let Some(x) = cholesky_solve(a, b) {
        if x.iter().all(|v| v.is_finite()) {
            return Ok((x, false));
        }
    }
    let pinv = pseudo_inverse(a)?;
    Ok((pinv.matvec(b), true))
}

/// `M = L·Q` with `Q` row-orthonormal (`r × c`) and `L` lower triangular
/// (`r × r`) with nonnegative diagonal. Requires `r ≤ c`.
pub fn lq(m: &Matrix) -> (Matrix, Matrix) {
    assert!(m.rows() <= m.cols(), "lq needs rows <= cols");
    let qr = HouseholderQr::new(&m.transpose());
    (qr.r().transpose(), qr.thin_q().transpose())
}

/// Orthonormal basis for the row span of a full-row-rank matrix, obtained by
/// Gram-Schmidt order (first output row is the normalized first input row).
pub fn orthonormalize_rows(m: &Matrix) -> Result<Matrix> {
    if m.rows() > m.cols() {
        return Err(Error::invalid("orthonormalize_rows needs rows <= cols"));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("orthonormalize_rows input"));
    }
    let (l, q) = lq(m);
    let sv = singular_values(&l);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if smax == 0.0 || smin <= 1e-12 * smax {
        return Err(Error::degenerate("rows are numerically rank deficient"));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_examples() {
        let i3 = Matrix::identity(3);
        assert!(pseudo_inverse(&i3).unwrap().sub(&i3).max_abs() < 1e-14);

        let d = Matrix::from_diag(&[2.0, 0.0]);
        let p = pseudo_inverse(&d).unwrap();
        assert!(p.sub(&Matrix::from_diag(&[0.5, 0.0])).max_abs() < 1e-14);

        let col = Matrix::from_rows(&[&[1.0], &[1.0]]).unwrap();
        let p = pseudo_inverse(&col).unwrap();
        assert_eq!(p.shape(), (1, 2));
        assert!((p.get(0, 0) - 0.5).abs() < 1e-14);
        assert!((p.get(0, 1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn orthonormalize_examples() {
        let m = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 3.0]]).unwrap();
        let q = orthonormalize_rows(&m).unwrap();
        assert!(q.sub(&Matrix::identity(2)).max_abs() < 1e-15);

        let m = Matrix::from_rows(&[&[1.0, 1.0, 0.0]]).unwrap();
        let q = orthonormalize_rows(&m).unwrap();
        let h = 1.0 / libm::sqrt(2.0);
        assert!(q.sub(&Matrix::from_rows(&[&[h, h, 0.0]]).unwrap()).max_abs() < 1e-15);

        let i3 = Matrix::identity(3);
        assert!(orthonormalize_rows(&i3).unwrap().sub(&i3).max_abs() < 1e-15);
    }

    #[test]
    fn orthonormalize_rejects_rank_deficient() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]).unwrap();
        assert!(matches!(orthonormalize_rows(&m), Err(Error::Degenerate(_))));
    }

    #[test]
    fn cholesky_and_fallback() {
        let a = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]).unwrap();
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);

        let singular = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let (x, fallback) = solve_psd(&singular, &[2.0, 2.0]).unwrap();
        assert!(fallback);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lq_reconstructs() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 0.0, 1.0], &[0.0, 1.0, 3.0, -1.0]]).unwrap();
        let (l, q) = lq(&m);
        assert!(l.matmul(&q).sub(&m).max_abs() < 1e-14);
        assert!(q.row_orthonormality_residual() < 1e-14);
        assert_eq!(l.get(0, 1), 0.0);
    }
}
