//! Householder QR for tall matrices.

use alloc::vec::Vec;

use super::matrix::{axpy, Matrix};

/// Compact Householder factorization `A = Q·R` of an `m × n` matrix with
/// `m ≥ n`. The sign convention makes every diagonal entry of `R`
/// nonnegative, so `Q` matches Gram-Schmidt on the columns of `A`.
pub(crate) struct HouseholderQr {
    /// Essential parts of the reflectors below the diagonal, `R` on and above.
    packed: Matrix,
    tau: Vec<f64>,
    /// `±1` per column, folded into `Q` and `R` to make `diag(R) ≥ 0`.
    signs: Vec<f64>,
}

impl HouseholderQr {
    pub(crate) fn new(a: &Matrix) -> Self {
        let (m, n) = a.shape();
        assert!(m >= n, "HouseholderQr needs rows >= cols");
        let mut packed = a.clone();
        let mut tau = Vec::with_capacity(n);
        let mut signs = Vec::with_capacity(n);
        let mut w = alloc::vec![0.0; n];

        for k in 0..n {
            let norm_sq: f64 = (k..m).map(|i| { let v = packed.get(i, k); v * v }).sum();
            let alpha = packed.get(k, k);
            let norm = libm::sqrt(norm_sq);
            if norm == 0.0 {
                tau.push(0.0);
                signs.push(1.0);
                continue;
            }
            let beta = if alpha >= 0.0 { -norm } else { norm };
            let scale = 1.0 / (alpha - beta);
            for i in k + 1..m {
                let v = packed.get(i, k) * scale;
                packed.set(i, k, v);
            }
            let t = (beta - alpha) / beta;
            packed.set(k, k, beta);
            tau.push(t);
            signs.push(if beta < 0.0 { -1.0 } else { 1.0 });

            // Apply H = I - t·v·vᵀ (v₀ = 1) to the trailing columns.
            if k + 1 < n {
                let tail = &mut w[k + 1..n];
                tail.copy_from_slice(&packed.row(k)[k + 1..n]);
                for i in k + 1..m {
                    let vi = packed.get(i, k);
                    let row = &packed.row(i)[k + 1..n];
                    axpy(vi, row, tail);
                }
                for x in tail.iter_mut() {
                    *x *= t;
                }
                let tail = &w[k + 1..n];
                for (x, y) in packed.row_mut(k)[k + 1..n].iter_mut().zip(tail) {
                    *x -= y;
                }
                for i in k + 1..m {
                    let vi = packed.get(i, k);
                    let row = &mut packed.row_mut(i)[k + 1..n];
                    axpy(-vi, tail, row);
                }
            }
        }
        Self { packed, tau, signs }
    }

    pub(crate) fn rows(&self) -> usize {
        self.packed.rows()
    }

    pub(crate) fn cols(&self) -> usize {
        self.packed.cols()
    }

    /// Upper-triangular `n × n` factor with nonnegative diagonal.
    pub(crate) fn r(&self) -> Matrix {
        let n = self.cols();
        Matrix::from_fn(n, n, |i, j| {
            if j >= i {
                self.signs[i] * self.packed.get(i, j)
            } else {
                0.0
            }
        })
    }

    /// `Q_thin · b` for an `n × p` matrix `b`, giving `m × p`.
    pub(crate) fn apply_q(&self, b: &Matrix) -> Matrix {
        let (m, n) = (self.rows(), self.cols());
        assert_eq!(b.rows(), n);
        let p = b.cols();
        let mut out = Matrix::zeros(m, p);
        for i in 0..n {
            let s = self.signs[i];
            for (o, v) in out.row_mut(i).iter_mut().zip(b.row(i)) {
                *o = s * v;
            }
        }
        let mut w = alloc::vec![0.0; p];
        for k in (0..n).rev() {
            let t = self.tau[k];
            if t == 0.0 {
                continue;
            }
            w.copy_from_slice(out.row(k));
            for i in k + 1..m {
                axpy(self.packed.get(i, k), out.row(i), &mut w);
            }
            for x in w.iter_mut() {
                *x *= t;
            }
            for (o, y) in out.row_mut(k).iter_mut().zip(&w) {
                *o -= y;
            }
            for i in k + 1..m {
                let vi = self.packed.get(i, k);
                axpy(-vi, &w, out.row_mut(i));
            }
        }
        out
    }

    /// Explicit thin `Q` (`m × n`, orthonormal columns).
    pub(crate) fn thin_q(&self) -> Matrix {
        self.apply_q(&Matrix::identity(self.cols()))
    }
}
