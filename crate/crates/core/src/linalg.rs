//! Small dense helpers. Matrices here are at most a few hundred wide, so a
//! plain Cholesky factorization is all the solvers and the inference code need.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{MinPenError, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<F> {
    lower: Array2<F>,
}

impl<F: Scalar> Cholesky<F> {
    /// Factorizes `a`. Pivots below `tol * max_diag` are reported as a
    /// positive-definiteness failure.
    pub fn new(a: ArrayView2<F>, tol: F) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(MinPenError::DimensionMismatch(format!(
                "Cholesky needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let scale = (0..n).map(|i| a[[i, i]].abs()).fold(F::zero(), F::max);
        let floor = tol * scale.max(F::min_positive_value());
        let mut l = Array2::<F>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > floor) {
                return Err(MinPenError::NotPositiveDefinite(format!(
                    "pivot {} is {:e}",
                    j,
                    d.as_f64()
                )));
            }
            let d = d.sqrt();
            l[[j, j]] = d;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / d;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn solve_vec(&self, b: ArrayView1<F>) -> Array1<F> {
        let n = self.dim();
        let l = &self.lower;
        let mut y = b.to_owned();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[[i, k]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        y
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: ArrayView2<F>) -> Array2<F> {
        let mut out = Array2::<F>::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.solve_vec(col));
        }
        out
    }

    pub fn inverse(&self) -> Array2<F> {
        self.solve_mat(Array2::<F>::eye(self.dim()).view())
    }
}

/// `Xᵀ X / scale`, exploiting symmetry.
pub fn gram<F: Scalar>(x: ArrayView2<F>, scale: F) -> Array2<F> {
    let q = x.ncols();
    let mut g = Array2::<F>::zeros((q, q));
    for a in 0..q {
        let ca = x.column(a);
        for b in a..q {
            let v = ca.dot(&x.column(b)) / scale;
            g[[a, b]] = v;
            g[[b, a]] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = array![1.0, -2.0, 0.5];
        let ch = Cholesky::new(a.view(), 1e-12).unwrap();
        let x = ch.solve_vec(b.view());
        let back = a.dot(&x);
        for i in 0..3 {
            assert_abs_diff_eq!(back[i], b[i], epsilon = 1e-12);
        }
        let inv = ch.inverse();
        let eye = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(eye[[i, j]], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(matches!(
            Cholesky::new(a.view(), 1e-12),
            Err(MinPenError::NotPositiveDefinite(_))
        ));
    }
}
