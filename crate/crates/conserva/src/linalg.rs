//! Small dense linear algebra: row-major matrices and an LU direct solver.
//!
//! Desk-scale systems only (m ≤ a few thousand), so a dense factorization
//! with partial pivoting is all that is needed.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DMat<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> DMat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[R]) -> Vec<R> {
        let mut y = vec![R::zero(); self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[R], y: &mut [R]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = R::zero();
            for (aij, &xj) in row.iter().zip(x) {
                acc += *aij * xj;
            }
            *yi = acc;
        }
    }

    /// `C = A B`.
    pub fn mul_mat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == R::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&mut self, s: R) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu<R>> {
        assert_eq!(self.rows, self.cols, "LU needs a square matrix");
        let n = self.rows;
        let mut lu = self.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == R::zero() {
                return Err(Error::SingularMatrix(k));
            }
            if p != k {
                piv.swap(k, p);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let lkj = lu[(k, j)];
                    lu[(i, j)] -= factor * lkj;
                }
            }
        }
        Ok(Lu { lu, piv })
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for DMat<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for DMat<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factors of a square matrix, reusable across right-hand sides.
pub struct Lu<R> {
    lu: DMat<R>,
    piv: Vec<usize>,
}

impl<R: Real> Lu<R> {
    pub fn solve(&self, b: &[R]) -> Vec<R> {
        let n = self.lu.rows();
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<R> = self.piv.iter().map(|&p| b[p]).collect();
        // forward substitution with unit lower factor
        for i in 1..n {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        x
    }
}

/// One-shot dense solve `A x = b`.
pub fn solve_dense<R: Real>(a: &DMat<R>, b: &[R]) -> Result<Vec<R>> {
    Ok(a.lu()?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm2;

    #[test]
    fn lu_solves_small_system() {
        let a = DMat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => 4.0,
            (0, 1) => 1.0,
            (1, 0) => 1.0,
            (1, 1) => 3.0,
            (1, 2) => 1.0,
            (2, 1) => 1.0,
            (2, 2) => 2.0,
            _ => 0.0,
        });
        let x_true = vec![1.0, -2.0, 3.0];
        let b = a.mul_vec(&x_true);
        let x = solve_dense(&a, &b).unwrap();
        let diff: Vec<f64> = x.iter().zip(&x_true).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) < 1e-13);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a: DMat<f64> = DMat::zeros(2, 2);
        assert!(matches!(a.lu(), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let mut a = DMat::<f64>::zeros(2, 2);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 2.0;
        let x = solve_dense(&a, &[3.0, 4.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert!((x[1] - 3.0).abs() < 1e-15);
    }
}
