//! Small dense linear algebra: row-major matrices, pivoted Householder least
//! squares and Cholesky solves.
//!
//! Problem sizes here are tiny (a few dozen columns), so everything is plain
//! loops over contiguous rows.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "mul_vec: length mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Inner product with four independent partial sums so the loop pipelines.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Householder QR with column pivoting of an `m x n` matrix.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    // R on and above the diagonal, Householder vectors (unit leading entry
    // implied) below it.
    factors: Matrix<T>,
    betas: Vec<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        let (m, n) = (a.rows, a.cols);
        let mut f = a.clone();
        let steps = m.min(n);
        let mut betas = vec![T::zero(); steps];
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..steps {
            let mut best = k;
            let mut best_norm = T::neg_infinity();
            for j in k..n {
                let s = (k..m).fold(T::zero(), |acc, i| acc + f[(i, j)] * f[(i, j)]);
                if s > best_norm {
                    best_norm = s;
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    let tmp = f[(i, k)];
                    f[(i, k)] = f[(i, best)];
                    f[(i, best)] = tmp;
                }
                perm.swap(k, best);
            }

            let norm = best_norm.sqrt();
            if norm == T::zero() {
                continue;
            }
            let x0 = f[(k, k)];
            let alpha = if x0 >= T::zero() { -norm } else { norm };
            let v0 = x0 - alpha;
            // v = x - alpha e1, rescaled so that v[0] = 1
            for i in k + 1..m {
                f[(i, k)] /= v0;
            }
            let vtv = T::one() + (k + 1..m).fold(T::zero(), |acc, i| acc + f[(i, k)] * f[(i, k)]);
            let beta = T::lit(2.0) / vtv;
            betas[k] = beta;
            f[(k, k)] = alpha;

            for j in k + 1..n {
                let mut s = f[(k, j)];
                for i in k + 1..m {
                    s += f[(i, k)] * f[(i, j)];
                }
                s *= beta;
                f[(k, j)] -= s;
                for i in k + 1..m {
                    let vik = f[(i, k)];
                    f[(i, j)] -= s * vik;
                }
            }
        }

        let r00 = if steps > 0 { f[(0, 0)].abs() } else { T::zero() };
        let tol = T::epsilon() * T::from_usize_lossy(m.max(n)) * T::lit(10.0) * r00;
        let rank = if r00 == T::zero() {
            0
        } else {
            (0..steps).take_while(|&k| f[(k, k)].abs() > tol).count()
        };

        Self {
            factors: f,
            betas,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Least-squares solution of `A x ~ b`; fails unless `A` has full column rank.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let (m, n) = (self.factors.rows, self.factors.cols);
        if b.len() != m {
            return Err(Error::Dimension(format!(
                "right-hand side has {} entries, design has {m} rows",
                b.len()
            )));
        }
        if self.rank < n {
            return Err(Error::RankDeficient {
                deficient: n - self.rank,
                columns: n,
            });
        }
        let f = &self.factors;
        let mut y = b.to_vec();
        for k in 0..n {
            let mut s = y[k];
            for i in k + 1..m {
                s += f[(i, k)] * y[i];
            }
            s *= self.betas[k];
            y[k] -= s;
            for i in k + 1..m {
                y[i] -= s * f[(i, k)];
            }
        }
        let mut z = vec![T::zero(); n];
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in k + 1..n {
                s -= f[(k, j)] * z[j];
            }
            z[k] = s / f[(k, k)];
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        Ok(x)
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Dimension("Cholesky of a non-square matrix".into()));
        }
        let n = a.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let l = &self.lower;
        let n = l.rows;
        assert_eq!(b.len(), n, "Cholesky::solve: length mismatch");
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = l[(i, k)] * y[k];
                y[i] -= t;
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = l[(k, i)] * y[k];
                y[i] -= t;
            }
            y[i] /= l[(i, i)];
        }
        y
    }
}
