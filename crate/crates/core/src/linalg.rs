//! Small dense matrices and the linear-algebra kernels the checkers need.
//!
//! Systems at desk scale have a handful of state variables, so everything
//! here is written for small `n`: one-sided Jacobi SVD for singular values
//! and vectors, Gauss-Jordan inverse with partial pivoting, and the spectral
//! norm (largest singular value), which is the matrix norm used throughout
//! because it gives `‖I‖ = 1`.

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Mat::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)] * v[j])
                    .fold(T::zero(), |a, b| a + b)
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|&x| x * x)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|x| x.abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Spectral norm: the largest singular value.
    pub fn spectral_norm(&self) -> T {
        if self.data.iter().all(|&x| x == T::zero()) {
            return T::zero();
        }
        self.singular_values()[0]
    }

    /// Singular values in descending order, via one-sided Jacobi.
    pub fn singular_values(&self) -> Vec<T> {
        self.svd().sigma
    }

    /// One-sided (Hestenes) Jacobi SVD: `self = U · diag(sigma) · Vᵀ`.
    ///
    /// Accurate to high relative precision for the small matrices used here.
    /// Columns are ordered by descending singular value. For singular values
    /// that are exactly zero the corresponding column of `u` is zero.
    pub fn svd(&self) -> Svd<T> {
        assert!(self.is_square(), "svd expects a square matrix");
        let n = self.rows;
        let mut b = self.clone();
        let mut v = Mat::identity(n);
        let eps = T::epsilon() * T::of(16.0);
        let max_sweeps = 60;

        for _ in 0..max_sweeps {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut app = T::zero();
                    let mut aqq = T::zero();
                    let mut apq = T::zero();
                    for i in 0..n {
                        app = app + b[(i, p)] * b[(i, p)];
                        aqq = aqq + b[(i, q)] * b[(i, q)];
                        apq = apq + b[(i, p)] * b[(i, q)];
                    }
                    if apq.abs() <= eps * (app * aqq).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (aqq - app) / (T::of(2.0) * apq);
                    let t = {
                        let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                        sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..n {
                        let bip = b[(i, p)];
                        let biq = b[(i, q)];
                        b[(i, p)] = c * bip - s * biq;
                        b[(i, q)] = s * bip + c * biq;
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = c * vip - s * viq;
                        v[(i, q)] = s * vip + c * viq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }

        let mut cols: Vec<(T, Vec<T>, Vec<T>)> = (0..n)
            .map(|j| {
                let bj = b.col(j);
                let sigma = norm2(&bj);
                let uj = if sigma > T::zero() {
                    bj.iter().map(|&x| x / sigma).collect()
                } else {
                    vec![T::zero(); n]
                };
                (sigma, uj, v.col(j))
            })
            .collect();
        cols.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

        let sigma: Vec<T> = cols.iter().map(|c| c.0).collect();
        let u = Mat::from_fn(n, n, |i, j| cols[j].1[i]);
        let v = Mat::from_fn(n, n, |i, j| cols[j].2[i]);
        Svd { u, sigma, v }
    }

    /// Inverse via Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat<T>> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if a[(r, col)].abs() > a[(pivot, col)].abs() {
                    pivot = r;
                }
            }
            let p = a[(pivot, col)];
            if p.abs() <= T::epsilon() * T::of(64.0) * self.max_abs().max(T::one()) {
                return Err(Error::Singular(format!(
                    "pivot {:e} too small at column {col}",
                    p
                )));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    inv.data.swap(col * n + j, pivot * n + j);
                }
            }
            let inv_p = T::one() / a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] * inv_p;
                inv[(col, j)] = inv[(col, j)] * inv_p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] = a[(r, j)] - f * a[(col, j)];
                    inv[(r, j)] = inv[(r, j)] - f * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> T {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if a[(r, col)].abs() > a[(pivot, col)].abs() {
                    pivot = r;
                }
            }
            if a[(pivot, col)] == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            det = det * a[(col, col)];
            for r in (col + 1)..n {
                let f = a[(r, col)] / a[(col, col)];
                for j in col..n {
                    a[(r, j)] = a[(r, j)] - f * a[(col, j)];
                }
            }
        }
        det
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of [`Mat::svd`].
pub struct Svd<T> {
    pub u: Mat<T>,
    pub sigma: Vec<T>,
    pub v: Mat<T>,
}

/// Euclidean norm of a vector.
pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter()
        .map(|&x| x * x)
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x * y)
        .fold(T::zero(), |a, b| a + b)
}

pub fn add_vec<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub_vec<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn normalize<T: Real>(v: &[T]) -> Vec<T> {
    let n = norm2(v);
    assert!(n > T::zero(), "cannot normalize a zero vector");
    v.iter().map(|&x| x / n).collect()
}
