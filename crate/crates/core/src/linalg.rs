//! Dense complex matrices and LU factorization.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// LU pivots smaller than this (relative to the largest entry) are singular.
pub const PIVOT_TOL: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMatrix) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &CMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    fn zip(&self, other: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Copies `src` into the block with top-left corner `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &CMatrix) {
        for i in 0..src.rows {
            let cols = self.cols;
            self.data[(r0 + i) * cols + c0..(r0 + i) * cols + c0 + src.cols]
                .copy_from_slice(src.row(i));
        }
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &CMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    pub fn determinant(&self) -> Result<LogDet> {
        Ok(self.lu()?.determinant())
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        Ok(self.lu()?.solve(&CMatrix::identity(self.rows)))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A determinant held as `phase * exp(log_abs)` so that products of many
/// pivots neither overflow nor underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogDet {
    pub fn value(&self) -> Complex64 {
        self.phase * self.log_abs.exp()
    }
}

/// `PA = LU` with unit lower-triangular `L`, stored packed.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut m = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, m[(i, k)].norm()))
                .fold((k, -1.0), |best, x| if x.1 > best.1 { x } else { best });
            if pivot < PIVOT_TOL * scale {
                return Err(Error::SingularTruncation { step: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    m.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let inv = m[(k, k)].inv();
            let pivot_row: Vec<Complex64> = m.row(k)[k + 1..].to_vec();
            for i in k + 1..n {
                let l = m[(i, k)] * inv;
                m[(i, k)] = l;
                if l == ZERO {
                    continue;
                }
                for (x, &u) in m.row_mut(i)[k + 1..].iter_mut().zip(&pivot_row) {
                    *x -= l * u;
                }
            }
        }
        Ok(Self {
            packed: m,
            perm,
            swaps,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn determinant(&self) -> LogDet {
        let mut log_abs = 0.0;
        let mut phase = if self.swaps % 2 == 0 { ONE } else { -ONE };
        for i in 0..self.dim() {
            let d = self.packed[(i, i)];
            log_abs += d.norm().ln();
            phase *= d / d.norm();
        }
        LogDet { log_abs, phase }
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let n = self.dim();
        assert_eq!(b.rows, n);
        let mut x = CMatrix::from_fn(n, b.cols, |i, j| b[(self.perm[i], j)]);
        for i in 0..n {
            for k in 0..i {
                let l = self.packed[(i, k)];
                if l == ZERO {
                    continue;
                }
                for j in 0..b.cols {
                    let v = x[(k, j)];
                    x[(i, j)] -= l * v;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.packed[(i, k)];
                if u == ZERO {
                    continue;
                }
                for j in 0..b.cols {
                    let v = x[(k, j)];
                    x[(i, j)] -= u * v;
                }
            }
            let inv = self.packed[(i, i)].inv();
            for v in x.row_mut(i) {
                *v *= inv;
            }
        }
        x
    }
}

/// Solves `X A = B` for `X` given the LU factorization of `A^T`.
pub fn solve_right(lu_of_transpose: &Lu, b: &CMatrix) -> CMatrix {
    lu_of_transpose.solve(&b.transpose()).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> CMatrix {
        CMatrix::from_rows(&[
            vec![c(2.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(3.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 2.0), c(1.0, 1.0), c(4.0, 0.0)],
        ])
    }

    fn det3(m: &CMatrix) -> Complex64 {
        m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
            - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
            + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = sample();
        let d = m.determinant().unwrap().value();
        assert!((d - det3(&m)).norm() < 1e-13);
    }

    #[test]
    fn permutation_sign() {
        let swap = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        assert!((swap.determinant().unwrap().value() + 1.0).norm() < 1e-15);
    }

    #[test]
    fn inverse_and_right_solve() {
        let m = sample();
        let inv = m.inverse().unwrap();
        assert!(m.matmul(&inv).max_diff(&CMatrix::identity(3)) < 1e-14);
        let b = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0)]]);
        let x = solve_right(&m.transpose().lu().unwrap(), &b);
        assert!(x.matmul(&m).max_diff(&b) < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(matches!(m.lu(), Err(Error::SingularTruncation { step: 1, .. })));
    }

    #[test]
    fn large_determinants_do_not_overflow() {
        let m = CMatrix::identity(400).scale(c(10.0, 0.0));
        let d = m.determinant().unwrap();
        assert!((d.log_abs - 400.0 * 10f64.ln()).abs() < 1e-9);
        assert!((d.phase - 1.0).norm() < 1e-12);
    }
}
