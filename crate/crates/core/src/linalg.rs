//! Small dense complex linear algebra.
//!
//! Beamformer design only ever needs Hermitian positive-definite solves of
//! dimension equal to the number of feeds per cluster (7 in the reference
//! scenario), so a plain row-major matrix and an unblocked Cholesky
//! factorization are all that is required here.

use num_complex::Complex64;

pub type CVector = Vec<Complex64>;

use crate::error::{Result, SimError};

/// Inner product `a^H b` (conjugates the left operand).
#[inline]
pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

#[inline]
pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Returns `a / ‖a‖`, or `None` for a zero or non-finite vector.
pub fn normalized(a: &[Complex64]) -> Option<CVector> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(a.iter().map(|x| x / n).collect())
    } else {
        None
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix whose rows are the given vectors.
    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SimError::Inconsistent("rows of unequal length".into()));
        }
        Ok(CMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// Adds `scale * v v^H` in place.
    pub fn add_outer(&mut self, v: &[Complex64], scale: f64) {
        assert!(self.rows == v.len() && self.cols == v.len());
        for i in 0..self.rows {
            let vi = v[i] * scale;
            for j in 0..self.cols {
                self.data[i * self.cols + j] += vi * v[j].conj();
            }
        }
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.rows.min(self.cols) {
            self.data[i * self.cols + i] += value;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cholesky factor `A = L L^H` of a Hermitian positive-definite matrix.
///
/// Only the lower triangle of the input is read.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(SimError::Inconsistent(format!(
                "cholesky of non-square {}x{} matrix",
                n,
                a.cols()
            )));
        }
        if !a.is_finite() {
            return Err(SimError::Inconsistent("non-finite matrix entry".into()));
        }
        let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
        // pivots below this are indistinguishable from rank deficiency
        let floor = scale * (n.max(1) as f64) * f64::EPSILON * 16.0;

        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > floor) {
                return Err(SimError::Singular(format!(
                    "non-positive pivot {d:e} at column {j}"
                )));
            }
            let d = d.sqrt();
            l[(j, j)] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> CVector {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.l;
        // forward: L y = b
        let mut y: CVector = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        // backward: L^H x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        y
    }
}
