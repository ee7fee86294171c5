//! Minimal dense row-major matrix used for embeddings, prototypes and
//! encoder parameters. Only the handful of products the crate needs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", rows * cols),
                got: format!("{}", data.len()),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DegenerateInput("matrix with no rows".into()));
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::ShapeMismatch {
                    expected: format!("row of length {d}"),
                    got: format!("row {i} of length {}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: n, cols: d, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }

    /// `self (n x k) * other (m x k)^T -> n x m`; rows dotted with rows.
    pub fn matmul_nt(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = out.row_mut(i);
            for j in 0..other.rows {
                o[j] = dot(a, other.row(j));
            }
        }
        out
    }

    /// `self (n x k) * other (k x m) -> n x m`.
    pub fn matmul_nn(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = out.row_mut(i);
            for (k, &aik) in a.iter().enumerate() {
                let b = other.row(k);
                for j in 0..other.cols {
                    o[j] += aik * b[j];
                }
            }
        }
        out
    }

    /// `self (n x k)^T * other (n x m) -> k x m`.
    pub fn matmul_tn(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "outer dimensions must agree");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let b = other.row(i);
            for (k, &aik) in a.iter().enumerate() {
                let o = out.row_mut(k);
                for j in 0..other.cols {
                    o[j] += aik * b[j];
                }
            }
        }
        out
    }

    /// Gram matrix `self * self^T`.
    pub fn gram(&self) -> Matrix {
        self.matmul_nt(self)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// returned in ascending order. Sizes here are tiny (class counts).
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
    let n = m.nrows();
    let mut a = m.clone();
    let scale: f64 = a
        .data()
        .iter()
        .fold(0.0_f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.row(p)[q].abs();
            }
        }
        if off <= 1e-15 * scale * (n * n) as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.row(p)[q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.row(p)[p];
                let aqq = a.row(q)[q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.row(k)[p];
                    let akq = a.row(k)[q];
                    a.row_mut(k)[p] = c * akp - s * akq;
                    a.row_mut(k)[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a.row(p)[k];
                    let aqk = a.row(q)[k];
                    a.row_mut(p)[k] = c * apk - s * aqk;
                    a.row_mut(q)[k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.row(i)[i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}
