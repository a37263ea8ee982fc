//! Minimal dense linear algebra: row-major matrices and Householder QR.
//!
//! The regressor matrices here are tall and very thin (N up to 10^6, n below
//! ~16), so a hand-rolled QR beats pulling in a full linear algebra stack.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// self * other
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        Ok(out)
    }

    /// self^T * v for a column vector v of length `rows`.
    pub fn transpose_times(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let w = v[r];
            for (o, &x) in out.iter_mut().zip(row) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// self * v for a vector v of length `cols`.
    pub fn times(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), v)).collect())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Orthogonal matrix whose first column is the unit vector `v`, completed by
/// the Householder reflector that maps e1 to v. Falls back to the identity
/// when v is already e1.
pub fn orthogonal_with_first_column(v: &[f64]) -> Mat {
    let n = v.len();
    let mut w: Vec<f64> = v.to_vec();
    w[0] -= 1.0; // w = v - e1
    let ww = dot(&w, &w);
    if ww < 1e-28 {
        return Mat::identity(n);
    }
    let scale = 2.0 / ww;
    let mut h = Mat::identity(n);
    for i in 0..n {
        for j in 0..n {
            let x = h.at(i, j) - scale * w[i] * w[j];
            h.set(i, j, x);
        }
    }
    h
}

/// Compact QR of a tall matrix via Householder reflections.
///
/// Stores the reflectors and R so that several right-hand sides can be solved
/// against the same factorization.
pub struct Qr {
    cols: usize,
    rows: usize,
    /// reflector k lives in column k, rows k.. of the working copy
    work: Mat,
    betas: Vec<f64>,
}

impl Qr {
    pub fn new(a: &Mat) -> Result<Qr> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(Error::InsufficientDataLength {
                n_data: m,
                order: n,
            });
        }
        let mut w = a.clone();
        let mut betas = vec![0.0; n];
        for k in 0..n {
            // Householder vector for column k below the diagonal.
            let mut norm_sq = 0.0;
            for i in k..m {
                let x = w.at(i, k);
                norm_sq += x * x;
            }
            let norm = norm_sq.sqrt();
            if norm == 0.0 {
                betas[k] = 0.0;
                continue;
            }
            let akk = w.at(k, k);
            let alpha = if akk >= 0.0 { -norm } else { norm };
            let v0 = akk - alpha;
            // v = [v0, a(k+1..m, k)]; beta = 2 / v'v
            let vv = v0 * v0 + (norm_sq - akk * akk);
            let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
            betas[k] = beta;
            w.set(k, k, alpha);
            // store v scaled so the implicit leading entry is v0 itself
            // (v0 kept separately via alpha reconstruction): keep v0 in a side slot
            // -> simplest: store v0 over nothing; we stash v0 via recompute below.
            // We instead normalize v so v0 = 1 and fold the scaling into beta.
            if v0 != 0.0 {
                let inv = 1.0 / v0;
                for i in k + 1..m {
                    let x = w.at(i, k) * inv;
                    w.set(i, k, x);
                }
                betas[k] = beta * v0 * v0;
            } else {
                betas[k] = 0.0;
            }
            // apply reflector to remaining columns
            for j in k + 1..n {
                let mut s = w.at(k, j);
                for i in k + 1..m {
                    s += w.at(i, k) * w.at(i, j);
                }
                s *= betas[k];
                let x = w.at(k, j) - s;
                w.set(k, j, x);
                for i in k + 1..m {
                    let y = w.at(i, j) - s * w.at(i, k);
                    w.set(i, j, y);
                }
            }
        }
        Ok(Qr {
            cols: n,
            rows: m,
            work: w,
            betas,
        })
    }

    /// Condition estimate of the Gram matrix A^T A from the R diagonal.
    pub fn gram_cond_estimate(&self) -> f64 {
        let mut dmax: f64 = 0.0;
        let mut dmin = f64::INFINITY;
        for k in 0..self.cols {
            let d = self.work.at(k, k).abs();
            dmax = dmax.max(d);
            dmin = dmin.min(d);
        }
        if dmin == 0.0 {
            f64::INFINITY
        } else {
            (dmax / dmin).powi(2)
        }
    }

    /// Least-squares solution of A x = b.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: b.len(),
            });
        }
        let cond = self.gram_cond_estimate();
        if !cond.is_finite() || cond >= 1e12 {
            return Err(Error::RankDeficient {
                cond_estimate: cond,
            });
        }
        let (m, n) = (self.rows, self.cols);
        let mut y = b.to_vec();
        for k in 0..n {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut s = y[k];
            for i in k + 1..m {
                s += self.work.at(i, k) * y[i];
            }
            s *= beta;
            y[k] -= s;
            for i in k + 1..m {
                y[i] -= s * self.work.at(i, k);
            }
        }
        // back substitution on R
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in k + 1..n {
                s -= self.work.at(k, j) * x[j];
            }
            x[k] = s / self.work.at(k, k);
        }
        Ok(x)
    }
}
