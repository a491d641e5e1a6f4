//! Small dense linear algebra: a row-major matrix and a square-root-free
//! Cholesky (LDLᵀ) factorization.
//!
//! Problem sizes in this crate are desk scale (tens of rows), so everything is
//! plain `Vec<f64>` with fixed left-to-right accumulation order. Results are
//! therefore bit-reproducible across runs and thread counts.

use crate::error::{check_len, Error, Result};

/// Inner product with left-to-right accumulation.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row vectors. `cols` fixes the width so that an
    /// empty row list still has a well-defined shape.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len("matrix row", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`, accumulated row by row.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// `A Aᵀ`, exactly symmetric (only the upper triangle is computed).
    pub fn gram(&self) -> Matrix {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn max_asymmetry(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        debug_assert!(self.is_square());
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    /// Quadratic form `xᵀ A x` for square `A`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `A = L D Lᵀ` with unit lower-triangular `L` and diagonal `D`.
///
/// Built with the up-looking (row by row) recurrence, which makes it easy to
/// factor an arbitrary subset of rows/columns of a larger matrix.
#[derive(Debug, Clone)]
pub struct Ldlt {
    /// Row stride of `l`.
    n: usize,
    /// Strictly lower part of `L`, row-major, `n × n`.
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldlt {
    /// Factors a symmetric matrix. Fails unless every pivot is strictly positive.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "LDLt factorization (square matrix)",
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let idx: Vec<usize> = (0..n).collect();
        let mut f = Self { n, l: vec![0.0; n * n], d: Vec::with_capacity(n) };
        for j in 0..n {
            let (row, dj) = f.candidate_row(a, &idx[..j], j);
            if !(dj > 0.0 && dj.is_finite()) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: dj });
            }
            f.l[j * n..j * n + j].copy_from_slice(&row);
            f.d.push(dj);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Row of `L` and pivot for index `j` of `a` given the already factored
    /// indices `kept`.
    fn candidate_row(&self, a: &Matrix, kept: &[usize], j: usize) -> (Vec<f64>, f64) {
        let stride = self.n;
        let mut row = Vec::with_capacity(kept.len());
        for (c, &k) in kept.iter().enumerate() {
            let mut s = a[(j, k)];
            for t in 0..c {
                s -= row[t] * self.l[c * stride + t] * self.d[t];
            }
            row.push(s / self.d[c]);
        }
        let dj = row.iter().zip(&self.d).fold(a[(j, j)], |acc, (l, d)| acc - l * l * d);
        (row, dj)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let stride = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let s = (0..i).fold(x[i], |acc, k| acc - self.l[i * stride + k] * x[k]);
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let s = (i + 1..n).fold(x[i], |acc, k| acc - self.l[k * stride + i] * x[k]);
            x[i] = s;
        }
        x
    }
}

/// Solves `A_SS x = b` for the principal submatrix of a symmetric PSD `a`
/// indexed by `support`, dropping indices whose pivot falls below
/// `rel_tol · A_jj` (numerically dependent rows). Dropped entries of the
/// result are zero. Returns `None` on non-finite pivots.
pub fn solve_dropping_dependent(
    a: &Matrix,
    support: &[usize],
    b: &[f64],
    rel_tol: f64,
) -> Option<Vec<f64>> {
    debug_assert_eq!(support.len(), b.len());
    let n = support.len();
    let mut f = Ldlt { n, l: vec![0.0; n * n], d: Vec::with_capacity(n) };
    let mut kept: Vec<usize> = Vec::with_capacity(n);
    let mut kept_pos: Vec<usize> = Vec::with_capacity(n);
    for (pos, &j) in support.iter().enumerate() {
        let (row, dj) = f.candidate_row(a, &kept, j);
        let scale = a[(j, j)].abs();
        if !dj.is_finite() {
            return None;
        }
        // Negative pivots of a PSD matrix are rounding noise as well.
        if dj <= rel_tol * scale {
            continue;
        }
        let c = kept.len();
        f.l[c * n..c * n + c].copy_from_slice(&row);
        f.d.push(dj);
        kept.push(j);
        kept_pos.push(pos);
    }
    // Re-pack L into a square of the kept size for `solve`.
    let k = kept.len();
    let mut packed = Ldlt { n: k, l: vec![0.0; k * k], d: f.d.clone() };
    for i in 0..k {
        packed.l[i * k..i * k + i].copy_from_slice(&f.l[i * n..i * n + i]);
    }
    let rhs: Vec<f64> = kept_pos.iter().map(|&p| b[p]).collect();
    let xs = packed.solve(&rhs);
    let mut x = vec![0.0; n];
    for (&p, v) in kept_pos.iter().zip(xs) {
        x[p] = v;
    }
    Some(x)
}
