//! Dense matrices and the minimum-norm least-squares kernel.
//!
//! [`Matrix`] is a small row-major container. Heavy factorizations convert to
//! `nalgebra` storage for a Householder QR; the triangular factor is then
//! handled by a Golub–Kahan SVD that never materializes the singular vectors.
//! [`solve_least_squares`] and [`PrefixLeastSquares`] solve for one target
//! vector, [`pseudoinverse`] for the whole of `Qᵀ`.
//!
//! Singular values below `max(rows, cols) · σ_max · ε` count as zero.

mod svd_solve;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) use svd_solve::min_norm_solve;

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input(format!("matrix must be at least 1x1, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::input(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Matrix::new(rows.len(), cols, data)
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Matrix::from_fn(values.len(), values.len(), |r, c| if r == c { values[r] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.row_iter().map(|row| row[c]).collect()
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::input(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::input(format!(
                "cannot multiply {}x{} matrix by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(self.prefix_matvec(v))
    }

    /// Multiplies the leading `v.len()` columns by `v`.
    pub(crate) fn prefix_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert!(v.len() <= self.cols);
        self.row_iter().map(|row| dot(&row[..v.len()], v)).collect()
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::input("matrix shapes differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix::new(self.rows, self.cols, data)
    }

    /// Horizontal concatenation; all blocks must share the row count.
    pub fn hconcat(blocks: &[&Matrix]) -> Result<Matrix> {
        let rows = blocks.first().map(|b| b.rows).ok_or_else(|| Error::input("no blocks"))?;
        if let Some(bad) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::input(format!(
                "row mismatch in concatenation: {} vs {rows}",
                bad.rows
            )));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(r));
            }
        }
        Matrix::new(rows, cols, data)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Matrix {
        Matrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.row_iter() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cutoff_scale(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("{what} contains non-finite entries")))
    }
}

/// Moore–Penrose pseudoinverse.
///
/// For `rows ≥ cols`, `M = QR` and `M⁺ = R⁺Qᵀ`, obtained as the minimum-norm
/// solution of `R X = Qᵀ`. Wide matrices go through `M⁺ = ((Mᵀ)⁺)ᵀ`.
pub fn pseudoinverse(m: &Matrix) -> Result<Matrix> {
    ensure_finite(m, "matrix")?;
    if m.rows < m.cols {
        return Ok(pseudoinverse(&m.transpose())?.transpose());
    }
    let (rows, cols) = m.shape();
    let qr = m.to_nalgebra().qr();
    let r = qr.r();
    let q_t = qr.q().transpose();
    let mut block = r.as_slice().to_vec();
    let mut rhs = q_t.as_slice().to_vec();
    let sol = min_norm_solve(&mut block, cols, &mut rhs, cutoff_scale(rows, cols))?;
    Ok(Matrix::from_nalgebra(&DMatrix::from_vec(cols, rows, sol.beta)))
}

/// Minimum-norm solution of `min ‖Dβ − y‖₂`.
pub fn solve_least_squares(design: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    PrefixLeastSquares::new(design, y)?.solve(design.cols())
}

/// Least-squares solver that factors a design once and then solves for any
/// leading block of its columns.
///
/// For a design `D` with QR factorization `D = QR`, the leading `p` columns
/// factor as `D[:, ..p] = Q R[..p, ..p]`, so one Householder QR serves every
/// column prefix. Each [`solve`](Self::solve) then runs an SVD-based
/// minimum-norm solve on the small triangular block.
pub struct PrefixLeastSquares {
    rows: usize,
    cols: usize,
    /// Upper-trapezoidal factor, `min(rows, cols) x cols`.
    r: DMatrix<f64>,
    /// Leading `min(rows, cols)` entries of `Qᵀy`.
    qty: Vec<f64>,
}

impl PrefixLeastSquares {
    pub fn new(design: &Matrix, y: &[f64]) -> Result<Self> {
        if design.rows() != y.len() {
            return Err(Error::input(format!(
                "design has {} rows but target has length {}",
                design.rows(),
                y.len()
            )));
        }
        ensure_finite(design, "design matrix")?;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::input("target vector contains non-finite entries"));
        }
        let (rows, cols) = design.shape();
        let k = rows.min(cols);
        let qr = design.to_nalgebra().qr();
        let mut qty = DVector::from_column_slice(y);
        qr.q_tr_mul(&mut qty);
        let r = qr.r();
        debug_assert_eq!(r.shape(), (k, cols));
        Ok(PrefixLeastSquares { rows, cols, r, qty: qty.as_slice()[..k].to_vec() })
    }

    pub fn max_cols(&self) -> usize {
        self.cols
    }

    /// Minimum-norm coefficients for the first `cols` columns of the design.
    pub fn solve(&self, cols: usize) -> Result<Vec<f64>> {
        if cols == 0 || cols > self.cols {
            return Err(Error::input(format!(
                "prefix width {cols} outside 1..={}",
                self.cols
            )));
        }
        // Square column-major block, zero-padded below when rows < cols.
        let k = self.r.nrows().min(cols);
        let mut block = vec![0.0; cols * cols];
        for c in 0..cols {
            let top = (c + 1).min(k);
            for r in 0..top {
                block[r + c * cols] = self.r[(r, c)];
            }
        }
        let mut rhs = vec![0.0; cols];
        rhs[..k].copy_from_slice(&self.qty[..k]);
        let sol = min_norm_solve(&mut block, cols, &mut rhs, cutoff_scale(self.rows, cols))?;
        Ok(sol.beta)
    }
}
