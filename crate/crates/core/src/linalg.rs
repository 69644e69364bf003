//! Dense complex matrix kernel.
//!
//! [`CMatrix`] wraps a column-major `nalgebra` matrix of `Complex<f64>` but
//! exposes a row-major logical view: constructors take rows, and indices are
//! `(row, col)`. Everything the scheme builders need lives here: null-space
//! bases, inversion with a rank check, block stacking and a stable
//! log-determinant for Hermitian positive-definite matrices.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<Complex64>);

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        CMatrix(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(CMatrix(DMatrix::from_row_slice(rows, cols, entries)))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self::from_fn(rows.len(), cols, |i, j| {
            Complex64::new(rows[i][j], 0.0)
        }))
    }

    pub fn column_vector(entries: &[Complex64]) -> Self {
        CMatrix(DMatrix::from_column_slice(entries.len(), 1, entries))
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                entries[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    /// Plain (non-conjugating) transpose.
    pub fn transpose(&self) -> Self {
        CMatrix(self.0.transpose())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        CMatrix(self.0.map(|z| z * factor))
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(CMatrix(&self.0 * &rhs.0))
    }

    /// Copies `count` rows starting at `start`.
    pub fn row_block(&self, start: usize, count: usize) -> Self {
        CMatrix(self.0.rows(start, count).into_owned())
    }

    /// Copies `count` columns starting at `start`.
    pub fn col_block(&self, start: usize, count: usize) -> Self {
        CMatrix(self.0.columns(start, count).into_owned())
    }

    /// Writes `block` into `self` with its top-left corner at `(row, col)`.
    pub fn set_block(&mut self, row: usize, col: usize, block: &CMatrix) {
        self.0
            .view_mut((row, col), block.shape())
            .copy_from(&block.0);
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows() == 0 || self.cols() == 0 {
            return Vec::new();
        }
        let mut sv: Vec<f64> = self.0.clone().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Ratio of the largest to the smallest singular value.
    pub fn condition_number(&self) -> f64 {
        let sv = self.singular_values();
        match (sv.first(), sv.last()) {
            (Some(&max), Some(&min)) if min > 0.0 => max / min,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.get(i, j);
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panics on incompatible shapes; use [`CMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

/// Default rank threshold: `max(rows, cols) * eps * sigma_max`.
fn default_rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Numerical rank. `tol = 0` selects the default relative threshold,
/// otherwise singular values at or below `tol * sigma_max` count as zero.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    let sv = m.singular_values();
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let threshold = if tol > 0.0 {
        tol * sigma_max
    } else {
        default_rank_threshold(m.rows(), m.cols(), sigma_max)
    };
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Orthonormal basis of the right null space `{x : m x = 0}`.
///
/// Returns a `cols(m) x k` matrix with `k = cols(m) - rank(m)`; `k = 0` gives
/// an empty basis. Each column is phase-normalized so that its first
/// non-negligible entry is real and positive, which makes the basis
/// deterministic for a given input.
pub fn null_space_basis(m: &CMatrix, tol: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    // A thin SVD of a wide matrix does not return the full right basis, so
    // pad with zero rows until the matrix is at least square.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(&m.0);
        p
    } else {
        m.0.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let threshold = if tol > 0.0 {
        tol * sigma_max
    } else {
        default_rank_threshold(rows, cols, sigma_max)
    };

    let null_rows: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= threshold).collect();
    let mut basis = CMatrix::zeros(cols, null_rows.len());
    for (k, &i) in null_rows.iter().enumerate() {
        // Row i of V^H is the conjugate of the i-th right singular vector.
        let mut column: Vec<Complex64> = v_t.row(i).iter().map(|z| z.conj()).collect();
        fix_phase(&mut column);
        for (r, z) in column.into_iter().enumerate() {
            basis.set(r, k, z);
        }
    }
    basis
}

fn fix_phase(column: &mut [Complex64]) {
    let norm = column.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    if let Some(pivot) = column.iter().find(|z| z.norm() > 1e-8 * norm) {
        let rot = pivot.conj() / pivot.norm();
        for z in column.iter_mut() {
            *z *= rot;
        }
    }
}

/// Inverse together with the condition number of the input.
pub fn invert_with_condition(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a non-square {rows}x{cols} matrix"
        )));
    }
    let sv = m.singular_values();
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    let condition = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    if sigma_min <= default_rank_threshold(rows, cols, sigma_max) {
        return Err(Error::SingularMatrix { condition });
    }
    let inverse =
        m.0.clone()
            .lu()
            .try_inverse()
            .ok_or(Error::SingularMatrix { condition })?;
    let inverse = CMatrix(inverse);
    if !inverse.is_finite() {
        return Err(Error::SingularMatrix { condition });
    }
    Ok((inverse, condition))
}

pub fn invert(m: &CMatrix) -> Result<CMatrix> {
    invert_with_condition(m).map(|(inv, _)| inv)
}

/// Vertical concatenation in list order.
pub fn stack_rows(blocks: &[CMatrix]) -> Result<CMatrix> {
    let cols = match blocks.first() {
        Some(b) => b.cols(),
        None => return Err(Error::DimensionMismatch("no blocks to stack".into())),
    };
    if let Some(bad) = blocks.iter().find(|b| b.cols() != cols) {
        return Err(Error::DimensionMismatch(format!(
            "row stacking needs {cols} columns, got {}",
            bad.cols()
        )));
    }
    let rows = blocks.iter().map(CMatrix::rows).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        out.set_block(offset, 0, b);
        offset += b.rows();
    }
    Ok(out)
}

/// Horizontal concatenation in list order.
pub fn stack_cols(blocks: &[CMatrix]) -> Result<CMatrix> {
    let rows = match blocks.first() {
        Some(b) => b.rows(),
        None => return Err(Error::DimensionMismatch("no blocks to stack".into())),
    };
    if let Some(bad) = blocks.iter().find(|b| b.rows() != rows) {
        return Err(Error::DimensionMismatch(format!(
            "column stacking needs {rows} rows, got {}",
            bad.rows()
        )));
    }
    let cols = blocks.iter().map(CMatrix::cols).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        out.set_block(0, offset, b);
        offset += b.cols();
    }
    Ok(out)
}

pub fn block_diagonal(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(CMatrix::rows).sum();
    let cols = blocks.iter().map(CMatrix::cols).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.set_block(r, c, b);
        r += b.rows();
        c += b.cols();
    }
    out
}

/// `log2 det(m)` for Hermitian positive-definite `m`, as a sum of log
/// Cholesky pivots. The input is symmetrized as `(m + m^H) / 2` first.
pub fn log_det_hermitian_pd(m: &CMatrix) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::DimensionMismatch(format!(
            "log-det of a non-square {rows}x{cols} matrix"
        )));
    }
    let sym = (&m.0 + m.0.adjoint()) * Complex64::new(0.5, 0.0);
    // Cholesky with real pivots, so a non-positive pivot is caught directly
    // instead of surfacing as a complex square root.
    let mut l = DMatrix::<Complex64>::zeros(rows, rows);
    let mut acc = 0.0;
    for j in 0..rows {
        let pivot = sym[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if pivot.is_nan() || pivot <= 0.0 || pivot.is_infinite() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = pivot.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..rows {
            let dot: Complex64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (sym[(i, j)] - dot) / d;
        }
        acc += pivot.log2();
    }
    Ok(acc)
}
