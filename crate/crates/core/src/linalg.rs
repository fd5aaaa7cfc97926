//! Small dense row-major matrices.
//!
//! Network layers here are tiny (widths in the single digits), so a flat `Vec<f64>` beats a
//! general linear-algebra crate on the hot path. `nalgebra` is only used for inversion.

use crate::error::{LabError, Result};

/// Relative tolerance of the power iteration used by [`spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-10;
const SPECTRAL_MAX_ITERS: usize = 20_000;

/// Borrowed row-major matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

impl<'a> MatRef<'a> {
    pub fn new(rows: usize, cols: usize, data: &'a [f64]) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        MatRef { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &'a [f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = self * x`.
    #[inline]
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn to_owned(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.to_vec(),
        }
    }
}

/// Owned row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from nested rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(LabError::LengthMismatch {
                left: c,
                right: bad.len(),
            });
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.as_ref().row(r).to_vec()).collect()
    }

    pub fn as_ref(&self) -> MatRef<'_> {
        MatRef::new(self.rows, self.cols, &self.data)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Inverse via LU. Fails when the matrix is numerically singular.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(LabError::Singular(format!(
                "non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Matrix::zeros(0, 0));
        }
        let m = nalgebra::DMatrix::from_row_slice(n, n, &self.data);
        let inv = m
            .try_inverse()
            .ok_or_else(|| LabError::Singular(format!("{n}x{n} matrix has no inverse")))?;
        let mut out = Matrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, inv[(r, c)]);
            }
        }
        if out.data.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Singular("inverse has non-finite entries".into()));
        }
        Ok(out)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn frobenius_norm(m: MatRef<'_>) -> f64 {
    norm(m.data)
}

/// Largest singular value by power iteration on `MᵀM`.
///
/// The iteration starts from the row of largest norm (never orthogonal to the row space) and
/// stops once successive estimates agree to [`SPECTRAL_TOL`] relative.
pub fn spectral_norm(m: MatRef<'_>) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    let fro = frobenius_norm(m);
    if fro == 0.0 {
        return 0.0;
    }
    if m.rows == 1 || m.cols == 1 {
        return fro;
    }
    let best_row = (0..m.rows)
        .max_by(|&a, &b| norm(m.row(a)).total_cmp(&norm(m.row(b))))
        .unwrap_or(0);
    // Nudge off the chosen row so an accidental orthogonality to the top singular vector is
    // broken by the first few iterations.
    let mut v: Vec<f64> = m
        .row(best_row)
        .iter()
        .enumerate()
        .map(|(i, x)| x + 1e-3 * fro * (1.0 + i as f64) / m.cols as f64)
        .collect();
    let mut mv = vec![0.0; m.rows];
    let mut prev = 0.0;
    let mut est = 0.0;
    for _ in 0..SPECTRAL_MAX_ITERS {
        let nv = norm(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        m.matvec_into(&v, &mut mv);
        est = norm(&mv);
        // v <- Mᵀ M v
        for (c, vc) in v.iter_mut().enumerate() {
            *vc = (0..m.rows).map(|r| m.get(r, c) * mv[r]).sum();
        }
        if (est - prev).abs() <= SPECTRAL_TOL * est {
            break;
        }
        prev = est;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svd_norm(m: &Matrix) -> f64 {
        let d = nalgebra::DMatrix::from_row_slice(m.rows, m.cols, &m.data);
        d.singular_values().max()
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 0.5], vec![-3.0, 0.2, 1.0]]).unwrap();
        let s = spectral_norm(m.as_ref());
        assert!((s - svd_norm(&m)).abs() < 1e-8 * s);
    }

    #[test]
    fn spectral_norm_of_identity_and_zero() {
        assert!((spectral_norm(Matrix::identity(4).as_ref()) - 1.0).abs() < 1e-12);
        assert_eq!(spectral_norm(Matrix::zeros(3, 2).as_ref()), 0.0);
        assert_eq!(spectral_norm(Matrix::zeros(0, 2).as_ref()), 0.0);
    }

    #[test]
    fn spectral_norm_never_exceeds_frobenius() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let s = spectral_norm(m.as_ref());
        assert!(s <= frobenius_norm(m.as_ref()) + 1e-12);
        assert!((s - svd_norm(&m)).abs() < 1e-8);
    }

    #[test]
    fn inverse_round_trip() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let prod = m.mul(&m.inverse().unwrap());
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((prod.get(r, c) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_inverse_is_an_error() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(m.inverse(), Err(LabError::Singular(_))));
    }
}
