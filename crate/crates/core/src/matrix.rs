//! Dense row-major f64 matrices and the power-iteration spectral norm.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::RngStream;

/// Shape or content problem while building a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixError(pub &'static str);

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "matrix error: {}", self.0)
    }
}

impl core::error::Error for MatrixError {}

/// Dense matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError("dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(MatrixError("entry count must equal rows * cols"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(MatrixError("entries must be finite"));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError("dimensions must be positive"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MatrixError("ragged rows"));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, entries)
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in diag.iter().enumerate() {
            m.entries[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// y = M x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (r, slot) in y.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *slot = acc;
        }
        y
    }

    /// y = M^T x.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (r, xi) in x.iter().enumerate() {
            let row = self.row(r);
            for (slot, w) in y.iter_mut().zip(row) {
                *slot += w * xi;
            }
        }
        y
    }

    /// l2 norm of each row.
    pub fn row_l2_norms(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| libm::sqrt(self.row(r).iter().map(|v| v * v).sum::<f64>()))
            .collect()
    }

    /// Copy with row i zeroed wherever `row_mask[i]` is false and column j
    /// zeroed wherever `col_mask[j]` is false. `None` leaves that side
    /// untouched. The spectral norm of the result equals the norm of the
    /// physically extracted submatrix.
    pub fn masked(&self, row_mask: Option<&[bool]>, col_mask: Option<&[bool]>) -> Matrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            let keep_row = row_mask.map_or(true, |m| m[r]);
            for c in 0..self.cols {
                let keep = keep_row && col_mask.map_or(true, |m| m[c]);
                if !keep {
                    out.entries[r * self.cols + c] = 0.0;
                }
            }
        }
        out
    }

    /// self += scale * other, entrywise.
    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += scale * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }
}

fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Largest singular value with the corresponding singular vectors, by power
/// iteration on M^T M.
///
/// The start vector is the normalized all-ones vector perturbed by seeded
/// noise, which cannot be exactly orthogonal to the top singular space.
/// Iteration stops when successive estimates agree to `tol` (relative) or
/// after `max_iters` rounds. Returns (sigma, u, v) with u = M v / sigma.
pub fn spectral_norm_vectors(
    m: &Matrix,
    max_iters: usize,
    tol: f64,
    rng: &mut RngStream,
) -> (f64, Vec<f64>, Vec<f64>) {
    let zero_u = vec![0.0; m.rows()];
    if m.max_abs() == 0.0 {
        return (0.0, zero_u, vec![0.0; m.cols()]);
    }
    let mut v: Vec<f64> = (0..m.cols())
        .map(|_| 1.0 + 1e-3 * (rng.next_f64() - 0.5))
        .collect();
    normalize(&mut v);

    let mut sigma = 0.0;
    for _ in 0..max_iters.max(1) {
        let u = m.matvec(&v);
        let new_sigma = norm2(&u);
        if new_sigma == 0.0 {
            // v landed in the null space; re-seed and keep going.
            for x in v.iter_mut() {
                *x = rng.next_f64() - 0.5;
            }
            normalize(&mut v);
            sigma = 0.0;
            continue;
        }
        let mut next = m.matvec_transpose(&u);
        normalize(&mut next);
        v = next;
        let done = libm::fabs(new_sigma - sigma) <= tol * new_sigma.max(1e-300);
        sigma = new_sigma;
        if done {
            break;
        }
    }
    let mut u = m.matvec(&v);
    let s = normalize(&mut u);
    (s, u, v)
}

/// Largest singular value estimate; see `spectral_norm_vectors`.
pub fn spectral_norm(m: &Matrix, max_iters: usize, tol: f64, rng: &mut RngStream) -> f64 {
    spectral_norm_vectors(m, max_iters, tol, rng).0
}

/// Iteration budget used when certifying (tight tolerance).
pub const CERTIFY_POWER_ITERS: usize = 100;
/// Convergence tolerance used when certifying.
pub const CERTIFY_POWER_TOL: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rng() -> RngStream {
        RngStream::new(0xBEEF, 0)
    }

    #[test]
    fn diagonal_norm_is_max_entry() {
        let m = Matrix::diagonal(&[2.0, 2.0, 1.0]);
        let s = spectral_norm(&m, 100, 1e-12, &mut rng());
        assert!((s - 2.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn identity_norm_is_one() {
        let m = Matrix::identity(5);
        let s = spectral_norm(&m, 100, 1e-9, &mut rng());
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn zero_matrix_norm_is_zero() {
        let m = Matrix::zeros(4, 3);
        assert_eq!(spectral_norm(&m, 100, 1e-9, &mut rng()), 0.0);
    }

    #[test]
    fn dominates_random_probe_ratios() {
        let mut gen = RngStream::new(99, 1);
        let entries: Vec<f64> = (0..64).map(|_| gen.next_f64() * 2.0 - 1.0).collect();
        let m = Matrix::new(8, 8, entries).unwrap();
        let s = spectral_norm(&m, 200, 1e-12, &mut rng());
        let mut best = 0.0_f64;
        for _ in 0..100_000 {
            let mut v: Vec<f64> = (0..8).map(|_| gen.next_standard_normal()).collect();
            let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
            for x in v.iter_mut() {
                *x /= n;
            }
            let ratio = libm::sqrt(m.matvec(&v).iter().map(|x| x * x).sum::<f64>());
            best = best.max(ratio);
        }
        assert!(s >= best - 1e-6, "power {s} vs sampled {best}");
    }

    #[test]
    fn appending_a_row_never_shrinks_the_norm() {
        let mut gen = RngStream::new(7, 7);
        for _ in 0..20 {
            let entries: Vec<f64> = (0..12).map(|_| gen.next_f64() * 4.0 - 2.0).collect();
            let m = Matrix::new(3, 4, entries.clone()).unwrap();
            let extra: Vec<f64> = (0..4).map(|_| gen.next_f64() * 4.0 - 2.0).collect();
            let mut bigger = entries;
            bigger.extend_from_slice(&extra);
            let m2 = Matrix::new(4, 4, bigger).unwrap();
            let s1 = spectral_norm(&m, 300, 1e-12, &mut rng());
            let s2 = spectral_norm(&m2, 300, 1e-12, &mut rng());
            assert!(s2 >= s1 - 1e-9, "{s2} < {s1}");
        }
    }

    #[test]
    fn masking_never_grows_the_norm() {
        let mut gen = RngStream::new(21, 3);
        for _ in 0..20 {
            let entries: Vec<f64> = (0..20).map(|_| gen.next_f64() * 2.0 - 1.0).collect();
            let m = Matrix::new(4, 5, entries).unwrap();
            let row_mask: Vec<bool> = (0..4).map(|_| gen.next_u64() % 2 == 0).collect();
            let col_mask: Vec<bool> = (0..5).map(|_| gen.next_u64() % 2 == 0).collect();
            let reduced = m.masked(Some(&row_mask), Some(&col_mask));
            let s_full = spectral_norm(&m, 300, 1e-12, &mut rng());
            let s_red = spectral_norm(&reduced, 300, 1e-12, &mut rng());
            assert!(s_red <= s_full + 1e-9);
        }
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(0, 2, vec![]).is_err());
        assert!(Matrix::new(1, 2, vec![f64::NAN, 0.0]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
