//! Dense real matrix kernel.
//!
//! A small row-major matrix type and the handful of factorizations the rest
//! of the crate needs: LU solves, Cholesky, cyclic Jacobi for symmetric
//! spectra, Padé scaling-and-squaring for the matrix exponential, and a
//! Kronecker-form discrete Lyapunov solver. Everything is dense and
//! unblocked; the largest matrices in the pipeline are a few dozen rows.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Relative tolerance used for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative pivot threshold for LU solves.
pub const LU_PIVOT_TOL: f64 = 1e-14;
/// Relative pivot threshold for Cholesky.
pub const CHOLESKY_PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinAlgError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("data length {got} does not match {rows}x{cols}")]
    InvalidData { rows: usize, cols: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix too large for a dense Kronecker solve (n = {0})")]
    TooLarge(usize),
}

/// Dense matrix stored row-major: `data[i * cols + j]` holds `A[i, j]`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinAlgError> {
        if data.len() != rows * cols {
            return Err(LinAlgError::InvalidData {
                rows,
                cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinAlgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinAlgError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(LinAlgError::InvalidData {
                    rows: nrows,
                    cols: ncols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Nested row representation, used by the JSON file formats.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Self, LinAlgError> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Self, LinAlgError> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// `self += s * other`, shapes must agree.
    pub fn axpy(&mut self, s: f64, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<(), LinAlgError> {
        if self.shape() != other.shape() {
            return Err(LinAlgError::DimensionMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    /// Copy of the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut b = Self::zeros(rows, cols);
        for i in 0..rows {
            b.data[i * cols..(i + 1) * cols]
                .copy_from_slice(&self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + cols]);
        }
        b
    }

    /// Writes `src` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Matrix) {
        assert!(r0 + src.rows <= self.rows && c0 + src.cols <= self.cols);
        for i in 0..src.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + src.cols].copy_from_slice(src.row(i));
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᵏ` by repeated squaring; `k = 0` gives the identity.
    pub fn pow(&self, k: u32) -> Result<Self, LinAlgError> {
        require_square(self)?;
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = matmul(&result, &base)?;
            }
            k >>= 1;
            if k > 0 {
                base = matmul(&base, &base)?;
            }
        }
        Ok(result)
    }
}

fn require_square(a: &Matrix) -> Result<(), LinAlgError> {
    if !a.is_square() {
        return Err(LinAlgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    Ok(())
}

fn require_symmetric(a: &Matrix) -> Result<(), LinAlgError> {
    require_square(a)?;
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(LinAlgError::NotSymmetric);
    }
    Ok(())
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, LinAlgError> {
    if a.cols != b.rows {
        return Err(LinAlgError::DimensionMismatch {
            expected: (a.cols, b.cols),
            got: (b.rows, b.cols),
        });
    }
    let mut c = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let crow = &mut c.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += aik * bv;
            }
        }
    }
    Ok(c)
}

/// Lower-triangular `L` with `L·Lᵀ = a`.
///
/// Fails with `NotPositiveDefinite` when a pivot drops to
/// `1e-12·‖a‖_max` or below.
pub fn cholesky(a: &Matrix) -> Result<Matrix, LinAlgError> {
    require_symmetric(a)?;
    cholesky_unchecked(a).ok_or(LinAlgError::NotPositiveDefinite)
}

/// Cholesky without the symmetry check; reads the lower triangle only.
pub(crate) fn cholesky_unchecked(a: &Matrix) -> Option<Matrix> {
    let n = a.rows;
    let tol = CHOLESKY_PIVOT_TOL * a.max_abs();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol) || d <= 0.0 {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Ascending eigenvalues with orthonormal eigenvectors in the columns.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SymEigResult {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eig_sym(a: &Matrix) -> Result<SymEigResult, LinAlgError> {
    require_symmetric(a)?;
    let n = a.rows;
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);
    let target = 1e-12 * a.frobenius();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymEigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// A complex scalar; only used to report 2x2 spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0.0 {
            write!(f, "{:.4}", self.re)
        } else {
            let sign = if self.im < 0.0 { '-' } else { '+' };
            write!(f, "{:.4}{}{:.4}i", self.re, sign, self.im.abs())
        }
    }
}

/// Eigenvalues of a 2x2 matrix from its characteristic polynomial.
///
/// Real roots are ordered with the larger-magnitude root first; complex
/// roots come as `(re + i·im, re - i·im)` with `im > 0`.
pub fn eig_2x2(a: &Matrix) -> Result<(Complex, Complex), LinAlgError> {
    if a.shape() != (2, 2) {
        return Err(LinAlgError::DimensionMismatch {
            expected: (2, 2),
            got: a.shape(),
        });
    }
    let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let half_tr = 0.5 * (p + s);
    let det = p * s - q * r;
    // (tr/2)² - det rewritten to avoid cancellation when p ≈ s.
    let half_diff = 0.5 * (p - s);
    let disc = half_diff * half_diff + q * r;
    if disc >= 0.0 {
        let root = disc.sqrt();
        let big = if half_tr >= 0.0 {
            half_tr + root
        } else {
            half_tr - root
        };
        let small = if big != 0.0 { det / big } else { 0.0 };
        Ok((
            Complex { re: big, im: 0.0 },
            Complex { re: small, im: 0.0 },
        ))
    } else {
        let im = (-disc).sqrt();
        Ok((
            Complex { re: half_tr, im },
            Complex {
                re: half_tr,
                im: -im,
            },
        ))
    }
}

/// LU factorization with partial pivoting, packed in place.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

fn lu_factor(a: &Matrix) -> Result<Lu, LinAlgError> {
    require_square(a)?;
    let n = a.rows;
    let tol = LU_PIVOT_TOL * a.max_abs();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pval > tol) || pval == 0.0 {
            return Err(LinAlgError::Singular);
        }
        if piv != k {
            for j in 0..n {
                lu.data.swap(k * n + j, piv * n + j);
            }
            perm.swap(k, piv);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    lu.data[i * n + j] -= f * lu.data[k * n + j];
                }
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.lu.rows;
        let m = b.cols;
        let mut x = Matrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.data[i * m..(i + 1) * m].copy_from_slice(b.row(p));
        }
        for i in 0..n {
            for k in 0..i {
                let f = self.lu[(i, k)];
                if f != 0.0 {
                    for j in 0..m {
                        x.data[i * m + j] -= f * x.data[k * m + j];
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu[(i, k)];
                if f != 0.0 {
                    for j in 0..m {
                        x.data[i * m + j] -= f * x.data[k * m + j];
                    }
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..m {
                x.data[i * m + j] /= d;
            }
        }
        x
    }
}

/// Solves `a·X = b` by partial-pivot LU.
pub fn lin_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, LinAlgError> {
    require_square(a)?;
    if b.rows != a.rows {
        return Err(LinAlgError::DimensionMismatch {
            expected: (a.rows, b.cols),
            got: b.shape(),
        });
    }
    Ok(lu_factor(a)?.solve(b))
}

const PADE_ORDER: usize = 8;

/// Matrix exponential by scaling and squaring with a diagonal [8/8] Padé
/// approximant.
///
/// The input is scaled by `2^-s` until `‖A‖₁ ≤ 1/2`; at that norm the
/// [8/8] truncation bound is far below 1e-13 relative.
pub fn matexp(a: &Matrix) -> Result<Matrix, LinAlgError> {
    require_square(a)?;
    let n = a.rows;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = a.norm1();
    let s = if norm > 0.5 {
        ((norm / 0.5).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let scaled = a.scale(0.5f64.powi(s));

    // c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
    let q = PADE_ORDER;
    let mut coeffs = vec![1.0f64; q + 1];
    for k in 1..=q {
        coeffs[k] = coeffs[k - 1] * (q - k + 1) as f64 / (k as f64 * (2 * q - k + 1) as f64);
    }

    let mut num = Matrix::identity(n);
    let mut den = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for (k, &c) in coeffs.iter().enumerate().skip(1) {
        power = matmul(&power, &scaled)?;
        num.axpy(c, &power);
        den.axpy(if k % 2 == 0 { c } else { -c }, &power);
    }
    let mut result = lin_solve(&den, &num)?;
    for _ in 0..s {
        result = matmul(&result, &result)?;
    }
    Ok(result)
}

/// Largest order for the Kronecker system (`N² ≤ 400`).
pub const LYAPUNOV_MAX_ORDER: usize = 20;

/// Unique symmetric `P` with `ΦᵀPΦ − P = −I`.
///
/// Solved as the dense system `(I − Φᵀ⊗Φᵀ)·vec(P) = vec(I)`.
pub fn discrete_lyapunov(phi: &Matrix) -> Result<Matrix, LinAlgError> {
    require_square(phi)?;
    let n = phi.rows;
    if n > LYAPUNOV_MAX_ORDER {
        return Err(LinAlgError::TooLarge(n));
    }
    let nn = n * n;
    let mut sys = Matrix::identity(nn);
    // Row (i,j) of vec(ΦᵀPΦ) = Σ_{k,l} Φ[k,i] Φ[l,j] P[k,l].
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                let fki = phi[(k, i)];
                if fki == 0.0 {
                    continue;
                }
                for l in 0..n {
                    sys[(row, k * n + l)] -= fki * phi[(l, j)];
                }
            }
        }
    }
    let rhs = Matrix::column(Matrix::identity(n).as_slice());
    let sol = lin_solve(&sys, &rhs)?;
    let mut p = Matrix::new(n, n, sol.into_vec()).map_err(|_| LinAlgError::Singular)?;
    p.symmetrize();
    Ok(p)
}

/// Schur stability via the Lyapunov characterization: the solution of
/// `ΦᵀPΦ − P = −I` exists and is positive definite.
pub fn is_schur_stable(phi: &Matrix) -> bool {
    if !phi.is_square() {
        return false;
    }
    match discrete_lyapunov(phi) {
        Ok(p) => cholesky(&p).is_ok(),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn constructor_rejects_nan_and_bad_length() {
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(LinAlgError::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0]),
            Err(LinAlgError::InvalidData { .. })
        ));
    }

    #[test]
    fn matmul_identity_and_permutation() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 10.0]]);
        assert_eq!(matmul(&Matrix::identity(3), &a).unwrap(), a);
        let p = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let swap = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(matmul(&p, &swap).unwrap(), m(&[&[2.0, 1.0], &[4.0, 3.0]]));
        assert!(matches!(
            matmul(&p, &Matrix::zeros(3, 1)),
            Err(LinAlgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matmul_matches_dot_product_oracle() {
        let f1 = m(&[&[0.6703, -0.0018], &[0.0294, 0.5134]]);
        let got = matmul(&f1, &f1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut dot = 0.0;
                for k in 0..2 {
                    dot += f1[(i, k)] * f1[(k, j)];
                }
                assert_eq!(got[(i, j)], dot);
            }
        }
    }

    #[test]
    fn cholesky_cases() {
        assert_eq!(cholesky(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
        let l = cholesky(&m(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert_eq!(
            cholesky(&m(&[&[0.0, 1.0], &[1.0, 0.0]])),
            Err(LinAlgError::NotPositiveDefinite)
        );
        assert_eq!(
            cholesky(&m(&[&[1.0, 0.5], &[0.0, 1.0]])),
            Err(LinAlgError::NotSymmetric)
        );
    }

    #[test]
    fn eig_sym_cases() {
        let d = eig_sym(&Matrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 2.0, 3.0]);
        let e = eig_sym(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);
        let i6 = eig_sym(&Matrix::identity(6)).unwrap();
        assert!(i6.eigenvalues.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn eig_2x2_cases() {
        let (a, b) = eig_2x2(&m(&[&[0.0, 1.0], &[-1.0, 0.0]])).unwrap();
        assert_eq!((a.re, a.im), (0.0, 1.0));
        assert_eq!((b.re, b.im), (0.0, -1.0));
        let (a, b) = eig_2x2(&m(&[&[0.6703, -0.0018], &[0.0294, 0.5134]])).unwrap();
        assert!((a.re - 0.67).abs() < 5e-4 && a.im == 0.0);
        assert!((b.re - 0.5137).abs() < 5e-4 && b.im == 0.0);
        let (a, b) = eig_2x2(&m(&[&[0.6702, -0.0010], &[0.0502, 0.1353]])).unwrap();
        assert!((a.re - 0.6701).abs() < 5e-4);
        assert!((b.re - 0.1354).abs() < 5e-4);
        assert!(eig_2x2(&Matrix::identity(3)).is_err());
    }

    #[test]
    fn lin_solve_cases() {
        let b = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(lin_solve(&Matrix::identity(2), &b).unwrap(), b);
        let x = lin_solve(&Matrix::from_diag(&[2.0, 4.0]), &Matrix::column(&[2.0, 8.0])).unwrap();
        assert_eq!(x, Matrix::column(&[1.0, 2.0]));
        assert_eq!(
            lin_solve(&m(&[&[1.0, 2.0], &[2.0, 4.0]]), &Matrix::column(&[1.0, 1.0])),
            Err(LinAlgError::Singular)
        );
    }

    #[test]
    fn matexp_cases() {
        assert_eq!(matexp(&Matrix::zeros(3, 3)).unwrap(), Matrix::identity(3));
        let e = matexp(&Matrix::from_diag(&[-0.4, -0.6667])).unwrap();
        assert!((e[(0, 0)] - (-0.4f64).exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-0.6667f64).exp()).abs() < 1e-14);
        assert!((e[(0, 0)] - 0.6703).abs() < 1e-4);
        assert!((e[(1, 1)] - 0.5134).abs() < 1e-4);
        assert_eq!(e[(0, 1)], 0.0);
        // Nilpotent: exp([[0,1],[0,0]]) = [[1,1],[0,1]].
        let n = matexp(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert!((n[(0, 1)] - 1.0).abs() < 1e-15);
        assert!(matexp(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn matexp_reproduces_first_discrete_mode() {
        let a1 = m(&[&[-4.0, -0.03], &[0.5, -6.667]]).scale(0.1);
        let f1 = matexp(&a1).unwrap();
        let expected = m(&[&[0.6703, -0.0018], &[0.0294, 0.5134]]);
        assert!(f1.sub(&expected).unwrap().max_abs() < 5e-5, "{f1:?}");
    }

    #[test]
    fn discrete_lyapunov_cases() {
        let p = discrete_lyapunov(&m(&[&[0.5]])).unwrap();
        assert!((p[(0, 0)] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(discrete_lyapunov(&Matrix::zeros(3, 3)).unwrap(), Matrix::identity(3));
        assert_eq!(
            discrete_lyapunov(&Matrix::identity(2)),
            Err(LinAlgError::Singular)
        );
        assert!(matches!(
            discrete_lyapunov(&Matrix::identity(21)),
            Err(LinAlgError::TooLarge(21))
        ));
    }

    #[test]
    fn schur_stability_cases() {
        assert!(is_schur_stable(&m(&[&[0.6703, -0.0018], &[0.0294, 0.5134]])));
        assert!(!is_schur_stable(&Matrix::identity(2)));
        assert!(is_schur_stable(&Matrix::identity(6).scale(0.5)));
        assert!(!is_schur_stable(&m(&[&[2.0]])));
        assert!(!is_schur_stable(&Matrix::zeros(2, 3)));
    }

    #[test]
    fn pow_and_blocks() {
        let a = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(a.pow(0).unwrap(), Matrix::identity(2));
        assert_eq!(a.pow(5).unwrap(), m(&[&[1.0, 5.0], &[0.0, 1.0]]));
        let mut big = Matrix::zeros(4, 4);
        big.set_block(2, 1, &a);
        assert_eq!(big.block(2, 1, 2, 2), a);
        assert_eq!(big[(2, 2)], 1.0);
    }
}
