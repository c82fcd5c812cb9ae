//! Dense complex linear algebra.
//!
//! Everything in the crate is built on [`ComplexMatrix`], a row-major dense
//! matrix of `Complex64`. The eigensolver is a cyclic Jacobi method for
//! complex Hermitian matrices; it is accurate to round-off and plenty fast
//! for the matrix sides that appear here (a few dozen at most).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance on `max |H - H†|` accepted by the Hermitian routines.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues down to `-PSD_CLAMP` are treated as round-off and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

const JACOBI_REL_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |H - H^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::EntryCount {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| ZERO)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Column vector from entries.
    pub fn column(entries: &[C64]) -> Self {
        Self::from_fn(entries.len(), 1, |i, _| entries[i])
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

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[C64]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: C64, other: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// `(M - M†) / (2i)`
    pub fn skew_hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let half_over_i = C64::new(0.0, -0.5);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] - self[(j, i)].conj()) * half_over_i
        })
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = vec![ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Self {
            rows: self.rows,
            cols: other.cols,
            data: out,
        }
    }

    /// `self† * other` without forming the adjoint.
    pub fn adjoint_mul(&self, other: &ComplexMatrix) -> Self {
        assert_eq!(self.rows, other.rows, "adjoint_mul shape mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(k, i)].conj();
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x† M x`
    pub fn quadratic_form(&self, x: &[C64]) -> C64 {
        let mx = self.matvec(x);
        x.iter().zip(&mx).map(|(a, b)| a.conj() * b).sum()
    }

    /// Copies the `rows x cols` block with top-left corner `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        assert!(
            r0 + block.rows <= self.rows && c0 + block.cols <= self.cols,
            "block out of range"
        );
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Block-diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &ComplexMatrix) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, self.cols, other);
        out
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[ComplexMatrix]) -> Self {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        assert!(blocks.iter().all(|b| b.cols == cols), "vstack column mismatch");
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Self { rows, cols, data }
    }

    /// Lower Cholesky factor of a Hermitian positive definite matrix, or
    /// `None` when a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<ComplexMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l[(j, j)] = C64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(l)
    }

    /// Inverse of a Hermitian positive definite matrix via Cholesky.
    pub fn inverse_hpd(&self) -> Option<ComplexMatrix> {
        let l = self.cholesky()?;
        let n = self.rows;
        // inverse of lower-triangular L by forward substitution
        let mut linv = Self::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { ONE } else { ZERO };
                for k in c..i {
                    s -= l[(i, k)] * linv[(k, c)];
                }
                linv[(i, c)] = s / l[(i, i)];
            }
        }
        let inv = linv.adjoint_mul(&linv);
        Some(inv.hermitian_part())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.col(k)
    }

    /// `V diag(f(λ)) V†`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix by cyclic
/// Jacobi rotations.
///
/// Each eigenvector's first component above `1e-10` in modulus is made real
/// and nonnegative so the output is reproducible.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare {
            rows: h.rows,
            cols: h.cols,
        });
    }
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian { deviation });
    }
    Ok(jacobi(h.hermitian_part()))
}

fn off_diagonal_sq(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

fn jacobi(mut a: ComplexMatrix) -> HermitianEig {
    let n = a.rows;
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = (JACOBI_REL_TOL * scale).powi(2);

    if scale > 0.0 {
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            if off_diagonal_sq(&a) <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag == 0.0 {
                        continue;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let phase = apq / mag;
                    let theta = (aqq - app) / (2.0 * mag);
                    let t = if theta.is_infinite() {
                        0.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // J = diag(1, conj(phase)) * [[c, s], [-s, c]]
                    let jpp = C64::new(c, 0.0);
                    let jpq = C64::new(s, 0.0);
                    let jqp = phase.conj() * (-s);
                    let jqq = phase.conj() * c;
                    rotate(&mut a, &mut v, p, q, [jpp, jpq, jqp, jqq]);
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = v.col(src);
        if let Some(first) = col.iter().find(|z| z.norm() > 1e-10) {
            let ph = first.conj() / first.norm();
            for z in col.iter_mut() {
                *z *= ph;
            }
        }
        vectors.set_col(k, &col);
    }
    HermitianEig { values, vectors }
}

// A <- J† A J, V <- V J for the 2x2 rotation J acting on indices p, q.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, j: [C64; 4]) {
    let [jpp, jpq, jqp, jqq] = j;
    let n = a.rows;
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * jpp + aiq * jqp;
        a[(i, q)] = aip * jpq + aiq * jqq;
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * jpp + viq * jqp;
        v[(i, q)] = vip * jpq + viq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn lambda_min(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(hermitian_eig(h)?.min())
}

/// Hermitian PSD square root.
pub fn psd_sqrt(p: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig(p)?;
    let min = eig.min();
    if min < -PSD_CLAMP {
        return Err(LinalgError::NotPsd { min_eigenvalue: min });
    }
    Ok(eig.map_spectrum(|l| l.max(0.0).sqrt()).hermitian_part())
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    let gram = m.adjoint_mul(m);
    jacobi(gram.hermitian_part()).max().max(0.0).sqrt()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |i, j| {
        a[(i / b.rows, j / b.cols)] * b[(i % b.rows, j % b.cols)]
    })
}

/// Traces out the first tensor factor (side `db`) of a `(db*da) x (db*da)` matrix.
pub fn partial_trace_first(
    m: &ComplexMatrix,
    db: usize,
    da: usize,
) -> Result<ComplexMatrix, LinalgError> {
    if !m.is_square() || m.rows != db * da || db == 0 || da == 0 {
        return Err(LinalgError::DimensionMismatch(format!(
            "partial trace of {}x{} over factors {db} x {da}",
            m.rows, m.cols
        )));
    }
    Ok(ComplexMatrix::from_fn(da, da, |i, j| {
        (0..db).map(|b| m[(b * da + i, b * da + j)]).sum()
    }))
}

/// Traces out the second tensor factor (side `db`) of a `(da*db) x (da*db)` matrix.
pub fn partial_trace_second(
    m: &ComplexMatrix,
    da: usize,
    db: usize,
) -> Result<ComplexMatrix, LinalgError> {
    if !m.is_square() || m.rows != db * da || db == 0 || da == 0 {
        return Err(LinalgError::DimensionMismatch(format!(
            "partial trace of {}x{} over factors {da} x {db}",
            m.rows, m.cols
        )));
    }
    Ok(ComplexMatrix::from_fn(da, da, |i, j| {
        (0..db).map(|b| m[(i * db + b, j * db + b)]).sum()
    }))
}

/// True iff `max |U†U - I| <= tol`.
pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    if !u.is_square() {
        return false;
    }
    u.adjoint_mul(u).max_abs_diff(&ComplexMatrix::identity(u.rows)) <= tol
}

pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Extends the orthonormal columns of `q` (an `n x k` isometry) to an
/// `n x n` unitary. Candidate directions are the standard basis vectors in
/// order, so the completion is deterministic.
pub fn complete_isometry(q: &ComplexMatrix) -> ComplexMatrix {
    let n = q.rows;
    let mut cols: Vec<Vec<C64>> = (0..q.cols).map(|j| q.col(j)).collect();
    let mut e = 0;
    while cols.len() < n {
        assert!(e < n, "orthonormal completion failed");
        let mut cand = vec![ZERO; n];
        cand[e] = ONE;
        e += 1;
        // two passes of Gram-Schmidt for stability
        for _ in 0..2 {
            for c in &cols {
                let ov = inner(c, &cand);
                for (x, y) in cand.iter_mut().zip(c) {
                    *x -= ov * y;
                }
            }
        }
        let nrm = vec_norm(&cand);
        if nrm > 1e-6 {
            cols.push(cand.into_iter().map(|z| z / nrm).collect());
        }
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        out.set_col(j, c);
    }
    out
}

/// A unitary whose first row is the unit vector `row` (Householder
/// reflection, with the phase fixed so that the first row matches exactly).
pub fn unitary_with_first_row(row: &[C64]) -> ComplexMatrix {
    let d = row.len();
    assert!(d >= 1);
    // column vector x = conj(row); we need U with U e_1-row = row, i.e. U† e_1 = x
    let x: Vec<C64> = row.iter().map(|z| z.conj()).collect();
    let nrm = vec_norm(&x);
    assert!((nrm - 1.0).abs() < 1e-9, "first row must be a unit vector");
    // Householder H with H e_1 = x (H Hermitian unitary up to a phase on e_1)
    let x0 = x[0];
    let phase = if x0.norm() > 1e-300 { x0 / x0.norm() } else { ONE };
    // w = x - phase * e_1; H = phase-adjusted reflection mapping e_1 -> x
    let mut w = x.clone();
    w[0] -= phase;
    let wn2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut h = ComplexMatrix::identity(d);
    if wn2 > 1e-30 {
        // R = I - 2 w w† / (w† w) maps phase*e_1 to x (since |x| = |phase e_1|
        // and <x, phase e_1> is real)
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] -= w[i] * w[j].conj() * (2.0 / wn2);
            }
        }
    }
    // columns: R (phase e_1) = x  =>  (R diag(phase,1,..)) e_1 = x
    for i in 0..d {
        h[(i, 0)] *= phase;
    }
    // h e_1 = x and h unitary; the wanted matrix is h†, whose first row is x† = row
    h.adjoint()
}

/// Matrix with independent standard complex Gaussian entries
/// (real and imaginary parts each N(0, 1/2)).
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-random unitary (QR of a Gaussian matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    orthonormalize_columns(&gaussian_matrix(n, n, rng))
}

/// Modified Gram-Schmidt on the columns; each column's phase follows the
/// QR convention (positive real R diagonal).
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(m.cols);
    for j in 0..m.cols {
        let mut c = m.col(j);
        for _ in 0..2 {
            for q in &cols {
                let ov = inner(q, &c);
                for (x, y) in c.iter_mut().zip(q) {
                    *x -= ov * y;
                }
            }
        }
        let nrm = vec_norm(&c);
        assert!(nrm > 1e-12, "columns are linearly dependent");
        cols.push(c.into_iter().map(|z| z / nrm).collect());
    }
    let mut out = ComplexMatrix::zeros(m.rows, m.cols);
    for (j, c) in cols.iter().enumerate() {
        out.set_col(j, c);
    }
    out
}

/// Random Hermitian matrix `(G + G†)/2` with Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    gaussian_matrix(n, n, rng).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(ComplexMatrix::new(0, 1, vec![]), Err(LinalgError::Empty));
        assert!(matches!(
            ComplexMatrix::new(2, 2, vec![ONE; 3]),
            Err(LinalgError::EntryCount { .. })
        ));
        assert_eq!(
            ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(LinalgError::NonFinite)
        );
    }

    #[test]
    fn eig_diagonal_and_pauli() {
        let e = hermitian_eig(&ComplexMatrix::from_real_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        let e = hermitian_eig(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_bad_input() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&rect), Err(LinalgError::NotSquare { .. })));
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 9] {
            let h = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&h).unwrap();
            let rebuilt = e.map_spectrum(|l| l);
            assert!(rebuilt.max_abs_diff(&h) <= 1e-10 * h.max_abs().max(1.0));
            assert!(is_unitary(&e.vectors, 1e-10));
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_phase_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = hermitian_eig(&random_hermitian(4, &mut rng)).unwrap();
        for k in 0..4 {
            let v = e.vector(k);
            let first = v.iter().find(|z| z.norm() > 1e-10).unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
    }

    #[test]
    fn eig_zero_and_degenerate() {
        let e = hermitian_eig(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        let e = hermitian_eig(&ComplexMatrix::identity(4).scale_real(2.5)).unwrap();
        assert!(e.values.iter().all(|&l| (l - 2.5).abs() < 1e-15));
    }

    #[test]
    fn psd_sqrt_examples() {
        let i3 = ComplexMatrix::identity(3);
        assert!(psd_sqrt(&i3).unwrap().max_abs_diff(&i3) < 1e-15);
        let s = psd_sqrt(&ComplexMatrix::from_real_diag(&[4.0, 9.0])).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::from_real_diag(&[2.0, 3.0])) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = gaussian_matrix(3, 3, &mut rng);
        let p = m.adjoint_mul(&m);
        let s = psd_sqrt(&p).unwrap();
        assert!((&s * &s).max_abs_diff(&p) <= 1e-9);
        assert!(s.is_hermitian(1e-14));
    }

    #[test]
    fn psd_sqrt_clamps_and_rejects() {
        let tiny = ComplexMatrix::from_real_diag(&[1.0, -5e-11]);
        let s = psd_sqrt(&tiny).unwrap();
        assert_eq!(s[(1, 1)], ZERO);
        let neg = ComplexMatrix::from_real_diag(&[1.0, -1e-6]);
        assert!(matches!(psd_sqrt(&neg), Err(LinalgError::NotPsd { .. })));
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let k = kron(&pauli_x(), &i2);
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected.set_block(0, 2, &i2);
        expected.set_block(2, 0, &i2);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let [a, b, cm, d] = [0; 4].map(|_| gaussian_matrix(2, 2, &mut rng));
        let lhs = &kron(&a, &b) * &kron(&cm, &d);
        let rhs = kron(&(&a * &cm), &(&b * &d));
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sigma = gaussian_matrix(2, 2, &mut rng);
        let rho = gaussian_matrix(2, 2, &mut rng);
        let pt = partial_trace_first(&kron(&sigma, &rho), 2, 2).unwrap();
        assert!(pt.max_abs_diff(&rho.scale(sigma.trace())) <= 1e-12);

        let pt = partial_trace_first(&ComplexMatrix::identity(4), 2, 2).unwrap();
        assert_eq!(pt, ComplexMatrix::identity(2).scale_real(2.0));

        let ket0 = ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0]);
        let pt = partial_trace_first(&kron(&ket0, &rho), 3, 2).unwrap();
        assert!(pt.max_abs_diff(&rho) < 1e-15);

        assert!(partial_trace_first(&ComplexMatrix::identity(5), 2, 2).is_err());

        let pt2 = partial_trace_second(&kron(&rho, &sigma), 2, 2).unwrap();
        assert!(pt2.max_abs_diff(&rho.scale(sigma.trace())) <= 1e-12);
    }

    #[test]
    fn unitary_checks() {
        assert!(is_unitary(&ComplexMatrix::identity(3), 1e-10));
        assert!(!is_unitary(&ComplexMatrix::from_real_diag(&[1.0, 0.999]), 1e-10));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rot = ComplexMatrix::from_real_rows(&[&[h, -h], &[h, h]]).unwrap();
        assert!(is_unitary(&rot, 1e-12));
        assert!(!is_unitary(&ComplexMatrix::zeros(2, 3), 1.0));
    }

    #[test]
    fn cholesky_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = gaussian_matrix(4, 4, &mut rng);
        let p = &m.adjoint_mul(&m) + &ComplexMatrix::identity(4);
        let l = p.cholesky().unwrap();
        assert!((&l * &l.adjoint()).max_abs_diff(&p) < 1e-12);
        let inv = p.inverse_hpd().unwrap();
        assert!((&inv * &p).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        assert!(ComplexMatrix::from_real_diag(&[1.0, 0.0]).cholesky().is_none());
    }

    #[test]
    fn first_row_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 1..6 {
            let g = gaussian_matrix(1, d, &mut rng);
            let nrm = g.frobenius_norm();
            let row: Vec<C64> = g.as_slice().iter().map(|z| z / nrm).collect();
            let u = unitary_with_first_row(&row);
            assert!(is_unitary(&u, 1e-12));
            for j in 0..d {
                assert!((u[(0, j)] - row[j]).norm() < 1e-12);
            }
        }
        let u = unitary_with_first_row(&[ZERO, ONE]);
        assert!(is_unitary(&u, 1e-14));
        assert!((u[(0, 1)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn isometry_completion() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = orthonormalize_columns(&gaussian_matrix(5, 2, &mut rng));
        let u = complete_isometry(&q);
        assert!(is_unitary(&u, 1e-12));
        assert!(u.submatrix(0, 0, 5, 2).max_abs_diff(&q) < 1e-15);
    }

    fn hermitian_strategy(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec(-2.0f64..2.0, 2 * n * n).prop_map(move |xs| {
            ComplexMatrix::from_fn(n, n, |i, j| c(xs[2 * (i * n + j)], xs[2 * (i * n + j) + 1]))
                .hermitian_part()
        })
    }

    proptest! {
        #[test]
        fn spectrum_brackets_mean(h in hermitian_strategy(4)) {
            let e = hermitian_eig(&h).unwrap();
            let mean = h.trace().re / 4.0;
            prop_assert!(e.min() <= mean + 1e-12 && mean <= e.max() + 1e-12);
        }

        #[test]
        fn spectrum_is_conjugation_invariant(h in hermitian_strategy(3), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(3, &mut rng);
            let conj = (&(&u * &h) * &u.adjoint()).hermitian_part();
            let a = hermitian_eig(&h).unwrap().values;
            let b = hermitian_eig(&conj).unwrap().values;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }

        #[test]
        fn sqrt_of_square(h in hermitian_strategy(3)) {
            let s = psd_sqrt(&h.adjoint_mul(&h)).unwrap();
            let s = psd_sqrt(&(&s * &s)).unwrap();
            prop_assert!((&s * &s).max_abs_diff(&h.adjoint_mul(&h)) <= 1e-8);
            let s2 = psd_sqrt(&(&s * &s)).unwrap();
            prop_assert!(s2.max_abs_diff(&s) <= 1e-8);
        }

        #[test]
        fn partial_trace_is_linear(
            m in hermitian_strategy(4),
            n in hermitian_strategy(4),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let combo = &m.scale_real(alpha) + &n.scale_real(beta);
            let lhs = partial_trace_first(&combo, 2, 2).unwrap();
            let rhs = &partial_trace_first(&m, 2, 2).unwrap().scale_real(alpha)
                + &partial_trace_first(&n, 2, 2).unwrap().scale_real(beta);
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
            prop_assert!((lhs.trace() - combo.trace()).norm() <= 1e-12);
        }
    }
}
