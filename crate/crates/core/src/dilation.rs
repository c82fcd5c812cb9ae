//! Unitary dilations and minimal-cost channel extensions.
//!
//! The max-norm of a unitary is its largest eigenphase magnitude, with phases
//! taken in `(-pi, pi]`. For a contraction `K`, every unitary with top-left
//! block `K` has max-norm at least `arccos lambda_min(Re K)` by interlacing.
//! [`choi_dilation`] builds a `2n x 2n` unitary that attains this bound.
//!
//! For normal `K` the rotation block `[[K, -sqrt(I - KK^dagger)],
//! [sqrt(I - K^dagger K), K^dagger]]` attains it: its Hermitian part is
//! `Re K (+) Re K`. For non-normal `K` that block can overshoot, so a
//! different construction is used:
//!
//! * Let `x` be the lowest eigenvector of `Re K`, with eigenvalue `c = cos phi`.
//!   Any optimal dilation whose lower-left block is `D = sqrt(I - K^dagger K)`
//!   has eigenvectors `(x, 0) +/- (Sx, -iDx)/sin phi`, with eigenvalues
//!   `e^{+/- i phi}`. Here `S = Im K`.
//! * Compress what remains of `K` onto the complement of `x` and rescale it.
//!   The result is again a contraction with `Re >= c`.
//! * Dilate that smaller contraction recursively and assemble the pieces.
//!
//! A final change of ancilla basis makes the lower-left block exactly `D`.

use thiserror::Error;

use crate::channel::{ChannelError, KrausChannel};
use crate::cost::{CoefficientVector, CostError, CostResult};
use crate::matops::{
    complete_isometry, hermitian_eig, inner, operator_norm, orthonormalize_columns,
    unitary_with_first_row, vec_norm, ComplexMatrix, LinalgError, C64, ONE, ZERO,
};

/// Accepted unitarity deviation on inputs.
pub const UNITARY_TOL: f64 = 1e-8;
/// Slack on `|K| <= 1` before a block is rejected.
pub const CONTRACTION_TOL: f64 = 1e-9;
/// Gram matrices of matched column stacks may differ by this much.
pub const GRAM_TOL: f64 = 1e-7;
/// Singular values below this are treated as zero when matching isometries.
const PINV_CUTOFF: f64 = 1e-10;
/// Normality test for choosing the rotation block.
const NORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DilationError {
    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("block is not a contraction (operator norm {norm})")]
    NotContraction { norm: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("column stacks have different Gram matrices (max deviation {deviation:e})")]
    GramMismatch { deviation: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationResult {
    pub u: ComplexMatrix,
    /// `(ancilla dimension, system dimension)`.
    pub block_dims: (usize, usize),
    pub maxnorm: f64,
    /// Coefficients whose combination sits in the top-left block.
    pub realized_v: CoefficientVector,
}

fn unitary_deviation(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    u.adjoint_mul(u).max_abs_diff(&ComplexMatrix::identity(u.rows()))
}

/// Largest `|theta|` over the eigenvalues `e^{i theta}` of a unitary.
///
/// For a unitary, `Re U` has eigenvalues `cos theta_j` and `Im U` acts as
/// `sin theta_j` on the same eigenvectors, so the extreme phase is
/// `atan2(|Im U x|, lambda_min(Re U))` at the lowest eigenvector `x` of `Re U`.
/// The `atan2` form keeps full accuracy near 0 and returns `pi` for `-1`.
pub fn unitary_max_norm(u: &ComplexMatrix) -> Result<f64, DilationError> {
    let deviation = unitary_deviation(u);
    if !(deviation <= UNITARY_TOL) {
        return Err(DilationError::NotUnitary { deviation });
    }
    Ok(max_norm_unchecked(u))
}

fn max_norm_unchecked(u: &ComplexMatrix) -> f64 {
    let eig = hermitian_eig(&u.hermitian_part()).expect("Hermitian part");
    let x = eig.vector(0);
    let s = vec_norm(&u.skew_hermitian_part().matvec(&x));
    s.atan2(eig.min())
}

/// Eigenvalues of `I - a^dagger a` below this are round-off. Dropping them
/// costs at most the floor in unitarity; keeping them costs its square root.
const DEFECT_FLOOR: f64 = 1e-13;

/// `sqrt(I - A^dagger A)` with round-off eigenvalues zeroed.
fn defect(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.cols();
    let g = &ComplexMatrix::identity(n) - &a.adjoint_mul(a);
    hermitian_eig(&g.hermitian_part())
        .expect("Hermitian")
        .map_spectrum(|l| if l > DEFECT_FLOOR { l.sqrt() } else { 0.0 })
        .hermitian_part()
}

fn is_normal(k: &ComplexMatrix) -> bool {
    let kk = k.matmul(&k.adjoint());
    let kk2 = k.adjoint_mul(k);
    kk.max_abs_diff(&kk2) <= NORMAL_TOL
}

/// `[[K, -sqrt(I - KK^dagger)], [sqrt(I - K^dagger K), K^dagger]]`.
pub fn rotation_dilation(k: &ComplexMatrix) -> ComplexMatrix {
    let n = k.rows();
    let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
    u.set_block(0, 0, k);
    u.set_block(0, n, &defect(&k.adjoint()).scale_real(-1.0));
    u.set_block(n, 0, &defect(k));
    u.set_block(n, n, &k.adjoint());
    u
}

fn outer(x: &[C64], y: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(x.len(), y.len(), |i, j| x[i] * y[j].conj())
}

/// A `2n x 2n` unitary with top-left block `a` and all eigenphases within
/// `[-phi, phi]`, `cos phi = lambda_min(Re a)`.
fn arc_dilation(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let eig = hermitian_eig(&a.hermitian_part()).expect("Hermitian part");
    let c = eig.min().clamp(-1.0, 1.0);
    let s = (1.0 - c * c).max(0.0).sqrt();
    if s < 1e-12 {
        // c = 1 forces a = I; c = -1 allows every phase
        return if c > 0.0 {
            ComplexMatrix::identity(2 * n)
        } else {
            let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
            u.set_block(0, 0, a);
            u.set_block(0, n, &defect(&a.adjoint()));
            u.set_block(n, 0, &defect(a));
            u.set_block(n, n, &a.adjoint().scale_real(-1.0));
            u
        };
    }
    let x = eig.vector(0);
    let sx = a.skew_hermitian_part().matvec(&x);
    let dx = defect(a).matvec(&x);
    let mut e1 = x.clone();
    e1.extend(std::iter::repeat_n(ZERO, n));
    let e2: Vec<C64> = sx
        .iter()
        .map(|z| z / s)
        .chain(dx.iter().map(|z| z * C64::new(0.0, -1.0 / s)))
        .collect();
    let z = C64::new(c, s);

    // eigenpairs pinned by the bound
    let mut parts: Vec<(Vec<C64>, C64)> = Vec::with_capacity(2);
    for (sign, lam) in [(1.0, z), (-1.0, z.conj())] {
        let f: Vec<C64> = e1.iter().zip(&e2).map(|(p, q)| p + q * sign).collect();
        let nf = vec_norm(&f);
        if nf > 1e-9 {
            parts.push((f.into_iter().map(|w| w / nf).collect(), lam));
        }
    }
    let p = parts.len();
    let mut fixed = ComplexMatrix::zeros(2 * n, p);
    for (j, (f, _)) in parts.iter().enumerate() {
        fixed.set_col(j, f);
    }
    let basis = complete_isometry(&fixed);
    let m = 2 * n - p;

    let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
    let mut rest = a.clone();
    for (f, lam) in &parts {
        u.add_scaled(*lam, &outer(f, f));
        rest.add_scaled(-*lam, &outer(&f[..n], &f[..n]));
    }
    if m == 0 {
        return u;
    }
    let q = basis.submatrix(0, p, 2 * n, m);

    // what is left of `a` is Y U' Y^dagger with Y the top rows of `q`
    let y = q.submatrix(0, 0, n, m);
    let xi = hermitian_eig(&y.matmul(&y.adjoint()).hermitian_part()).expect("Gram");
    let kept: Vec<usize> = (0..n).filter(|&i| xi.values[i] > 1e-9).collect();
    let k = kept.len();
    let mut inner = ComplexMatrix::identity(m).scale(z);
    let mut frame = ComplexMatrix::identity(m);
    if k > 0 {
        let mut ek = ComplexMatrix::zeros(n, k);
        for (col, &i) in kept.iter().enumerate() {
            ek.set_col(col, &xi.vector(i));
        }
        let inv_sqrt: Vec<f64> = kept.iter().map(|&i| xi.values[i].sqrt().recip()).collect();
        let scale = ComplexMatrix::from_real_diag(&inv_sqrt);
        let zmat = orthonormalize_columns(&y.adjoint().matmul(&ek).matmul(&scale));
        let a2 = scale.matmul(&ek.adjoint_mul(&rest).matmul(&ek)).matmul(&scale);
        inner.set_block(0, 0, &arc_dilation(&a2));
        frame = complete_isometry(&zmat);
    }
    let up = frame.matmul(&inner).matmul(&frame.adjoint());
    &u + &q.matmul(&up).matmul(&q.adjoint())
}

/// Unitary `W` with `W m1 = m2` for column stacks of equal Gram matrix.
///
/// Both stacks factor as `M_i = Z_i G` with `G = sqrt(M^dagger M)` and `Z_i`
/// isometric on the range of `G` (singular values below `1e-10` dropped);
/// `W = Z_2 Z_1^dagger` on that range, extended by orthonormal completions.
pub fn match_isometry(
    m1: &ComplexMatrix,
    m2: &ComplexMatrix,
    tol: f64,
) -> Result<ComplexMatrix, DilationError> {
    if m1.rows() != m2.rows() || m1.cols() != m2.cols() {
        return Err(DilationError::DimensionMismatch(format!(
            "stacks are {}x{} and {}x{}",
            m1.rows(),
            m1.cols(),
            m2.rows(),
            m2.cols()
        )));
    }
    let g1 = m1.adjoint_mul(m1);
    let deviation = g1.max_abs_diff(&m2.adjoint_mul(m2));
    if !(deviation <= tol) {
        return Err(DilationError::GramMismatch { deviation });
    }
    let big = m1.rows();
    let eig = hermitian_eig(&g1.hermitian_part())?;
    let kept: Vec<usize> = (0..m1.cols())
        .filter(|&i| eig.values[i].max(0.0).sqrt() > PINV_CUTOFF)
        .collect();
    if kept.is_empty() {
        return Ok(ComplexMatrix::identity(big));
    }
    let mut ek = ComplexMatrix::zeros(m1.cols(), kept.len());
    for (col, &i) in kept.iter().enumerate() {
        ek.set_col(col, &eig.vector(i));
    }
    let inv = ComplexMatrix::from_real_diag(
        &kept.iter().map(|&i| eig.values[i].sqrt().recip()).collect::<Vec<_>>(),
    );
    let z1 = complete_isometry(&near_isometry(&m1.matmul(&ek).matmul(&inv)));
    let z2 = complete_isometry(&near_isometry(&m2.matmul(&ek).matmul(&inv)));
    Ok(z2.matmul(&z1.adjoint()))
}

/// Gram-Schmidt for columns that are orthonormal up to round-off. Directions
/// with singular values just above the cutoff can come out degenerate; such a
/// column is swapped for the basis vector most independent of the others.
/// Those directions carry weight below the cutoff, so the choice is harmless.
fn near_isometry(m: &ComplexMatrix) -> ComplexMatrix {
    let rows = m.rows();
    let mut out = ComplexMatrix::zeros(rows, m.cols());
    let mut done: Vec<Vec<C64>> = Vec::with_capacity(m.cols());
    let project = |mut c: Vec<C64>, done: &[Vec<C64>]| {
        for _ in 0..2 {
            for q in done {
                let ov = inner(q, &c);
                c.iter_mut().zip(q).for_each(|(x, y)| *x -= ov * y);
            }
        }
        c
    };
    for j in 0..m.cols() {
        let mut c = project(m.col(j), &done);
        if vec_norm(&c) < 0.5 {
            c = (0..rows)
                .map(|i| {
                    let mut e = vec![ZERO; rows];
                    e[i] = ONE;
                    project(e, &done)
                })
                .max_by(|x, y| vec_norm(x).total_cmp(&vec_norm(y)))
                .expect("rows > 0");
        }
        let nrm = vec_norm(&c);
        c.iter_mut().for_each(|z| *z /= nrm);
        out.set_col(j, &c);
        done.push(c);
    }
    out
}

/// Optimal `2n x 2n` dilation of a contraction `k`.
///
/// The top-left block is `k`, the lower-left block is `sqrt(I - k^dagger k)`,
/// and the max-norm equals `arccos lambda_min((k + k^dagger)/2)`.
pub fn choi_dilation(k: &ComplexMatrix) -> Result<DilationResult, DilationError> {
    if !k.is_square() {
        return Err(DilationError::DimensionMismatch(format!(
            "block is {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    let norm = operator_norm(k);
    if !(norm <= 1.0 + CONTRACTION_TOL) {
        return Err(DilationError::NotContraction { norm });
    }
    let k = if norm > 1.0 { k.scale_real(1.0 / norm) } else { k.clone() };
    let n = k.rows();
    let u = if is_normal(&k) {
        rotation_dilation(&k)
    } else {
        let u = arc_dilation(&k);
        let d = defect(&k);
        let q = match_isometry(&d, &u.submatrix(n, 0, n, n), 1e-6)?;
        let frame = ComplexMatrix::identity(n).direct_sum(&q);
        let mut u = frame.adjoint().matmul(&u).matmul(&frame);
        u.set_block(0, 0, &k);
        u
    };
    Ok(DilationResult {
        maxnorm: max_norm_unchecked(&u),
        u,
        block_dims: (2, n),
        realized_v: CoefficientVector::new(vec![ONE]).expect("unit vector"),
    })
}

/// A unitary on `C^{d+1} (x) C^n` implementing `ch` with max-norm equal to
/// `cost_result.angle`.
///
/// The optimal `v` is completed by the extra zero Kraus operator to a unit
/// vector, extended to a unitary `V`, and used to rotate the Kraus list so
/// that the first operator is `K_v`. That operator is dilated optimally, and
/// the dilation's lower-left block is steered onto the remaining operators
/// by a unitary `W` acting on the ancilla levels `1..=d`.
pub fn optimal_extension(
    ch: &KrausChannel,
    cost_result: &CostResult,
) -> Result<DilationResult, DilationError> {
    let d = ch.num_ops();
    let n = ch.dim();
    let v = cost_result.optimal_v.components();
    if v.len() != d {
        return Err(DilationError::DimensionMismatch(format!(
            "coefficient vector has length {}, channel has {d} operators",
            v.len()
        )));
    }
    let dp = d + 1;
    let nv = vec_norm(v);
    let mut comps: Vec<C64> = v.iter().map(|z| z / nv.max(1.0)).collect();
    let slack = 1.0 - nv * nv;
    comps.push(C64::new(if slack > DEFECT_FLOOR { slack.sqrt() } else { 0.0 }, 0.0));
    let unit = vec_norm(&comps);
    comps.iter_mut().for_each(|z| *z /= unit);

    let v_mat = unitary_with_first_row(&comps);
    let rotated = ch.pad_zero().mix(&v_mat);
    let tilde = choi_dilation(rotated.op(0))?;

    let low = (dp - 1) * n;
    let mut m1 = ComplexMatrix::zeros(low, n);
    m1.set_block(0, 0, &tilde.u.submatrix(n, 0, n, n));
    let m2 = ComplexMatrix::vstack(&rotated.ops()[1..]);
    let w = match_isometry(&m1, &m2, GRAM_TOL)?;

    let mut big = ComplexMatrix::identity(dp * n);
    big.set_block(0, 0, &tilde.u);
    let frame = ComplexMatrix::identity(n).direct_sum(&w);
    let u = frame.matmul(&big).matmul(&frame.adjoint());
    Ok(DilationResult {
        maxnorm: max_norm_unchecked(&u),
        u,
        block_dims: (dp, n),
        realized_v: CoefficientVector::new(comps)?,
    })
}

/// Kraus operators `<b| U |0>` of the extension with ancilla prepared in `|0>`.
pub fn extension_channel(u: &ComplexMatrix, n: usize) -> Result<KrausChannel, DilationError> {
    let deviation = unitary_deviation(u);
    if !(deviation <= UNITARY_TOL) {
        return Err(DilationError::NotUnitary { deviation });
    }
    if n == 0 || !u.rows().is_multiple_of(n) {
        return Err(DilationError::DimensionMismatch(format!(
            "side {} is not a multiple of {n}",
            u.rows()
        )));
    }
    let ops = (0..u.rows() / n)
        .map(|b| u.submatrix(b * n, 0, n, n))
        .collect();
    Ok(KrausChannel::new(ops)?)
}
