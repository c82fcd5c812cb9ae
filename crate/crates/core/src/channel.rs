//! Kraus-form channels: validation, representation changes, Choi matrices and
//! a few standard families.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matops::{
    gaussian_matrix, is_unitary, orthonormalize_columns, unitary_with_first_row, vec_norm,
    ComplexMatrix, LinalgError, C64, ZERO,
};

/// Trace-preservation tolerance used by the constructors.
pub const CHANNEL_TOL: f64 = 1e-8;
/// Tolerance for unitarity of mixing matrices and projector tests.
pub const STRICT_TOL: f64 = 1e-10;
/// Below this trace-vector norm a channel counts as all-traceless.
const TRACELESS_NORM: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("a channel needs at least one Kraus operator")]
    NoOperators,
    #[error("Kraus operator {index} is {rows}x{cols}, expected {dim}x{dim}")]
    WrongShape {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("not trace preserving: max |sum K^dagger K - I| = {deviation:e}")]
    NotTracePreserving { deviation: f64 },
    #[error("mixing matrix is not a {expected}x{expected} unitary (deviation {deviation:e})")]
    NotUnitary { expected: usize, deviation: f64 },
    #[error("operator {index} is not a projector")]
    NotProjector { index: usize },
    #[error("projector {index} has rank {rank}, expected {expected}")]
    RankMismatch {
        index: usize,
        rank: usize,
        expected: usize,
    },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A channel `rho -> sum_j K_j rho K_j^dagger` on `C^n`.
///
/// Construction checks shapes and trace preservation, so every value of this
/// type is a valid channel up to the tolerance it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<ComplexMatrix>,
}

/// Max-entry deviation of `sum_j K_j^dagger K_j` from the identity.
pub fn completeness_deviation(ops: &[ComplexMatrix]) -> f64 {
    let Some(first) = ops.first() else {
        return f64::INFINITY;
    };
    let n = first.rows();
    let mut sum = ComplexMatrix::zeros(n, n);
    for k in ops {
        sum = &sum + &k.adjoint_mul(k);
    }
    sum.max_abs_diff(&ComplexMatrix::identity(n))
}

fn check_shapes(ops: &[ComplexMatrix]) -> Result<usize, ChannelError> {
    let first = ops.first().ok_or(ChannelError::NoOperators)?;
    let dim = first.rows();
    for (index, k) in ops.iter().enumerate() {
        if k.rows() != dim || k.cols() != dim {
            return Err(ChannelError::WrongShape {
                index,
                rows: k.rows(),
                cols: k.cols(),
                dim,
            });
        }
    }
    Ok(dim)
}

/// True iff the operators are square, equally sized and trace preserving
/// within `tol`.
pub fn validate_ops(ops: &[ComplexMatrix], tol: f64) -> bool {
    check_shapes(ops).is_ok() && completeness_deviation(ops) <= tol
}

impl KrausChannel {
    /// Builds a channel, requiring trace preservation within [`CHANNEL_TOL`].
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self, ChannelError> {
        Self::with_tolerance(ops, CHANNEL_TOL)
    }

    pub fn with_tolerance(ops: Vec<ComplexMatrix>, tol: f64) -> Result<Self, ChannelError> {
        let dim = check_shapes(&ops)?;
        let deviation = completeness_deviation(&ops);
        // also rejects NaN
        if !(deviation <= tol) {
            return Err(ChannelError::NotTracePreserving { deviation });
        }
        Ok(Self { dim, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of Kraus operators `d`.
    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn op(&self, j: usize) -> &ComplexMatrix {
        &self.ops[j]
    }

    pub fn validate(&self, tol: f64) -> bool {
        validate_ops(&self.ops, tol)
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix, ChannelError> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return Err(ChannelError::DimensionMismatch(format!(
                "state is {}x{}, channel acts on dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out = &out + &k.matmul(rho).matmul(&k.adjoint());
        }
        Ok(out)
    }

    /// `sum_{a,b} |a><b| (x) K(|a><b|)`, indexed `(a*n + i, b*n + k)`.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim;
        ComplexMatrix::from_fn(n * n, n * n, |r, c| {
            let (a, i) = (r / n, r % n);
            let (b, k) = (c / n, c % n);
            self.ops.iter().map(|m| m[(i, a)] * m[(k, b)].conj()).sum()
        })
    }

    /// Traces `Tr K_j`.
    pub fn trace_vector(&self) -> Vec<C64> {
        self.ops.iter().map(|k| k.trace()).collect()
    }

    /// `K'_i = sum_j w_ij K_j` for a `d x d` unitary `w`.
    pub fn kraus_transform(&self, w: &ComplexMatrix) -> Result<KrausChannel, ChannelError> {
        let d = self.num_ops();
        if w.rows() != d || w.cols() != d || !is_unitary(w, STRICT_TOL) {
            let deviation = if w.is_square() && w.rows() == d {
                w.adjoint_mul(w).max_abs_diff(&ComplexMatrix::identity(d))
            } else {
                f64::INFINITY
            };
            return Err(ChannelError::NotUnitary {
                expected: d,
                deviation,
            });
        }
        Ok(self.mix(w))
    }

    /// Unchecked linear mixing; `w` must be unitary for the result to be a
    /// channel.
    pub(crate) fn mix(&self, w: &ComplexMatrix) -> KrausChannel {
        let n = self.dim;
        let ops = (0..w.rows())
            .map(|i| {
                let mut k = ComplexMatrix::zeros(n, n);
                for (j, kj) in self.ops.iter().enumerate() {
                    let wij = w[(i, j)];
                    if wij != ZERO {
                        k.add_scaled(wij, kj);
                    }
                }
                k
            })
            .collect();
        KrausChannel { dim: n, ops }
    }

    /// Appends an all-zero operator.
    pub fn pad_zero(&self) -> KrausChannel {
        let mut ops = self.ops.clone();
        ops.push(ComplexMatrix::zeros(self.dim, self.dim));
        KrausChannel { dim: self.dim, ops }
    }

    /// Equivalent representation in which only the first operator can have
    /// nonzero trace.
    pub fn canonical_form(&self) -> KrausChannel {
        self.canonical_with_transform().0
    }

    /// Canonical form together with the mixing unitary that produced it
    /// (`None` when the channel was already all-traceless). A single-operator
    /// channel is padded first, so the mixing matrix acts on the padded list.
    pub fn canonical_with_transform(&self) -> (KrausChannel, Option<ComplexMatrix>) {
        let base = if self.num_ops() == 1 {
            self.pad_zero()
        } else {
            self.clone()
        };
        let t = base.trace_vector();
        let norm = vec_norm(&t);
        if norm <= TRACELESS_NORM {
            return (base, None);
        }
        let row: Vec<C64> = t.iter().map(|z| z.conj() / norm).collect();
        let w = unitary_with_first_row(&row);
        (base.mix(&w), Some(w))
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("static shape")
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]])
        .expect("static shape")
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// Heisenberg-Weyl operator `X^a Z^b` on `C^n`: `X|j> = |j+1>`,
/// `Z|j> = w^j |j>` with `w = exp(2 pi i / n)`.
pub fn weyl_operator(n: usize, a: usize, b: usize) -> ComplexMatrix {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
    // (X^a Z^b)[i][j] = [i == j + a] w^{j b}
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == (j + a) % n {
            omega((j * b) % n)
        } else {
            ZERO
        }
    })
}

pub fn identity_channel(n: usize) -> Result<KrausChannel, ChannelError> {
    if n == 0 {
        return Err(ChannelError::BadParameter("dimension must be at least 1".into()));
    }
    KrausChannel::new(vec![ComplexMatrix::identity(n)])
}

pub fn unitary_channel(u: &ComplexMatrix) -> Result<KrausChannel, ChannelError> {
    KrausChannel::new(vec![u.clone()])
}

/// Qudit depolarizing channel with `n^2` Kraus operators: the identity
/// scaled by `sqrt(1 - p (n^2-1)/n^2)` followed by every other `X^a Z^b`
/// scaled by `sqrt(p)/n`, in lexicographic `(a, b)` order.
pub fn depolarizing(n: usize, p: f64) -> Result<KrausChannel, ChannelError> {
    if n < 2 {
        return Err(ChannelError::BadParameter(format!(
            "depolarizing needs dimension >= 2, got {n}"
        )));
    }
    let n2 = (n * n) as f64;
    let p_max = n2 / (n2 - 1.0);
    if !(0.0..=p_max).contains(&p) {
        return Err(ChannelError::BadParameter(format!(
            "depolarizing p = {p} outside [0, {p_max}]"
        )));
    }
    let alpha = (1.0 - p * (n2 - 1.0) / n2).max(0.0).sqrt();
    let beta = p.sqrt() / n as f64;
    let mut ops = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let s = if a == 0 && b == 0 { alpha } else { beta };
            ops.push(weyl_operator(n, a, b).scale_real(s));
        }
    }
    KrausChannel::new(ops)
}

/// Amplitude damping `{diag(1, sqrt(1-g)), sqrt(g) |0><1|}`.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel, ChannelError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ChannelError::BadParameter(format!(
            "damping rate {gamma} outside [0, 1]"
        )));
    }
    let k1 = ComplexMatrix::from_real_diag(&[1.0, (1.0 - gamma).sqrt()]);
    let k2 = ComplexMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]])
        .expect("static shape");
    KrausChannel::new(vec![k1, k2])
}

fn projector_rank(p: &ComplexMatrix, index: usize) -> Result<usize, ChannelError> {
    let idempotent = p.matmul(p).max_abs_diff(p) <= STRICT_TOL;
    if !p.is_square() || !p.is_hermitian(STRICT_TOL) || !idempotent {
        return Err(ChannelError::NotProjector { index });
    }
    Ok(p.trace().re.round() as usize)
}

/// Channel `{s_j P_j}` from equal-rank orthogonal projectors.
pub fn projector_channel(
    projectors: &[ComplexMatrix],
    scales: &[C64],
) -> Result<KrausChannel, ChannelError> {
    if projectors.is_empty() {
        return Err(ChannelError::NoOperators);
    }
    if projectors.len() != scales.len() {
        return Err(ChannelError::DimensionMismatch(format!(
            "{} projectors but {} scales",
            projectors.len(),
            scales.len()
        )));
    }
    let rank = projector_rank(&projectors[0], 0)?;
    for (index, p) in projectors.iter().enumerate().skip(1) {
        let r = projector_rank(p, index)?;
        if r != rank {
            return Err(ChannelError::RankMismatch {
                index,
                rank: r,
                expected: rank,
            });
        }
    }
    let ops = projectors
        .iter()
        .zip(scales)
        .map(|(p, &s)| p.scale(s))
        .collect();
    KrausChannel::new(ops)
}

/// Standard rank-`r` projector family on `C^n`.
///
/// When `r` divides `n` this is `n/r` disjoint coordinate blocks with unit
/// scales. Otherwise it is the `n` cyclic windows
/// `span{e_k, .., e_{k+r-1 mod n}}`, each scaled by `1/sqrt(r)`.
pub fn projector_family(n: usize, r: usize) -> Result<KrausChannel, ChannelError> {
    if n == 0 || r == 0 || r > n {
        return Err(ChannelError::BadParameter(format!(
            "projector family needs 1 <= r <= n, got n = {n}, r = {r}"
        )));
    }
    let window = |start: usize| {
        let mut diag = vec![0.0; n];
        for k in 0..r {
            diag[(start + k) % n] = 1.0;
        }
        ComplexMatrix::from_real_diag(&diag)
    };
    let (projectors, scale): (Vec<_>, f64) = if n.is_multiple_of(r) {
        ((0..n / r).map(|b| window(b * r)).collect(), 1.0)
    } else {
        ((0..n).map(window).collect(), 1.0 / (r as f64).sqrt())
    };
    let scales = vec![C64::new(scale, 0.0); projectors.len()];
    projector_channel(&projectors, &scales)
}

/// Random channel from a Gaussian `dn x n` isometry sliced into `d` blocks.
/// The same seed always gives the same channel.
pub fn random_channel(n: usize, d: usize, seed: u64) -> Result<KrausChannel, ChannelError> {
    if n == 0 || d == 0 {
        return Err(ChannelError::BadParameter(format!(
            "random channel needs n, d >= 1, got n = {n}, d = {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let iso = orthonormalize_columns(&gaussian_matrix(d * n, n, &mut rng));
    let ops = (0..d).map(|j| iso.submatrix(j * n, 0, n, n)).collect();
    KrausChannel::new(ops)
}

/// Dephasing in the computational basis, `{|k><k|}`.
pub fn dephasing(n: usize) -> Result<KrausChannel, ChannelError> {
    projector_family(n, 1)
}
