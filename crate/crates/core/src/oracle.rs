//! Brute-force references for the solvers.
//!
//! [`oracle_cost`] samples coefficient vectors on the unit sphere and keeps
//! the best objective value; [`oracle_fidelity`] samples entangled pure
//! inputs and keeps the worst output fidelity. Both polish their five best
//! samples by a derivative-free search that starts along the coordinate axes
//! (Rosenbrock rotation, smoothing of eigenvalue crossings). They bracket the exact answers from one side: the
//! sampled cost angle is never below `||K||`, and the sampled fidelity is
//! never below `cos ||K||`.
//!
//! Sample `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so
//! the result does not depend on how rayon splits the work, and a run with
//! more samples sees the same first samples as a shorter one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::KrausChannel;
use crate::cost::{clamped_acos, hermitian_parts, CoefficientVector};
use crate::matops::{hermitian_eig, kron, psd_sqrt, ComplexMatrix, LinalgError, C64};

const TOP: usize = 5;
const FIRST_STEP: f64 = 0.1;
const LAST_STEP: f64 = 1e-7;
const MAX_SWEEPS: usize = 200;
/// Smoothing schedule for refinement, ending with the exact objective.
const SMOOTHING: [f64; 6] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0];
const UNIT_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state vector has norm {norm}, expected 1")]
    NotNormalized { norm: f64 },
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Result of a sampled search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    /// Angle in radians for [`oracle_cost`], fidelity for [`oracle_fidelity`].
    pub value: f64,
    /// Best coefficient vector or input state found.
    pub witness: Vec<C64>,
    pub samples: usize,
    pub seed: u64,
    pub refined: bool,
}

fn sample_sphere(len: usize, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut x: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut x);
    x
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

/// Rosenbrock search on the unit sphere, starting from the coordinate axes.
///
/// Each direction carries its own step, starting at 0.1: a successful trial
/// (renormalised onto the sphere) triples it, a failed one halves it and flips
/// its sign. Once every direction has succeeded and then failed, the frame is
/// rotated so that its first axis is the net displacement of the stage, which
/// lets the search follow curved valleys. Stops when every step is below 1e-7
/// or after 200 stages.
fn rosenbrock<F: Fn(&[f64]) -> f64>(f: F, mut x: Vec<f64>) -> Vec<f64> {
    let len = x.len();
    let mut fx = f(&x);
    let mut frame: Vec<Vec<f64>> = (0..len)
        .map(|k| (0..len).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut steps = vec![FIRST_STEP; len];
    for _ in 0..MAX_SWEEPS {
        if steps.iter().all(|h| h.abs() < LAST_STEP) {
            break;
        }
        let mut progress = vec![0.0; len];
        let mut succeeded = vec![false; len];
        let mut done = vec![false; len];
        while !done.iter().all(|&d| d) && steps.iter().any(|h| h.abs() >= LAST_STEP) {
            for k in 0..len {
                let mut y: Vec<f64> = x.iter().zip(&frame[k]).map(|(a, b)| a + steps[k] * b).collect();
                normalize(&mut y);
                let fy = f(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    progress[k] += steps[k];
                    steps[k] *= 3.0;
                    succeeded[k] = true;
                } else {
                    steps[k] *= -0.5;
                    done[k] |= succeeded[k];
                }
            }
        }
        if progress.iter().any(|&p| p != 0.0) {
            frame = rotate_frame(&frame, &progress);
        }
    }
    x
}

/// Refines `x` for the exact objective `f(., 0)`. Eigenvalue crossings make
/// the exact objective non-smooth, so the search first runs on the smoothed
/// versions `f(., mu)` for a decreasing `mu`. Never returns a worse point.
fn refine<F: Fn(&[f64], f64) -> f64>(f: &F, x: Vec<f64>, fx: f64) -> (Vec<f64>, f64) {
    let mut best = (x.clone(), fx);
    let mut cur = x;
    for mu in SMOOTHING {
        cur = rosenbrock(|y| f(y, mu), cur);
        let exact = f(&cur, 0.0);
        if exact > best.1 {
            best = (cur.clone(), exact);
        }
    }
    best
}

/// Gram-Schmidt on `a_k = sum_{j >= k} progress_j d_j`, so the first new
/// direction is the net displacement. Degenerate vectors are replaced by the
/// first old axis independent of the new ones.
fn rotate_frame(frame: &[Vec<f64>], progress: &[f64]) -> Vec<Vec<f64>> {
    let len = frame.len();
    let mut sums = vec![Vec::new(); len];
    let mut acc = vec![0.0; len];
    for k in (0..len).rev() {
        acc.iter_mut().zip(&frame[k]).for_each(|(a, d)| *a += progress[k] * d);
        sums[k] = acc.clone();
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(len);
    for sum in sums {
        let orth = |mut c: Vec<f64>, out: &[Vec<f64>]| {
            for q in out {
                let ov: f64 = q.iter().zip(&c).map(|(a, b)| a * b).sum();
                c.iter_mut().zip(q).for_each(|(x, y)| *x -= ov * y);
            }
            c
        };
        let scale = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut cand = orth(sum, &out);
        if cand.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-9 * scale.max(1e-300) {
            cand = frame
                .iter()
                .map(|d| orth(d.clone(), &out))
                .find(|c| c.iter().map(|v| v * v).sum::<f64>() > 1e-6)
                .expect("fewer than len vectors chosen");
        }
        normalize(&mut cand);
        out.push(cand);
    }
    out
}

/// Maximises `f(., 0)` over the sphere in `R^len`: sample, then refine the
/// top few. Ties go to the lower sample index throughout.
fn search<F>(f: F, len: usize, samples: usize, seed: u64, refine_top: bool) -> (Vec<f64>, f64)
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    let samples = samples.max(1);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| f(&sample_sphere(len, seed, i), 0.0))
        .collect();
    let mut order: Vec<usize> = (0..samples).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let keep = if refine_top { TOP.min(samples) } else { 1 };
    let polished: Vec<(Vec<f64>, f64)> = order[..keep]
        .par_iter()
        .map(|&i| {
            let x = sample_sphere(len, seed, i);
            if refine_top {
                refine(&f, x, values[i])
            } else {
                (x, values[i])
            }
        })
        .collect();
    polished
        .into_iter()
        .reduce(|best, cand| if cand.1 > best.1 { cand } else { best })
        .expect("at least one sample")
}

/// `-mu log sum_i exp(-l_i / mu)`, a smooth lower approximation of the
/// smallest of the ascending values `l` (exact for `mu = 0`).
fn soft_min(l: &[f64], mu: f64) -> f64 {
    let low = l[0];
    if mu == 0.0 {
        return low;
    }
    low - mu * l.iter().map(|x| (-(x - low) / mu).exp()).sum::<f64>().ln()
}

/// Sampled estimate of `||K||`, with refinement.
pub fn oracle_cost(ch: &KrausChannel, samples: usize, seed: u64) -> OracleEstimate {
    oracle_cost_with(ch, samples, seed, true)
}

/// [`oracle_cost`] with refinement optional; without it, more samples never
/// give a larger angle.
pub fn oracle_cost_with(ch: &KrausChannel, samples: usize, seed: u64, refine: bool) -> OracleEstimate {
    let pencil = hermitian_parts(ch);
    let f = |x: &[f64], mu: f64| {
        let eig = hermitian_eig(&pencil.combine(x)).expect("combination is Hermitian");
        soft_min(&eig.values, mu)
    };
    let (x, best) = search(f, 2 * ch.num_ops(), samples, seed, refine);
    OracleEstimate {
        value: clamped_acos(best),
        witness: CoefficientVector::from_real(&x).components().to_vec(),
        samples,
        seed,
        refined: refine,
    }
}

/// `sqrt(<psi| rho |psi>)`, the fidelity between a pure state and `rho`.
pub fn fidelity_pure_vs_state(psi: &[C64], rho_out: &ComplexMatrix) -> Result<f64, OracleError> {
    if !rho_out.is_square() || rho_out.rows() != psi.len() {
        return Err(OracleError::DimensionMismatch(format!(
            "state of length {} against a {}x{} matrix",
            psi.len(),
            rho_out.rows(),
            rho_out.cols()
        )));
    }
    let norm = crate::matops::vec_norm(psi);
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(OracleError::NotNormalized { norm });
    }
    check_density(rho_out)?;
    Ok(rho_out.quadratic_form(psi).re.max(0.0).sqrt())
}

fn check_density(rho: &ComplexMatrix) -> Result<(), OracleError> {
    let dev = rho.hermitian_deviation();
    if !(dev <= STATE_TOL) {
        return Err(OracleError::NotDensity(format!("Hermitian deviation {dev:e}")));
    }
    let tr = rho.trace().re;
    if !((tr - 1.0).abs() <= STATE_TOL) {
        return Err(OracleError::NotDensity(format!("trace {tr}")));
    }
    let low = hermitian_eig(&rho.hermitian_part())?.min();
    if !(low >= -STATE_TOL) {
        return Err(OracleError::NotDensity(format!("eigenvalue {low:e}")));
    }
    Ok(())
}

/// `Tr sqrt(rho^{1/2} sigma rho^{1/2})` for density matrices of equal size.
pub fn state_fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64, OracleError> {
    if rho.rows() != sigma.rows() || !rho.is_square() || !sigma.is_square() {
        return Err(OracleError::DimensionMismatch(format!(
            "{}x{} against {}x{}",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    check_density(rho)?;
    check_density(sigma)?;
    let r = psd_sqrt(&rho.hermitian_part())?;
    let inner = r.matmul(sigma).matmul(&r).hermitian_part();
    Ok(psd_sqrt(&inner)?.trace().re)
}

/// `(K (x) I)(|psi><psi|)` for `psi` in `C^n (x) C^n`, system factor first.
pub fn extended_output(ch: &KrausChannel, psi: &[C64]) -> Result<ComplexMatrix, OracleError> {
    let n = ch.dim();
    if psi.len() != n * n {
        return Err(OracleError::DimensionMismatch(format!(
            "state of length {} for a channel on C^{n}",
            psi.len()
        )));
    }
    let id = ComplexMatrix::identity(n);
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for k in ch.ops() {
        let phi = kron(k, &id).matvec(psi);
        let col = ComplexMatrix::column(&phi);
        out = &out + &col.matmul(&col.adjoint());
    }
    Ok(out)
}

fn complex_from_real(x: &[f64]) -> Vec<C64> {
    let m = x.len() / 2;
    (0..m).map(|i| C64::new(x[i], x[m + i])).collect()
}

/// Output fidelity of `psi`, via `<psi|(K_j (x) I)|psi> = Tr(K_j M M^dagger)`
/// with `M` the `n x n` reshape of `psi`.
fn pure_input_fidelity(ch: &KrausChannel, psi: &[C64]) -> f64 {
    let n = ch.dim();
    let m = ComplexMatrix::new(n, n, psi.to_vec()).expect("n*n entries");
    let sigma = m.matmul(&m.adjoint());
    let sq: f64 = ch
        .ops()
        .iter()
        .map(|k| k.matmul(&sigma).trace().norm_sqr())
        .sum();
    sq.sqrt()
}

/// Sampled estimate of the worst-case entanglement fidelity, with refinement.
pub fn oracle_fidelity(ch: &KrausChannel, samples: usize, seed: u64) -> OracleEstimate {
    oracle_fidelity_with(ch, samples, seed, true)
}

/// [`oracle_fidelity`] with refinement optional; without it, more samples
/// never give a larger fidelity.
pub fn oracle_fidelity_with(
    ch: &KrausChannel,
    samples: usize,
    seed: u64,
    refine: bool,
) -> OracleEstimate {
    let n = ch.dim();
    // smooth already; the smoothing parameter is ignored
    let f = |x: &[f64], _: f64| -pure_input_fidelity(ch, &complex_from_real(x));
    let (x, best) = search(f, 2 * n * n, samples, seed, refine);
    OracleEstimate {
        value: -best,
        witness: complex_from_real(&x),
        samples,
        seed,
        refined: refine,
    }
}
