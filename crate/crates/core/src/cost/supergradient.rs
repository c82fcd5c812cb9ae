//! Projected supergradient ascent, finished by a cutting-plane polish.
//!
//! The ascent uses diminishing steps from several starts. Diminishing steps
//! converge slowly at the kinks where optima of `lambda_min` usually sit, so
//! the best point is then polished.
//!
//! Because `f(x) = lambda_min(P(x))` is concave and positively homogeneous,
//! every supergradient `g` seen so far gives a global cut `f(y) <= g . y`.
//! Over the unit ball, `max_y min_k g_k . y` equals the norm of the
//! minimum-norm point `p` of `conv{g_k}`. So `|p|` is a certified upper
//! bound, and `p / |p|` is the next query point. This is Wolfe's
//! minimum-norm-point method run against the supergradient oracle. It stops
//! when the bound meets the best value found.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{finish, hermitian_parts, Candidate, CostConfig, CostError, CostResult, HermitianPencil, Method};
use crate::channel::KrausChannel;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn start_point(index: usize, m: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut x = vec![0.0; m];
    if index < d.min(4) {
        x[index] = 1.0;
        return x;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    for xi in x.iter_mut() {
        *xi = StandardNormal.sample(&mut rng);
    }
    let nrm = norm(&x);
    x.iter_mut().for_each(|v| *v /= nrm);
    x
}

struct Run {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
}

fn ascend_from(pencil: &HermitianPencil, mut x: Vec<f64>, cfg: &CostConfig) -> Run {
    let (mut fx, mut g) = pencil.value_and_supergradient(&x);
    let mut best = Run {
        x: x.clone(),
        value: fx,
        iterations: 0,
    };
    let mut stall = 0;
    for t in 1..=cfg.max_iters {
        best.iterations = t;
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let eta = cfg.step / (t as f64).sqrt();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi += eta * gi / gn;
        }
        let xn = norm(&x);
        if xn > 1.0 {
            x.iter_mut().for_each(|v| *v /= xn);
        }
        (fx, g) = pencil.value_and_supergradient(&x);
        if fx > best.value + cfg.stall_tol {
            stall = 0;
        } else {
            stall += 1;
        }
        if fx > best.value {
            best.value = fx;
            best.x.copy_from_slice(&x);
        }
        if stall >= cfg.stall_iters {
            break;
        }
    }
    best
}

/// Minimises `|sum a_i s_i|` over the affine hull (`sum a_i = 1`).
fn affine_minimizer(points: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = points.len();
    let size = k + 1;
    let mut a = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    let mut scale: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            a[i * size + j] = dot(&points[i], &points[j]);
        }
        scale = scale.max(a[i * size + i]);
    }
    // light ridge so nearly dependent corrals stay solvable
    for i in 0..k {
        a[i * size + i] += 1e-15 * scale.max(1e-300);
        a[i * size + k] = 1.0;
        a[k * size + i] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = solve_dense(a, rhs, size)?;
    Some(sol[..k].to_vec())
}

/// Gaussian elimination with partial pivoting on a row-major `size x size` system.
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, size: usize) -> Option<Vec<f64>> {
    for col in 0..size {
        let piv = (col..size).max_by(|&i, &j| {
            a[i * size + col]
                .abs()
                .total_cmp(&a[j * size + col].abs())
        })?;
        if a[piv * size + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..size {
                a.swap(piv * size + j, col * size + j);
            }
            b.swap(piv, col);
        }
        for i in col + 1..size {
            let f = a[i * size + col] / a[col * size + col];
            if f != 0.0 {
                for j in col..size {
                    a[i * size + j] -= f * a[col * size + j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; size];
    for i in (0..size).rev() {
        let s: f64 = (i + 1..size).map(|j| a[i * size + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * size + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct Polished {
    x: Vec<f64>,
    value: f64,
    upper: f64,
    iterations: usize,
}

fn polish(pencil: &HermitianPencil, x0: Vec<f64>, value0: f64, cfg: &CostConfig) -> Polished {
    let (_, g0) = pencil.value_and_supergradient(&x0);
    let mut out = Polished {
        x: x0,
        value: value0,
        upper: f64::INFINITY,
        iterations: 0,
    };
    let mut corral = vec![g0];
    let mut weights = vec![1.0];
    let mut p = corral[0].clone();
    for it in 0..cfg.polish_iters {
        out.iterations = it + 1;
        let pn = norm(&p);
        out.upper = out.upper.min(pn);
        // x = 0 is feasible, so the optimum is at least 0
        if out.upper - out.value.max(0.0) <= cfg.polish_tol || pn <= 1e-300 {
            break;
        }
        let y: Vec<f64> = p.iter().map(|v| v / pn).collect();
        let (fy, gy) = pencil.value_and_supergradient(&y);
        if fy > out.value {
            out.value = fy;
            out.x = y;
        }
        if out.upper - out.value.max(0.0) <= cfg.polish_tol {
            break;
        }
        corral.push(gy);
        weights.push(0.0);
        // minor cycles: move towards the affine minimiser while it leaves the simplex
        for _ in 0..=corral.len() {
            let Some(alpha) = affine_minimizer(&corral) else {
                break;
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                weights = alpha;
                break;
            }
            let mut theta: f64 = 1.0;
            for (&l, &a) in weights.iter().zip(&alpha) {
                if a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in weights.iter_mut().zip(&alpha) {
                *l += theta * (a - *l);
            }
            let kept: Vec<bool> = weights.iter().map(|&l| l > 1e-14).collect();
            if kept.iter().all(|&k| k) {
                break;
            }
            corral = corral
                .into_iter()
                .zip(&kept)
                .filter_map(|(c, &k)| k.then_some(c))
                .collect();
            weights = weights
                .into_iter()
                .zip(&kept)
                .filter_map(|(w, &k)| k.then_some(w))
                .collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        p = vec![0.0; p.len()];
        for (c, &w) in corral.iter().zip(&weights) {
            for (pi, ci) in p.iter_mut().zip(c) {
                *pi += w * ci;
            }
        }
    }
    out
}

/// Multi-start ascent plus polish on a pencil.
pub(crate) fn ascend(pencil: &HermitianPencil, cfg: &CostConfig) -> Candidate {
    let d = pencil.num_ops();
    let m = 2 * d;
    let runs: Vec<Run> = (0..cfg.starts)
        .into_par_iter()
        .map(|s| ascend_from(pencil, start_point(s, m, d, cfg.seed), cfg))
        .collect();
    let mut iterations: usize = runs.iter().map(|r| r.iterations).sum();
    // best value, ties to the lowest start index
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one start");
    if cfg.polish_iters == 0 {
        return Candidate {
            x: best.x,
            value: best.value,
            upper: None,
            iterations,
        };
    }
    let pol = polish(pencil, best.x, best.value, cfg);
    iterations += pol.iterations;
    Candidate {
        x: pol.x,
        value: pol.value,
        upper: Some(pol.upper),
        iterations,
    }
}

/// Maximises the objective over the coefficient ball by supergradient ascent.
pub fn solve_supergradient(ch: &KrausChannel, cfg: &CostConfig) -> Result<CostResult, CostError> {
    cfg.check()?;
    let cand = ascend(&hermitian_parts(ch), cfg);
    finish(ch, cand, Method::Supergradient, None)
}
