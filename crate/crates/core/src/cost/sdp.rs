//! The cost as a two-block complex SDP, solved by a log-barrier method.
//!
//! Variables `x = (a_1..a_d, b_1..b_d, lambda)`; maximise `lambda` subject to
//!
//! ```text
//! block 1:  I_{2d+1} + sum_i x_i F_i  >= 0,   F_i = E_{i,2d+1} + E_{2d+1,i}
//! block 2:  sum_j a_j A_j + b_j B_j - lambda I  >= 0
//! ```
//!
//! Block 1 is `[[I, x], [x^T, 1]]` up to ordering, which is PSD exactly when
//! `|x| <= 1`. Block 2 says `lambda` is below the objective.

use super::{hermitian_parts, Candidate, CostConfig, CostError};
use super::supergradient::solve_dense;
use crate::channel::KrausChannel;
use crate::matops::{ComplexMatrix, C64, ONE};

/// `H + sum_i x_i G_i >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub coeffs: Vec<ComplexMatrix>,
    pub constant: ComplexMatrix,
}

impl LmiBlock {
    pub fn side(&self) -> usize {
        self.constant.rows()
    }

    pub fn eval(&self, x: &[f64]) -> ComplexMatrix {
        let mut out = self.constant.clone();
        for (g, &xi) in self.coeffs.iter().zip(x) {
            if xi != 0.0 {
                out.add_scaled(C64::new(xi, 0.0), g);
            }
        }
        out.hermitian_part()
    }
}

/// Minimise `g . x` subject to every block being PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub m: usize,
    pub g: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    /// Strictly feasible starting point.
    pub start: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: Vec<f64>,
    /// `-g . x`, i.e. `lambda` for the channel problem.
    pub value: f64,
    /// Bound on the distance to the optimum from the final barrier weight.
    pub gap_bound: f64,
    pub newton_steps: usize,
}

pub fn build_sdp(ch: &KrausChannel) -> SdpProblem {
    let d = ch.num_ops();
    let n = ch.dim();
    let m = 2 * d + 1;
    let side1 = 2 * d + 1;
    let pencil = hermitian_parts(ch);

    let mut coeffs1 = Vec::with_capacity(m);
    for i in 0..2 * d {
        let mut f = ComplexMatrix::zeros(side1, side1);
        f[(i, side1 - 1)] = ONE;
        f[(side1 - 1, i)] = ONE;
        coeffs1.push(f);
    }
    coeffs1.push(ComplexMatrix::zeros(side1, side1));

    let mut coeffs2: Vec<ComplexMatrix> = pencil.coefficients().cloned().collect();
    coeffs2.push(ComplexMatrix::identity(n).scale_real(-1.0));

    let mut g = vec![0.0; m];
    g[m - 1] = -1.0;
    let mut start = vec![0.0; m];
    start[m - 1] = -1.0;
    SdpProblem {
        m,
        g,
        blocks: vec![
            LmiBlock {
                coeffs: coeffs1,
                constant: ComplexMatrix::identity(side1),
            },
            LmiBlock {
                coeffs: coeffs2,
                constant: ComplexMatrix::zeros(n, n),
            },
        ],
        start,
    }
}

/// `log det` via Cholesky, `None` when not positive definite.
fn log_det(m: &ComplexMatrix) -> Option<f64> {
    let l = m.cholesky()?;
    let mut s = 0.0;
    for k in 0..m.rows() {
        let dk = l[(k, k)].re;
        if !(dk > 0.0) {
            return None;
        }
        s += 2.0 * dk.ln();
    }
    Some(s)
}

fn barrier_value(prob: &SdpProblem, x: &[f64], t: f64) -> Option<f64> {
    let mut phi = t * x.iter().zip(&prob.g).map(|(a, b)| a * b).sum::<f64>();
    for b in &prob.blocks {
        phi -= log_det(&b.eval(x))?;
    }
    Some(phi)
}

/// Real part of `Tr(X Y)` for square matrices.
fn re_trace_product(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    let s = x.rows();
    let mut acc = 0.0;
    for i in 0..s {
        for k in 0..s {
            acc += (x[(i, k)] * y[(k, i)]).re;
        }
    }
    acc
}

fn newton_system(prob: &SdpProblem, x: &[f64], t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = prob.m;
    let mut grad: Vec<f64> = prob.g.iter().map(|gi| t * gi).collect();
    let mut hess = vec![0.0; m * m];
    for b in &prob.blocks {
        let inv = b.eval(x).inverse_hpd()?;
        let ys: Vec<ComplexMatrix> = b.coeffs.iter().map(|g| inv.matmul(g)).collect();
        for i in 0..m {
            grad[i] -= ys[i].trace().re;
            for j in i..m {
                let h = re_trace_product(&ys[i], &ys[j]);
                hess[i * m + j] += h;
                if i != j {
                    hess[j * m + i] += h;
                }
            }
        }
    }
    Some((grad, hess))
}

fn feasible(prob: &SdpProblem, x: &[f64]) -> bool {
    prob.blocks.iter().all(|b| b.eval(x).cholesky().is_some())
}

/// Log-barrier Newton method over the blocks of `prob`.
pub fn solve_sdp(prob: &SdpProblem, cfg: &CostConfig) -> Result<SdpSolution, CostError> {
    let bc = &cfg.barrier;
    let mut x = prob.start.clone();
    if !feasible(prob, &x) {
        return Err(CostError::Barrier {
            stage: 0,
            iteration: 0,
            reason: "starting point is not strictly feasible".into(),
        });
    }
    let total_side: f64 = prob.blocks.iter().map(|b| b.side() as f64).sum();
    let mut t = bc.t0;
    let mut steps = 0;
    let mut stage = 0;
    loop {
        stage += 1;
        for it in 0..bc.max_newton {
            let fail = |reason: &str| CostError::Barrier {
                stage,
                iteration: it,
                reason: reason.to_string(),
            };
            let (grad, hess) =
                newton_system(prob, &x, t).ok_or_else(|| fail("lost positive definiteness"))?;
            let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
            let Some(dx) = solve_dense(hess, neg, prob.m) else {
                return Err(fail("singular Newton system"));
            };
            let slope: f64 = grad.iter().zip(&dx).map(|(a, b)| a * b).sum();
            let decrement = -slope;
            if decrement / 2.0 <= bc.newton_tol {
                break;
            }
            steps += 1;
            let phi0 = barrier_value(prob, &x, t).ok_or_else(|| fail("lost positive definiteness"))?;
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-20 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + s * b).collect();
                if let Some(phi) = barrier_value(prob, &trial, t) {
                    if phi <= phi0 + bc.armijo * s * slope {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                s *= bc.shrink;
            }
            if !accepted {
                // round-off floor near the central path; the point is still interior
                break;
            }
        }
        if total_side / t <= bc.gap_tol {
            break;
        }
        t *= bc.mu;
    }
    let value = -x.iter().zip(&prob.g).map(|(a, b)| a * b).sum::<f64>();
    Ok(SdpSolution {
        x,
        value,
        gap_bound: total_side / t,
        newton_steps: steps,
    })
}

pub(crate) fn sdp_candidate(ch: &KrausChannel, cfg: &CostConfig) -> Result<Candidate, CostError> {
    cfg.check()?;
    let prob = build_sdp(ch);
    let sol = solve_sdp(&prob, cfg)?;
    let m = prob.m;
    let x = sol.x[..m - 1].to_vec();
    // the lambda slack is at most the gap; report the objective actually attained
    let attained = hermitian_parts(ch).value(&project(&x));
    Ok(Candidate {
        value: attained.max(sol.value),
        upper: Some(sol.value + sol.gap_bound),
        x: project(&x),
        iterations: sol.newton_steps,
    })
}

fn project(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 1.0 {
        x.iter().map(|v| v / n).collect()
    } else {
        x.to_vec()
    }
}
