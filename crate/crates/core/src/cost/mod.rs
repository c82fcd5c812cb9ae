//! The time-energy cost `||K||` of a channel.
//!
//! With `K_v = sum_j v_j K_j`,
//!
//! ```text
//! cos ||K|| = max_{|v| <= 1} lambda_min( (K_v + K_v^dagger) / 2 )
//! ```
//!
//! Writing `K_j = A_j + i B_j` (Hermitian `A_j`, `B_j`) and
//! `v_j = a_j - i b_j`, the objective is `lambda_min(sum_j a_j A_j + b_j B_j)`:
//! a concave, positively homogeneous function of the real vector
//! `x = (a, b)`. Everything in this module works with that real form.

mod bounds;
mod closed_form;
mod sdp;
mod supergradient;

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use thiserror::Error;

use crate::channel::KrausChannel;
use crate::matops::{hermitian_eig, vec_norm, ComplexMatrix, LinalgError, C64, ZERO};

pub use bounds::{heuristic_upper_bound, lower_bound, phase_optimize, PhaseOptimum};
pub use closed_form::{cost_alpha_identity, cost_projector};
pub use sdp::{build_sdp, solve_sdp, LmiBlock, SdpProblem, SdpSolution};
pub use supergradient::solve_supergradient;

/// Slack allowed on `|v| <= 1`.
pub const BALL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("coefficient vector has length {got}, channel has {expected} Kraus operators")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coefficient vector norm {norm} exceeds 1")]
    OutsideBall { norm: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("barrier method failed at stage {stage}, Newton iteration {iteration}: {reason}")]
    Barrier {
        stage: usize,
        iteration: usize,
        reason: String,
    },
    #[error("solvers disagree: sdp {sdp:.12}, supergradient {supergradient:.12}")]
    Disagreement { sdp: f64, supergradient: f64 },
    #[error("channel matches no closed-form family")]
    NoClosedForm,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A point `v` of the closed unit ball in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(Vec<C64>);

impl CoefficientVector {
    pub fn new(components: Vec<C64>) -> Result<Self, CostError> {
        let norm = vec_norm(&components);
        if !(norm <= 1.0 + BALL_TOL) {
            return Err(CostError::OutsideBall { norm });
        }
        Ok(Self(components))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![ZERO; d])
    }

    /// From `x = (a_1..a_d, b_1..b_d)` with `v_j = a_j - i b_j`; rescaled onto
    /// the ball if round-off pushed it outside.
    pub fn from_real(x: &[f64]) -> Self {
        let d = x.len() / 2;
        let mut v: Vec<C64> = (0..d).map(|j| C64::new(x[j], -x[d + j])).collect();
        let norm = vec_norm(&v);
        if norm > 1.0 {
            v.iter_mut().for_each(|z| *z /= norm);
        }
        Self(v)
    }

    /// `(a, b)` stacked, `a_j = Re v_j`, `b_j = -Im v_j`.
    pub fn to_real(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.0.iter().map(|z| z.re).collect();
        x.extend(self.0.iter().map(|z| -z.im));
        x
    }

    pub fn components(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.0)
    }
}

/// Hermitian and anti-Hermitian parts of each Kraus operator,
/// `K_j = A_j + i B_j`.
#[derive(Debug, Clone)]
pub struct HermitianPencil {
    pub a: Vec<ComplexMatrix>,
    pub b: Vec<ComplexMatrix>,
}

impl HermitianPencil {
    pub fn num_ops(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.a[0].rows()
    }

    /// Coefficient matrices in variable order `(A_1..A_d, B_1..B_d)`.
    pub fn coefficients(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.a.iter().chain(self.b.iter())
    }

    /// `sum_j a_j A_j + b_j B_j` for `x = (a, b)`.
    pub fn combine(&self, x: &[f64]) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (p, &xi) in self.coefficients().zip(x) {
            if xi != 0.0 {
                out.add_scaled(C64::new(xi, 0.0), p);
            }
        }
        out.hermitian_part()
    }

    /// Objective value and a supergradient at `x`: `lambda_min` of the
    /// combination and `(u^dagger P_i u)_i` for its lowest eigenvector `u`.
    pub fn value_and_supergradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let eig = hermitian_eig(&self.combine(x)).expect("combination is Hermitian");
        let u = eig.vector(0);
        let g = self
            .coefficients()
            .map(|p| p.quadratic_form(&u).re)
            .collect();
        (eig.min(), g)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        hermitian_eig(&self.combine(x))
            .expect("combination is Hermitian")
            .min()
    }
}

pub fn hermitian_parts(ch: &KrausChannel) -> HermitianPencil {
    HermitianPencil {
        a: ch.ops().iter().map(|k| k.hermitian_part()).collect(),
        b: ch.ops().iter().map(|k| k.skew_hermitian_part()).collect(),
    }
}

/// `K_v = sum_j v_j K_j`.
pub fn combine_ops(ch: &KrausChannel, v: &[C64]) -> ComplexMatrix {
    let n = ch.dim();
    let mut k = ComplexMatrix::zeros(n, n);
    for (kj, &vj) in ch.ops().iter().zip(v) {
        k.add_scaled(vj, kj);
    }
    k
}

/// `lambda_min((K_v + K_v^dagger) / 2)`.
pub fn objective(ch: &KrausChannel, v: &CoefficientVector) -> Result<f64, CostError> {
    if v.len() != ch.num_ops() {
        return Err(CostError::LengthMismatch {
            expected: ch.num_ops(),
            got: v.len(),
        });
    }
    Ok(hermitian_eig(&combine_ops(ch, v.components()).hermitian_part())?.min())
}

/// Which algorithm produced a [`CostResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Supergradient,
    Sdp,
    ClosedForm,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Supergradient => "supergradient",
            Method::Sdp => "sdp",
            Method::ClosedForm => "closed-form",
            Method::Oracle => "oracle",
        })
    }
}

/// Solver selection for [`cost`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Closed forms when they apply, otherwise both solvers cross-checked.
    #[default]
    Auto,
    Sdp,
    Supergradient,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierConfig {
    pub t0: f64,
    /// Barrier parameter growth per outer stage.
    pub mu: f64,
    pub armijo: f64,
    pub shrink: f64,
    /// Inner stop on half the squared Newton decrement.
    pub newton_tol: f64,
    /// Outer stop on `(total block side) / t`.
    pub gap_tol: f64,
    pub max_newton: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            t0: 1.0,
            mu: 10.0,
            armijo: 0.01,
            shrink: 0.5,
            newton_tol: 1e-10,
            gap_tol: 1e-9,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostConfig {
    pub strategy: Strategy,
    /// Supergradient iterations per start.
    pub max_iters: usize,
    pub starts: usize,
    /// Step size is `step / sqrt(t)`.
    pub step: f64,
    pub stall_iters: usize,
    pub stall_tol: f64,
    /// Cutting-plane polish after the ascent; 0 disables it.
    pub polish_iters: usize,
    pub polish_tol: f64,
    pub seed: u64,
    pub barrier: BarrierConfig,
    /// Solver values further apart than this are an error.
    pub disagreement_tol: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            max_iters: 5000,
            starts: 8,
            step: 0.5,
            stall_iters: 200,
            stall_tol: 1e-12,
            polish_iters: 2000,
            polish_tol: 1e-12,
            seed: 0,
            barrier: BarrierConfig::default(),
            disagreement_tol: 1e-4,
        }
    }
}

impl CostConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub(crate) fn check(&self) -> Result<(), CostError> {
        if self.max_iters == 0 || self.starts == 0 || self.stall_iters == 0 {
            return Err(CostError::InvalidConfig(
                "iteration, start and stall counts must be positive".into(),
            ));
        }
        if !(self.step > 0.0) || !(self.barrier.mu > 1.0) || !(self.barrier.t0 > 0.0) {
            return Err(CostError::InvalidConfig(
                "step, barrier growth and initial barrier weight must be positive".into(),
            ));
        }
        if !(self.barrier.shrink > 0.0 && self.barrier.shrink < 1.0) {
            return Err(CostError::InvalidConfig("line-search shrink must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostResult {
    /// `||K||` in radians, in `[0, pi/2]`.
    pub angle: f64,
    /// `cos ||K||`, equal to the objective at `optimal_v`.
    pub cos_value: f64,
    pub optimal_v: CoefficientVector,
    pub method: Method,
    /// Certified bracket around `angle`.
    pub lower_bracket: f64,
    pub upper_bracket: f64,
    pub iterations: usize,
    /// `|sdp - supergradient|` when both solvers ran.
    pub solver_gap: Option<f64>,
}

/// `arccos` with the argument clamped to `[0, 1]`.
pub fn clamped_acos(c: f64) -> f64 {
    c.clamp(0.0, 1.0).acos()
}

/// Raw solver output before brackets are attached.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub x: Vec<f64>,
    pub value: f64,
    /// Certified upper bound on the optimal value, if the solver has one.
    pub upper: Option<f64>,
    pub iterations: usize,
}

fn finish(
    ch: &KrausChannel,
    cand: Candidate,
    method: Method,
    solver_gap: Option<f64>,
) -> Result<CostResult, CostError> {
    // the ball optimum is max(0, .): v = 0 is always feasible
    let (v, cos_value) = if cand.value > 0.0 {
        let v = CoefficientVector::from_real(&cand.x);
        let value = objective(ch, &v)?;
        if value > 0.0 {
            (v, value)
        } else {
            (CoefficientVector::zeros(ch.num_ops()), 0.0)
        }
    } else {
        (CoefficientVector::zeros(ch.num_ops()), 0.0)
    };
    let angle = clamped_acos(cos_value);
    let mut lower = lower_bound(ch);
    if let Some(u) = cand.upper {
        lower = lower.max(clamped_acos(u));
    }
    Ok(CostResult {
        angle,
        cos_value,
        optimal_v: v,
        method,
        lower_bracket: lower.min(angle),
        upper_bracket: heuristic_upper_bound(ch),
        iterations: cand.iterations,
        solver_gap,
    })
}

/// `||K||` of a channel; see [`Strategy`] for what runs.
pub fn cost(ch: &KrausChannel, cfg: &CostConfig) -> Result<CostResult, CostError> {
    cfg.check()?;
    match cfg.strategy {
        Strategy::ClosedForm => closed_form::closed_form_result(ch).ok_or(CostError::NoClosedForm),
        Strategy::Supergradient => solve_supergradient(ch, cfg),
        Strategy::Sdp => {
            let cand = sdp::sdp_candidate(ch, cfg)?;
            finish(ch, cand, Method::Sdp, None)
        }
        Strategy::Auto => {
            if let Some(res) = closed_form::closed_form_result(ch) {
                return Ok(res);
            }
            let pencil = hermitian_parts(ch);
            let sg = supergradient::ascend(&pencil, cfg);
            let sd = sdp::sdp_candidate(ch, cfg)?;
            let (a, b) = (sg.value.max(0.0), sd.value.max(0.0));
            let gap = (a - b).abs();
            if !(gap <= cfg.disagreement_tol) {
                return Err(CostError::Disagreement {
                    sdp: b,
                    supergradient: a,
                });
            }
            let upper = match (sg.upper, sd.upper) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            };
            let iterations = sg.iterations + sd.iterations;
            let (best, method) = if sg.value >= sd.value {
                (sg, Method::Supergradient)
            } else {
                (sd, Method::Sdp)
            };
            finish(
                ch,
                Candidate {
                    upper,
                    iterations,
                    ..best
                },
                method,
                Some(gap),
            )
        }
    }
}

/// Worst-case entanglement fidelity `cos ||K||`.
pub fn fidelity_from_cost(ch: &KrausChannel, cfg: &CostConfig) -> Result<f64, CostError> {
    Ok(cost(ch, cfg)?.cos_value)
}

/// Angle reported when nothing better is known.
pub const MAX_ANGLE: f64 = FRAC_PI_2;
