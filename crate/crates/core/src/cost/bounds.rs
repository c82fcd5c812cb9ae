//! Cheap bounds on the cost.
//!
//! The lower bound comes from the trace vector: `cos ||K|| <= |t| / n` with
//! `t_j = Tr K_j`. The upper bound picks one phase per Kraus operator to
//! maximise `lambda_min(e^{i theta} K_j + h.c.)`, then combines the phased
//! operators. Superadditivity of `lambda_min` makes the combination a
//! feasible point, so its angle bounds the cost from above.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::channel::KrausChannel;
use crate::matops::{hermitian_eig, vec_norm, ComplexMatrix, C64};

use super::clamped_acos;

const GRID: usize = 720;
const PHASE_RES: f64 = 1e-10;

/// `arccos(min(1, |Tr K| / n))`.
pub fn lower_bound(ch: &KrausChannel) -> f64 {
    let t = ch.trace_vector();
    clamped_acos(vec_norm(&t) / ch.dim() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOptimum {
    /// Maximising phase in `[0, 2 pi)`.
    pub theta: f64,
    pub value: f64,
}

fn phased_min(k: &ComplexMatrix, theta: f64) -> f64 {
    let z = C64::from_polar(1.0, theta);
    let m = &k.scale(z) + &k.adjoint().scale(z.conj());
    hermitian_eig(&m.hermitian_part())
        .expect("phased sum is Hermitian")
        .min()
}

/// Maximises `lambda_min(e^{i theta} K + e^{-i theta} K^dagger)` over the phase:
/// a 720-point grid, then golden-section search around the best sample.
pub fn phase_optimize(k: &ComplexMatrix) -> PhaseOptimum {
    let h = TAU / GRID as f64;
    let (mut best_theta, mut best) = (0.0, f64::NEG_INFINITY);
    for i in 0..GRID {
        let theta = i as f64 * h;
        let v = phased_min(k, theta);
        if v > best {
            best = v;
            best_theta = theta;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_theta - h, best_theta + h);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (phased_min(k, c), phased_min(k, d));
    while hi - lo > PHASE_RES {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = phased_min(k, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = phased_min(k, d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = phased_min(k, mid);
    if fm > best {
        best = fm;
        best_theta = mid;
    }
    PhaseOptimum {
        theta: best_theta.rem_euclid(TAU),
        value: best,
    }
}

/// Feasible point behind [`heuristic_upper_bound`]: `v_j = c_j e^{i theta_j}`
/// with `c` the normalised positive part of the per-operator optima.
pub(crate) fn heuristic_point(ch: &KrausChannel) -> (Vec<C64>, f64) {
    let opts: Vec<PhaseOptimum> = ch.ops().iter().map(phase_optimize).collect();
    let pos: Vec<f64> = opts.iter().map(|o| o.value.max(0.0)).collect();
    let norm = pos.iter().map(|s| s * s).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![C64::new(0.0, 0.0); ch.num_ops()], 0.0);
    }
    let v = opts
        .iter()
        .zip(&pos)
        .map(|(o, s)| C64::from_polar(s / norm, o.theta))
        .collect();
    (v, norm / 2.0)
}

/// Upper bound on the cost from per-operator phase optimisation.
pub fn heuristic_upper_bound(ch: &KrausChannel) -> f64 {
    let (_, c) = heuristic_point(ch);
    if c <= 0.0 {
        FRAC_PI_2
    } else {
        clamped_acos(c)
    }
}
