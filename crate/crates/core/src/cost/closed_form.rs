//! Families with a closed-form cost.
//!
//! If the canonical first operator is `alpha I` (the remaining ones being
//! traceless), the cost is `arccos |alpha|`. Channels of equal-rank scaled
//! projectors `{s_j P_j}` cost `arccos sqrt(r / n)`. In both cases the optimal
//! `v` is the normalised conjugate trace vector, rotated by `alpha`'s phase.

use crate::channel::KrausChannel;
use crate::matops::{hermitian_eig, vec_norm, ComplexMatrix, C64};

use super::{
    clamped_acos, heuristic_upper_bound, lower_bound, objective, CoefficientVector, CostResult,
    Method,
};

const DETECT_TOL: f64 = 1e-9;

/// `arccos |alpha|` when the canonical first operator is `alpha I`.
pub fn cost_alpha_identity(ch: &KrausChannel) -> Option<f64> {
    let canon = ch.canonical_form();
    let k1 = canon.op(0);
    let n = ch.dim();
    let alpha = k1.trace() / n as f64;
    let scaled = ComplexMatrix::identity(n).scale(alpha);
    (k1.max_abs_diff(&scaled) <= DETECT_TOL).then(|| clamped_acos(alpha.norm()))
}

/// Rank of `k` if `k = s P` for an orthogonal projector `P`, `None` otherwise.
/// Zero operators report rank 0.
fn scaled_projector_rank(k: &ComplexMatrix) -> Option<usize> {
    let gram = k.adjoint_mul(k);
    let eig = hermitian_eig(&gram).ok()?;
    let top = eig.max();
    if top <= DETECT_TOL {
        return Some(0);
    }
    // eigenvalues of K^dagger K must be 0 or |s|^2
    let mut rank = 0;
    for &l in &eig.values {
        if (l - top).abs() <= DETECT_TOL {
            rank += 1;
        } else if l.abs() > DETECT_TOL {
            return None;
        }
    }
    let p = gram.scale_real(1.0 / top);
    let s = k.trace() / rank as f64;
    let idempotent = p.matmul(&p).max_abs_diff(&p) <= DETECT_TOL;
    (idempotent && k.max_abs_diff(&p.scale(s)) <= DETECT_TOL).then_some(rank)
}

/// `arccos sqrt(r / n)` for channels of equal-rank scaled projectors.
pub fn cost_projector(ch: &KrausChannel) -> Option<f64> {
    let mut rank = None;
    for k in ch.ops() {
        match scaled_projector_rank(k)? {
            0 => continue,
            r if rank.is_none() || rank == Some(r) => rank = Some(r),
            _ => return None,
        }
    }
    let r = rank?;
    Some(clamped_acos((r as f64 / ch.dim() as f64).sqrt()))
}

/// The optimiser shared by both families, checked against the claimed value.
fn closed_form_point(ch: &KrausChannel, angle: f64) -> Option<(CoefficientVector, f64)> {
    let d = ch.num_ops();
    let t = ch.trace_vector();
    let norm = vec_norm(&t);
    let target = angle.cos();
    let v = if norm <= 1e-14 {
        vec![C64::new(0.0, 0.0); d]
    } else {
        let v0: Vec<C64> = t.iter().map(|z| z.conj() / norm).collect();
        let k = super::combine_ops(ch, &v0);
        let alpha = k.trace();
        let phase = if alpha.norm() > 0.0 {
            alpha.conj() / alpha.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        v0.into_iter().map(|z| z * phase).collect()
    };
    let v = CoefficientVector::new(v).ok()?;
    let value = objective(ch, &v).ok()?.max(0.0);
    ((value - target).abs() <= DETECT_TOL).then_some((v, value))
}

pub(crate) fn closed_form_result(ch: &KrausChannel) -> Option<CostResult> {
    let angle = cost_alpha_identity(ch).or_else(|| cost_projector(ch))?;
    let (v, cos_value) = closed_form_point(ch, angle)?;
    let angle = clamped_acos(cos_value);
    Some(CostResult {
        angle,
        cos_value,
        optimal_v: v,
        method: Method::ClosedForm,
        lower_bracket: lower_bound(ch).min(angle),
        upper_bracket: heuristic_upper_bound(ch),
        iterations: 0,
        solver_gap: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        amplitude_damping, dephasing, depolarizing, identity_channel, projector_family,
        random_channel,
    };
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn alpha_identity_examples() {
        let a = cost_alpha_identity(&depolarizing(2, 0.5).unwrap()).unwrap();
        assert!((a - (5.0f64 / 8.0).sqrt().acos()).abs() < 1e-12);
        assert!((a - 0.65906).abs() < 1e-5);
        let a = cost_alpha_identity(&dephasing(2).unwrap()).unwrap();
        assert!((a - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(cost_alpha_identity(&amplitude_damping(0.5).unwrap()), None);
    }

    #[test]
    fn projector_examples() {
        assert!((cost_projector(&dephasing(2).unwrap()).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!((cost_projector(&projector_family(4, 2).unwrap()).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(cost_projector(&depolarizing(2, 0.5).unwrap()), None);
        assert_eq!(cost_projector(&identity_channel(3).unwrap()), Some(0.0));
        assert_eq!(cost_projector(&random_channel(2, 2, 0).unwrap()), None);
    }

    #[test]
    fn projector_with_phases() {
        let p0 = ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diag(&[0.0, 1.0, 0.0]);
        let p2 = ComplexMatrix::from_real_diag(&[0.0, 0.0, 1.0]);
        let scales = [C64::i(), C64::new(-1.0, 0.0), C64::from_polar(1.0, 0.3)];
        let ch = crate::channel::projector_channel(&[p0, p1, p2], &scales).unwrap();
        let expect = (1.0f64 / 3.0).sqrt().acos();
        assert!((cost_projector(&ch).unwrap() - expect).abs() < 1e-12);
        let r = closed_form_result(&ch).unwrap();
        assert!((r.angle - expect).abs() < 1e-12);
    }

    #[test]
    fn closed_form_point_attains_value() {
        for ch in [
            depolarizing(3, 0.5).unwrap(),
            projector_family(6, 3).unwrap(),
            projector_family(3, 2).unwrap(),
            identity_channel(2).unwrap(),
        ] {
            let r = closed_form_result(&ch).unwrap();
            assert!((objective(&ch, &r.optimal_v).unwrap() - r.cos_value).abs() < 1e-12);
        }
    }
}
