//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test --test acceptance`. Exits non-zero if any criterion
//! fails; every criterion runs regardless.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::time::Instant;

use qcost::channel::{
    dephasing, depolarizing, pauli_x, pauli_y, projector_family, random_channel, unitary_channel,
};
use qcost::cost::{
    cost, heuristic_upper_bound, hermitian_parts, lower_bound, objective, CoefficientVector,
    CostConfig, Strategy,
};
use qcost::dilation::{choi_dilation, extension_channel, optimal_extension, unitary_max_norm};
use qcost::matops::{hermitian_eig, is_unitary, random_unitary, ComplexMatrix, C64};
use qcost::oracle::{oracle_cost, oracle_fidelity};
use qcost::KrausChannel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_SAMPLES: usize = 100_000;

/// Failures collected while checking one criterion.
#[derive(Default)]
struct Check {
    failures: Vec<String>,
    cases: usize,
}

impl Check {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn solver(strategy: Strategy) -> CostConfig {
    CostConfig::with_strategy(strategy)
}

fn xy_channel() -> KrausChannel {
    KrausChannel::new(vec![
        pauli_x().scale_real(FRAC_1_SQRT_2),
        pauli_y().scale_real(FRAC_1_SQRT_2),
    ])
    .unwrap()
}

fn projector_cases() -> Vec<(usize, usize, KrausChannel)> {
    [(2, 1), (3, 1), (4, 2), (6, 3)]
        .into_iter()
        .map(|(n, r)| (n, r, projector_family(n, r).unwrap()))
        .collect()
}

fn depolarizing_cases() -> Vec<(usize, f64, KrausChannel)> {
    [(2, 0.1), (2, 0.5), (2, 1.0), (3, 0.5), (3, 1.0)]
        .into_iter()
        .map(|(n, p)| (n, p, depolarizing(n, p).unwrap()))
        .collect()
}

fn random_cases() -> Vec<KrausChannel> {
    (0..50u64)
        .map(|i| {
            let n = 2 + (i % 2) as usize;
            let d = 2 + ((i / 2) % 2) as usize;
            random_channel(n, d, 1000 + i).unwrap()
        })
        .collect()
}

fn criterion_1(c: &mut Check) {
    for (n, r, ch) in projector_cases() {
        let expect = (r as f64 / n as f64).sqrt().acos();
        for strategy in [Strategy::Sdp, Strategy::Supergradient] {
            let got = cost(&ch, &solver(strategy)).map(|r| r.angle);
            c.expect(matches!(got, Ok(a) if (a - expect).abs() <= 1e-6), || {
                format!("(n={n}, r={r}) {strategy:?}: {got:?} vs {expect}")
            });
        }
    }
}

fn criterion_2(c: &mut Check) {
    for (n, p, ch) in depolarizing_cases() {
        let nn = (n * n) as f64;
        let alpha = (1.0 - p * (nn - 1.0) / nn).sqrt();
        let expect = alpha.acos();
        for strategy in [Strategy::Auto, Strategy::Sdp, Strategy::Supergradient] {
            let got = cost(&ch, &solver(strategy)).map(|r| r.angle);
            c.expect(matches!(got, Ok(a) if (a - expect).abs() <= 1e-6), || {
                format!("(n={n}, p={p}) {strategy:?}: {got:?} vs {expect}")
            });
        }
    }
    let pi3 = cost(&depolarizing(2, 1.0).unwrap(), &CostConfig::default()).unwrap();
    c.expect((pi3.angle - PI / 3.0).abs() <= 1e-6, || {
        format!("qubit p=1: {} vs pi/3", pi3.angle)
    });
}

fn criterion_3(c: &mut Check) {
    for (i, ch) in random_cases().iter().enumerate() {
        let sdp = cost(ch, &solver(Strategy::Sdp));
        let sg = cost(ch, &solver(Strategy::Supergradient));
        let (sdp, sg) = match (sdp, sg) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                c.expect(false, || format!("case {i}: solver error {a:?} / {b:?}"));
                continue;
            }
        };
        c.expect((sdp.cos_value - sg.cos_value).abs() <= 1e-5, || {
            format!("case {i}: sdp {} vs supergradient {}", sdp.cos_value, sg.cos_value)
        });
        let exact = match cost(ch, &CostConfig::default()) {
            Ok(r) => r.angle,
            Err(e) => {
                c.expect(false, || format!("case {i}: {e}"));
                continue;
            }
        };
        let est = oracle_cost(ch, ORACLE_SAMPLES, i as u64);
        c.expect((est.value - exact).abs() <= 1e-3, || {
            format!("case {i}: oracle {} vs cost {exact}", est.value)
        });
    }
}

fn criterion_4(c: &mut Check) {
    let mut channels: Vec<KrausChannel> = projector_cases().into_iter().map(|t| t.2).collect();
    channels.extend(depolarizing_cases().into_iter().map(|t| t.2));
    channels.extend(random_cases());
    for (i, ch) in channels.iter().enumerate() {
        let angle = cost(ch, &CostConfig::default()).unwrap().angle;
        let (lo, hi) = (lower_bound(ch), heuristic_upper_bound(ch));
        c.expect(lo - 1e-9 <= angle && angle <= hi + 1e-9, || {
            format!("channel {i}: {lo} <= {angle} <= {hi} violated")
        });
    }
    let xy = xy_channel();
    for strategy in [Strategy::Auto, Strategy::Sdp, Strategy::Supergradient] {
        let got = cost(&xy, &solver(strategy)).map(|r| r.angle);
        c.expect(matches!(got, Ok(a) if (a - FRAC_PI_2).abs() <= 1e-6), || {
            format!("XY {strategy:?}: {got:?}")
        });
    }
    c.expect((lower_bound(&xy) - FRAC_PI_2).abs() <= 1e-12, || "XY lower bound".into());
}

fn criterion_5(c: &mut Check) {
    for seed in 0..20u64 {
        let ch = random_channel(2, 2, 2000 + seed).unwrap();
        let exact = cost(&ch, &CostConfig::default()).unwrap().angle.cos();
        let est = oracle_fidelity(&ch, ORACLE_SAMPLES, seed);
        let gap = est.value - exact;
        c.expect((-1e-9..=5e-3).contains(&gap), || {
            format!("seed {seed}: oracle {} vs cos {exact} (gap {gap:e})", est.value)
        });
    }
    for (name, ch, target) in [
        ("dephasing", dephasing(2).unwrap(), FRAC_1_SQRT_2),
        ("depolarizing p=1", depolarizing(2, 1.0).unwrap(), 0.5),
    ] {
        let angle = cost(&ch, &CostConfig::default()).unwrap().angle;
        c.expect((angle.cos() - target).abs() <= 5e-3, || {
            format!("{name}: cos {} vs {target}", angle.cos())
        });
        let est = oracle_fidelity(&ch, ORACLE_SAMPLES, 0);
        c.expect((est.value - target).abs() <= 5e-3, || {
            format!("{name}: oracle {} vs {target}", est.value)
        });
    }
}

fn criterion_6(c: &mut Check) {
    let mut entrywise_failures = 0;
    let mut worst_entrywise: f64 = 0.0;
    for seed in 0..50u64 {
        let n = 2 + (seed % 2) as usize;
        let k = random_channel(n, 2, 3000 + seed).unwrap().op(0).clone();
        let r = match choi_dilation(&k) {
            Ok(r) => r,
            Err(e) => {
                c.expect(false, || format!("seed {seed}: {e}"));
                continue;
            }
        };
        c.expect(is_unitary(&r.u, 1e-9), || format!("seed {seed}: not unitary"));
        let h = &k + &k.adjoint();
        let sum = &r.u + &r.u.adjoint();
        let dev = sum.max_abs_diff(&h.direct_sum(&h));
        worst_entrywise = worst_entrywise.max(dev);
        if dev > 1e-9 {
            entrywise_failures += 1;
        }
        let bound = (hermitian_eig(&h).unwrap().min() / 2.0).clamp(-1.0, 1.0).acos();
        let maxnorm = unitary_max_norm(&r.u).unwrap();
        c.expect((maxnorm - bound).abs() <= 1e-8, || {
            format!("seed {seed}: maxnorm {maxnorm} vs {bound}")
        });
    }
    c.expect(entrywise_failures == 0, || {
        format!(
            "U + U^dagger = (K + K^dagger) (+) (K + K^dagger) fails on {entrywise_failures}/50 \
             blocks (worst {worst_entrywise:.3e}); it forces K K^dagger = K^dagger K"
        )
    });
}

fn criterion_7(c: &mut Check) {
    for seed in 0..20u64 {
        let ch = random_channel(2, 2, 4000 + seed).unwrap();
        let res = cost(&ch, &CostConfig::default()).unwrap();
        let ext = match optimal_extension(&ch, &res) {
            Ok(e) => e,
            Err(e) => {
                c.expect(false, || format!("seed {seed}: {e}"));
                continue;
            }
        };
        c.expect(is_unitary(&ext.u, 1e-9), || format!("seed {seed}: not unitary"));
        let back = extension_channel(&ext.u, 2).unwrap();
        let resid = back.choi().max_abs_diff(&ch.choi());
        c.expect(resid <= 1e-7, || format!("seed {seed}: Choi residual {resid:e}"));
        let maxnorm = unitary_max_norm(&ext.u).unwrap();
        c.expect(maxnorm <= res.angle + 1e-5, || {
            format!("seed {seed}: maxnorm {maxnorm} vs cost {}", res.angle)
        });
    }
}

/// `min_phi maxnorm(e^{i phi} u)` by a grid and golden-section refinement.
fn phase_scan(u: &ComplexMatrix) -> f64 {
    let f = |phi: f64| unitary_max_norm(&u.scale(C64::from_polar(1.0, phi))).unwrap();
    let grid = 3600;
    let h = TAU / grid as f64;
    let best = (0..grid)
        .map(|i| i as f64 * h)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best - h, best + h);
    while hi - lo > 1e-12 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(x1) < f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    f(0.5 * (lo + hi)).min(f(best))
}

fn criterion_8(c: &mut Check) {
    let cfg = CostConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..10u64 {
        let n = 2 + (seed % 2) as usize;
        let d = 2 + (seed % 3) as usize;
        let ch = random_channel(n, d, 5000 + seed).unwrap();
        let base = cost(&ch, &cfg).unwrap().angle;
        let w = random_unitary(d, &mut rng);
        let rotated = cost(&ch.kraus_transform(&w).unwrap(), &cfg).unwrap().angle;
        c.expect((base - rotated).abs() <= 1e-6, || {
            format!("seed {seed}: rotation {base} vs {rotated}")
        });
        let padded = cost(&ch.pad_zero(), &cfg).unwrap().angle;
        c.expect((base - padded).abs() <= 1e-9, || {
            format!("seed {seed}: padding {base} vs {padded}")
        });
    }

    let ball = |d: usize, rng: &mut ChaCha8Rng| {
        let v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let r: f64 = rng.random();
        CoefficientVector::new(v.into_iter().map(|z| z * (r / norm)).collect()).unwrap()
    };
    for seed in 0..200u64 {
        let d = 1 + (seed % 3) as usize;
        let ch = random_channel(2 + (seed % 2) as usize, d, 6000 + seed).unwrap();
        let (v1, v2) = (ball(d, &mut rng), ball(d, &mut rng));
        let mid: Vec<C64> = v1
            .components()
            .iter()
            .zip(v2.components())
            .map(|(a, b)| (a + b) * 0.5)
            .collect();
        let mid = CoefficientVector::new(mid).unwrap();
        let (f1, f2, fm) = (
            objective(&ch, &v1).unwrap(),
            objective(&ch, &v2).unwrap(),
            objective(&ch, &mid).unwrap(),
        );
        c.expect(fm >= f1.min(f2) - 1e-10, || {
            format!("seed {seed}: concavity {fm} < min({f1}, {f2})")
        });
    }

    let h = 1e-6;
    let mut checked = 0;
    for seed in 0..200u64 {
        let ch = random_channel(3, 2, 7000 + seed).unwrap();
        let pencil = hermitian_parts(&ch);
        let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
        let eig = hermitian_eig(&pencil.combine(&x)).unwrap();
        // finite differences need a simple lowest eigenvalue
        if eig.values[1] - eig.values[0] < 1e-3 {
            continue;
        }
        checked += 1;
        let (_, g) = pencil.value_and_supergradient(&x);
        let dir: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
        let at = |s: f64| -> Vec<f64> { x.iter().zip(&dir).map(|(a, b)| a + s * b).collect() };
        let fd = (pencil.value(&at(h)) - pencil.value(&at(-h))) / (2.0 * h);
        let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        c.expect((fd - analytic).abs() <= 1e-5, || {
            format!("seed {seed}: finite difference {fd} vs {analytic}")
        });
        if checked == 50 {
            break;
        }
    }

    let u = ComplexMatrix::from_diag(&[C64::new(1.0, 0.0), C64::i()]);
    let ch = unitary_channel(&u).unwrap();
    let scan = phase_scan(&u);
    let angle = cost(&ch, &cfg).unwrap().angle;
    c.expect((scan - FRAC_PI_4).abs() <= 1e-6, || format!("phase scan {scan} vs pi/4"));
    c.expect((angle - scan).abs() <= 1e-6, || format!("cost {angle} vs phase scan {scan}"));
}

fn main() {
    type Criterion = (usize, &'static str, fn(&mut Check));
    let criteria: [Criterion; 8] = [
        (1, "projector channels, both solvers", criterion_1),
        (2, "qudit depolarizing channels", criterion_2),
        (3, "solvers agree with each other and the sampling oracle", criterion_3),
        (4, "trace lower bound and phase upper bound sandwich the cost", criterion_4),
        (5, "sampled worst-case fidelity matches cos of the cost", criterion_5),
        (6, "two-block dilation identities", criterion_6),
        (7, "optimal extension implements the channel at the cost", criterion_7),
        (8, "invariances, concavity, supergradients, phase scan", criterion_8),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let mut check = Check::default();
        run(&mut check);
        let secs = start.elapsed().as_secs_f64();
        let status = if check.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {id}: {status}  {name}  ({} checks, {} failed, {secs:.1} s)",
            check.cases,
            check.failures.len()
        );
        for f in check.failures.iter().take(5) {
            println!("    {f}");
        }
        if check.failures.len() > 5 {
            println!("    ... {} more", check.failures.len() - 5);
        }
        if !check.failures.is_empty() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
