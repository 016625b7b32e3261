//! End-to-end acceptance checks. Each returns one [`CriterionReport`] with
//! the worst observed value against a fixed tolerance; the integration test
//! `acceptance` and the CLI `selftest` both run [`run_all`].

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::continuation::{local_monodromy, ContinuationOptions};
use crate::error::Result;
use crate::euler::{
    check_general_admissible, connection_residual, euler_integral, fundamental_system_general,
    fundamental_system_thomae, general_cycles, local_factorization_check, simplex_to_cube, solution_vector, Cycle,
    FormRow, ThomaeRep,
};
use crate::isomono::{lax_compatibility_residual, lax_convergence_study, reduce_to_thomae, series_solution, verify_particular_solution, w_system};
use crate::matrix::Matrix;
use crate::params::ParameterSet;
use crate::pfaffian::{build_system, expected_exponents, same_multiset, DivisorId};
use crate::scalar::Rational;
use crate::series::{eval_series_auto, normalizing_constant};

pub const SERIES_INTEGRAL_TOL: f64 = 1e-9;
pub const QUADRATURE_NODES: usize = 48;
pub const FD_STEP: f64 = 1e-5;
pub const FD_RESIDUAL_TOL: f64 = 1e-6;
pub const DET_FLOOR: f64 = 1e-10;
pub const SLOPE_TOL: f64 = 0.02;
pub const DECAY_SLOPE_MIN: f64 = 0.98;
pub const FACTORIZATION_SAMPLES: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const DIAGONAL_EQUIVALENCE_TOL: f64 = 1e-8;
pub const MONODROMY_TOL: f64 = 1e-6;
pub const ODE_TOL: f64 = 1e-10;
pub const LAX_STEP: f64 = 1e-4;
pub const LAX_TOL: f64 = 1e-6;
/// Accepted window for the observed finite-difference order.
pub const ORDER_WINDOW: (f64, f64) = (1.8, 2.2);
pub const HAMILTON_TOL: f64 = 1e-6;
pub const Q_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "[{}] C{:<2} {:<34} observed {:.3e} (tolerance {:.1e}) {:.2}s{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.observed,
            self.tolerance,
            self.seconds,
            if self.detail.is_empty() { String::new() } else { format!("  {}", self.detail) }
        )
    }
}

fn report(id: usize, name: &'static str, start: Instant, outcome: Result<(f64, f64, bool, String)>) -> CriterionReport {
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((observed, tolerance, passed, detail)) => CriterionReport { id, name, observed, tolerance, passed, detail, seconds },
        Err(e) => CriterionReport {
            id,
            name,
            observed: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            detail: format!("error: {e}"),
            seconds,
        },
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_ratio(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> (i64, i64) {
    let den = rng.gen_range(2..=13);
    (rng.gen_range(lo * den..=hi * den), den)
}

/// Random rational parameters with `gamma` away from the non-positive integers.
pub fn random_rational_params(rng: &mut ChaCha8Rng, l: usize, n: usize) -> ParameterSet<Rational> {
    loop {
        let alpha: Vec<_> = (0..l - 1).map(|_| random_ratio(rng, -2, 2)).collect();
        let beta: Vec<_> = (0..n).map(|_| random_ratio(rng, -2, 2)).collect();
        let gamma: Vec<_> = (0..l - 1).map(|_| random_ratio(rng, -2, 3)).collect();
        if let Ok(p) = ParameterSet::from_ratios(l, n, &alpha, &beta, &gamma) {
            return p;
        }
    }
}

/// Random rational point off the singular locus.
pub fn random_rational_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    loop {
        let x: Vec<Rational> = (0..n)
            .map(|_| {
                let (p, q) = random_ratio(rng, -3, 3);
                Rational::new(p.into(), q.into())
            })
            .collect();
        if crate::pfaffian::divisor_at(&x).is_none() {
            return x;
        }
    }
}

fn quantize(v: f64) -> f64 {
    (v * 40.0).round() / 40.0
}

/// Real parameters in the convergence region of the `Delta_0` integral of
/// `phi_0`, with `x` in `0 < x_N < ... < x_1 < 0.7`.
pub fn random_series_draw(rng: &mut ChaCha8Rng, l: usize, n: usize) -> (ParameterSet<Complex64>, Vec<Complex64>) {
    loop {
        let alpha: Vec<f64> = (0..l - 1).map(|_| quantize(rng.gen_range(0.1..0.9))).collect();
        let beta: Vec<f64> = (0..n).map(|_| quantize(rng.gen_range(-0.9..0.9))).collect();
        let gamma: Vec<f64> = (0..l - 1).map(|_| quantize(rng.gen_range(0.2..2.8))).collect();
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.7)).collect();
        x.sort_by(|a, b| b.total_cmp(a));
        if x.windows(2).any(|w| w[0] - w[1] < 0.05) {
            continue;
        }
        let x: Vec<Complex64> = x.into_iter().map(c).collect();
        let Ok(p) = ParameterSet::from_reals(l, n, &alpha, &beta, &gamma) else { continue };
        if simplex_to_cube(&p, FormRow::Phi0, &x).is_ok() {
            return (p, x);
        }
    }
}

/// Real points for the full cyclic fundamental system: `x_1 > 0`, the other
/// coordinates negative and distinct, all of modulus below `0.6`.
pub fn general_chamber_point(n: usize) -> Vec<Complex64> {
    (0..n).map(|i| if i == 0 { c(0.35) } else { c(-0.2 - 0.15 * (i - 1) as f64) }).collect()
}

/// Parameters for which every integrand of the general fundamental system
/// converges at `x` (rejection sampling).
pub fn random_general_draw(rng: &mut ChaCha8Rng, l: usize, n: usize, x: &[Complex64]) -> ParameterSet<Complex64> {
    loop {
        let alpha: Vec<f64> = (0..l - 1).map(|_| quantize(rng.gen_range(0.05..0.95))).collect();
        let beta: Vec<f64> = (0..n).map(|_| quantize(rng.gen_range(-0.95..-0.05))).collect();
        let gamma: Vec<f64> = (0..l - 1).map(|_| quantize(rng.gen_range(0.05..1.95))).collect();
        let Ok(p) = ParameterSet::from_reals(l, n, &alpha, &beta, &gamma) else { continue };
        if check_general_admissible(&p, x).is_ok() {
            return p;
        }
    }
}

/// Parameters admissible for both `N = 1` representations at every `x`.
pub fn random_thomae_draw(rng: &mut ChaCha8Rng, l: usize, xs: &[Complex64]) -> ParameterSet<Complex64> {
    loop {
        let p = random_general_draw(rng, l, 1, &xs[..1]);
        let ok = xs.iter().all(|x| {
            check_general_admissible(&p, &[*x]).is_ok() && fundamental_system_thomae(&p, *x, 4, ThomaeRep::SingleSimplex).is_ok()
        });
        if ok {
            return p;
        }
    }
}

const EXACT_SHAPES: [(usize, usize); 5] = [(2, 1), (2, 2), (3, 1), (3, 2), (4, 2)];
const FLOAT_SHAPES: [(usize, usize); 4] = [(2, 1), (3, 1), (2, 2), (3, 2)];

/// C1: exact Riemann scheme.
pub fn riemann_scheme(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0usize;
        let mut mismatches = 0usize;
        for (l, n) in EXACT_SHAPES {
            for _ in 0..3 {
                let p = random_rational_params(&mut rng, l, n);
                let sys = build_system(&p);
                for i in 0..n {
                    for d in DivisorId::around(i, n) {
                        checked += 1;
                        if !same_multiset(&sys.residue_spectrum(d)?, &expected_exponents(&p, d)) {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
        Ok((mismatches as f64, 0.0, mismatches == 0, format!("{checked} residues, exact")))
    })();
    report(1, "Riemann scheme (exact)", start, outcome)
}

/// C2: exact flatness.
pub fn flatness(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut bad = 0usize;
        let mut checked = 0usize;
        for (l, n) in EXACT_SHAPES {
            let sys = build_system(&random_rational_params(&mut rng, l, n));
            for _ in 0..10 {
                let x = random_rational_point(&mut rng, n);
                checked += 1;
                if !sys.is_flat(&x)? {
                    bad += 1;
                }
            }
        }
        Ok((bad as f64, 0.0, bad == 0, format!("{checked} points, exact-zero curvature")))
    })();
    report(2, "Flatness (exact)", start, outcome)
}

/// C3: series value against the `Delta_0` integral.
pub fn series_integral(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let mut worst: f64 = 0.0;
        let mut draws = 0;
        for (l, n) in FLOAT_SHAPES {
            for _ in 0..20 {
                let (p, x) = random_series_draw(&mut rng, l, n);
                let q = euler_integral(&p, Cycle::Delta0, FormRow::Phi0, &x, QUADRATURE_NODES)?;
                let s = normalizing_constant(&p)? * eval_series_auto(&p, &x, 1e-16)?.value;
                worst = worst.max((q.value - s).norm() / s.norm());
                draws += 1;
            }
        }
        Ok((worst, SERIES_INTEGRAL_TOL, worst <= SERIES_INTEGRAL_TOL, format!("{draws} draws, {QUADRATURE_NODES} nodes")))
    })();
    report(3, "Series-integral identity", start, outcome)
}

fn scaled_det(y: &Matrix<Complex64>) -> f64 {
    let n = y.rows();
    Matrix::from_fn(n, n, |r, k| {
        let m = y.row(r).iter().map(|z| z.norm()).fold(0.0, f64::max);
        y[(r, k)] / m
    })
    .determinant()
    .norm()
}

/// C4: the fundamental systems solve the Pfaffian system.
pub fn fundamental_solves(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        let mut worst: f64 = 0.0;
        let mut min_det = f64::INFINITY;
        for (l, n) in FLOAT_SHAPES {
            let x = general_chamber_point(n);
            let p = if n == 1 { random_thomae_draw(&mut rng, l, &x) } else { random_general_draw(&mut rng, l, n, &x) };
            let fs = fundamental_system_general(&p, &x, QUADRATURE_NODES)?;
            min_det = min_det.min(scaled_det(&fs.y));
            for cycle in general_cycles(l, n) {
                let r = connection_residual(&p, &x, FD_STEP, |xx| Ok(solution_vector(&p, cycle, xx, QUADRATURE_NODES)?.0))?;
                worst = worst.max(r);
            }
            if n == 1 {
                let th = fundamental_system_thomae(&p, x[0], QUADRATURE_NODES, ThomaeRep::SingleSimplex)?;
                min_det = min_det.min(scaled_det(&th.y));
                for col in 0..l {
                    let r = connection_residual(&p, &x, FD_STEP, |xx| {
                        Ok(fundamental_system_thomae(&p, xx[0], QUADRATURE_NODES, ThomaeRep::SingleSimplex)?.y.column(col))
                    })?;
                    worst = worst.max(r);
                }
            }
        }
        let passed = worst <= FD_RESIDUAL_TOL && min_det > DET_FLOOR;
        Ok((worst, FD_RESIDUAL_TOL, passed, format!("min scaled |det Y| = {min_det:.3e}")))
    })();
    report(4, "Fundamental system solves P", start, outcome)
}

/// C5: local behaviour of the cyclic columns as `x_j -> 0`.
pub fn local_behaviour(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
        let mut dev: f64 = 0.0;
        let mut decay = f64::INFINITY;
        for (l, n) in FLOAT_SHAPES {
            let x = general_chamber_point(n);
            let p = random_general_draw(&mut rng, l, n, &x);
            let r = local_factorization_check(&p, &x, &FACTORIZATION_SAMPLES, QUADRATURE_NODES, f64::INFINITY, f64::NEG_INFINITY)?;
            dev = dev.max(r.max_exponent_deviation);
            decay = decay.min(r.min_decay_slope);
        }
        let passed = dev <= SLOPE_TOL && decay >= DECAY_SLOPE_MIN;
        Ok((dev, SLOPE_TOL, passed, format!("min off-pattern slope {decay:.4} (need >= {DECAY_SLOPE_MIN})")))
    })();
    report(5, "Local exponents at x_j = 0", start, outcome)
}

/// C6: the two `N = 1` representations differ by a constant diagonal matrix.
pub fn cross_representation(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(5));
        let mut worst: f64 = 0.0;
        for l in [2usize, 3, 4] {
            let xs = [c(0.3), c(0.45)];
            let p = random_thomae_draw(&mut rng, l, &xs);
            let mut ratios = Vec::new();
            for x in xs {
                let a = fundamental_system_thomae(&p, x, QUADRATURE_NODES, ThomaeRep::SingleSimplex)?;
                let b = fundamental_system_thomae(&p, x, QUADRATURE_NODES, ThomaeRep::CyclicSimplices)?;
                ratios.push(Matrix::from_fn(l, l, |r, k| b.y[(r, k)] / a.y[(r, k)]));
            }
            for k in 0..l {
                let top = ratios[0][(0, k)];
                for r in 0..l {
                    worst = worst.max((ratios[0][(r, k)] - top).norm() / top.norm());
                    worst = worst.max((ratios[1][(r, k)] - ratios[0][(r, k)]).norm() / top.norm());
                }
            }
        }
        Ok((worst, DIAGONAL_EQUIVALENCE_TOL, worst <= DIAGONAL_EQUIVALENCE_TOL, "L = 2, 3, 4".into()))
    })();
    report(6, "Diagonal equivalence (N = 1)", start, outcome)
}

/// C7: local monodromy eigenvalues.
pub fn monodromy(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(6));
        let opts = ContinuationOptions::with_tol(ODE_TOL);
        let mut worst: f64 = 0.0;
        let mut loops = 0;
        for n in [1usize, 2] {
            let alpha = [quantize(rng.gen_range(0.1..0.9))];
            let beta: Vec<f64> = (0..n).map(|_| quantize(rng.gen_range(-0.9..0.9))).collect();
            let gamma = [quantize(rng.gen_range(0.2..1.8))];
            let p = ParameterSet::from_reals(2, n, &alpha, &beta, &gamma)?;
            let sys = build_system(&p);
            let base: Vec<Complex64> =
                [Complex64::new(0.4, 0.2), Complex64::new(-0.3, 0.35)][..n].to_vec();
            for i in 0..n {
                for d in DivisorId::around(i, n) {
                    let lm = local_monodromy(&sys, &base, d, &opts)?;
                    worst = worst.max(lm.deviation);
                    loops += 1;
                }
            }
        }
        Ok((worst, MONODROMY_TOL, worst <= MONODROMY_TOL, format!("{loops} loops at ODE tol {ODE_TOL:e}")))
    })();
    report(7, "Local monodromy eigenvalues", start, outcome)
}

fn iso_cases(rng: &mut ChaCha8Rng) -> Result<Vec<(ParameterSet<Complex64>, Vec<Complex64>)>> {
    let mut out = Vec::new();
    for (l, n) in [(2usize, 1usize), (3, 1), (2, 2)] {
        let alpha: Vec<f64> = (0..l - 1).map(|_| quantize(rng.gen_range(0.1..0.9))).collect();
        let beta: Vec<f64> = (0..n).map(|_| quantize(rng.gen_range(-0.9..0.9))).collect();
        let gamma: Vec<f64> = (0..l - 1).map(|_| quantize(rng.gen_range(1.1..2.9))).collect();
        let u: Vec<Complex64> = [c(2.5), c(-3.0)][..n].to_vec();
        out.push((ParameterSet::from_reals(l, n, &alpha, &beta, &gamma)?, u));
    }
    Ok(out)
}

/// C8: Lax compatibility with second-order step convergence.
pub fn lax_compatibility(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
        let z = Complex64::new(0.37, 0.2);
        let mut worst: f64 = 0.0;
        let mut orders = Vec::new();
        for (p, u) in iso_cases(&mut rng)? {
            let iso = p.to_isomonodromic();
            let sol = series_solution(&p);
            for i in 1..=p.n() {
                worst = worst.max(lax_compatibility_residual(&iso, &u, i, z, LAX_STEP, &sol)?);
                let st = lax_convergence_study(&iso, &u, i, z, 2e-2, 3, &sol)?;
                orders.extend(st.orders);
            }
        }
        let orders_ok = orders.iter().all(|o| (ORDER_WINDOW.0..=ORDER_WINDOW.1).contains(o));
        let (lo, hi) = orders.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &o| (a.min(o), b.max(o)));
        Ok((worst, LAX_TOL, worst <= LAX_TOL && orders_ok, format!("observed orders in [{lo:.3}, {hi:.3}]")))
    })();
    report(8, "Lax compatibility", start, outcome)
}

/// C9: the hypergeometric particular solution of the Hamiltonian system.
pub fn particular_solution(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(8));
        let mut res: f64 = 0.0;
        let mut cons: f64 = 0.0;
        for (p, _) in iso_cases(&mut rng)? {
            let grid: Vec<Vec<Complex64>> = if p.n() == 1 {
                [0.1, 0.2, 0.3].iter().map(|&t| vec![c(t)]).collect()
            } else {
                vec![vec![c(0.2), c(-0.35)], vec![c(0.1), c(0.3)], vec![Complex64::new(0.15, 0.1), c(-0.2)]]
            };
            let sol = series_solution(&p);
            let r = verify_particular_solution(&p, &grid, LAX_STEP, &sol)?;
            res = res.max(r.hamilton_residual);
            cons = cons.max(r.q_consistency);
        }
        let passed = res <= HAMILTON_TOL && cons <= Q_CONSISTENCY_TOL;
        Ok((res, HAMILTON_TOL, passed, format!("max |dH/dp| on q = 0: {cons:.3e} (tolerance {Q_CONSISTENCY_TOL:e})")))
    })();
    report(9, "Hamiltonian particular solution", start, outcome)
}

/// C10: exact reduction of the `W` block to `P_{L-1,1}`.
pub fn reduction(seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(9));
        let mut bad = 0usize;
        let mut checked = 0usize;
        for l in [3usize, 4] {
            for n in [1usize, 2] {
                for _ in 0..5 {
                    let iso = random_rational_params(&mut rng, l, n).to_isomonodromic();
                    let Ok(red) = reduce_to_thomae(&iso) else { continue };
                    let (e, f) = w_system(&iso)?;
                    let sys = build_system(&red);
                    checked += 1;
                    if &e != sys.e(0) || &f != sys.f(0) {
                        bad += 1;
                    }
                }
            }
        }
        Ok((bad as f64, 0.0, bad == 0 && checked > 0, format!("{checked} exact comparisons")))
    })();
    report(10, "Reduction to P_{L-1,1} (exact)", start, outcome)
}

/// All criteria in order.
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    vec![
        riemann_scheme(seed),
        flatness(seed),
        series_integral(seed),
        fundamental_solves(seed),
        local_behaviour(seed),
        cross_representation(seed),
        monodromy(seed),
        lax_compatibility(seed),
        particular_solution(seed),
        reduction(seed),
    ]
}

pub const DEFAULT_SEED: u64 = 20_240_601;
