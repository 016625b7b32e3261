//! The power series `F_{L,N}` and the holomorphic solution vector at `x = 0`.
//!
//! The series is summed by total degree `d = |m|`. The `alpha/gamma` ratio
//! depends only on `d`, and the `beta` part of shell `d` is the degree-`d`
//! coefficient of `prod_i (1 - x_i s)^{-beta_i}`, obtained by convolving the
//! one-variable binomial series. Every term comes from a recurrence; no Gamma
//! function is evaluated per term.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::params::ParameterSet;
use crate::scalar::Scalar;

/// Largest `max |x_i|` accepted by the series evaluators.
pub const POLYDISC_LIMIT: f64 = 0.95;

/// Orders tried by [`eval_series_auto`].
pub const AUTO_ORDERS: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

/// Default relative tolerance on the tail estimate for [`eval_series_auto`].
pub const AUTO_REL_TOL: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub truncation_order: usize,
    /// Heuristic estimate of the dropped tail: the magnitude of the last
    /// shells times the geometric factor `1 / (1 - max|x_i|)`.
    pub tail_bound: f64,
}

/// `(a)_n = a (a+1) ... (a+n-1)`.
pub fn pochhammer<S: Scalar>(a: &S, n: usize) -> S {
    (0..n).fold(S::one(), |acc, k| acc * (a.clone() + S::from_i64(k as i64)))
}

fn check_polydisc(x: &[Complex64]) -> Result<f64> {
    let r = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !r.is_finite() || r > POLYDISC_LIMIT {
        return Err(Error::OutsidePolydisc { max_abs: r, limit: POLYDISC_LIMIT });
    }
    Ok(r)
}

/// Shell sums `T_d`, `d = 0..=order`, so that `F = sum_d T_d`.
fn shells(p: &ParameterSet<Complex64>, x: &[Complex64], order: usize) -> Vec<Complex64> {
    // s[d] = degree-d coefficient of prod_i (1 - x_i s)^{-beta_i}
    let mut s = vec![Complex64::new(0.0, 0.0); order + 1];
    s[0] = Complex64::new(1.0, 0.0);
    let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
    for (b, &xi) in p.beta().iter().zip(x) {
        c[0] = Complex64::new(1.0, 0.0);
        for m in 0..order {
            c[m + 1] = c[m] * (b + m as f64) * xi / (m as f64 + 1.0);
        }
        let mut next = vec![Complex64::new(0.0, 0.0); order + 1];
        for (d, slot) in next.iter_mut().enumerate() {
            *slot = (0..=d).map(|m| c[m] * s[d - m]).sum();
        }
        s = next;
    }
    let mut ratio = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(order + 1);
    for (d, sd) in s.iter().enumerate() {
        out.push(ratio * sd);
        let d = d as f64;
        for (a, g) in p.alpha().iter().zip(p.gamma()) {
            ratio *= (a + d) / (g + d);
        }
    }
    out
}

/// `F_{L,N}(alpha, beta, gamma; x)` truncated at total degree `order`.
///
/// Fails with [`Error::NonConvergent`] when the shells are not shrinking at
/// the cutoff, which signals that `order` is far too small for the requested
/// point (e.g. large parameters).
pub fn eval_series(p: &ParameterSet<Complex64>, x: &[Complex64], order: usize) -> Result<SeriesValue> {
    if x.len() != p.n() {
        return Err(Error::DimensionMismatch(format!("expected {} coordinates, got {}", p.n(), x.len())));
    }
    let r = check_polydisc(x)?;
    let t = shells(p, x, order);
    let value: Complex64 = t.iter().sum();
    let last = t[order].norm().max(if order > 0 { t[order - 1].norm() } else { 0.0 });
    let tail_bound = if r == 0.0 { 0.0 } else { last * r / (1.0 - r) };
    let mid = t[order / 2].norm();
    if !value.is_finite() || !tail_bound.is_finite() || (order >= 8 && last > mid && last > 0.0) {
        return Err(Error::NonConvergent { order, tail_bound });
    }
    Ok(SeriesValue { value, truncation_order: order, tail_bound })
}

/// [`eval_series`] at increasing orders until the tail estimate falls below
/// `rel_tol * |F|`.
pub fn eval_series_auto(p: &ParameterSet<Complex64>, x: &[Complex64], rel_tol: f64) -> Result<SeriesValue> {
    let mut last_err = None;
    for &order in &AUTO_ORDERS {
        match eval_series(p, x, order) {
            Ok(v) if v.tail_bound <= rel_tol * v.value.norm().max(f64::MIN_POSITIVE) => return Ok(v),
            Ok(v) => last_err = Some(Error::NonConvergent { order, tail_bound: v.tail_bound }),
            Err(Error::NonConvergent { .. }) if order < *AUTO_ORDERS.last().unwrap() => continue,
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::NonConvergent { order: *AUTO_ORDERS.last().unwrap(), tail_bound: f64::INFINITY }))
}

/// `c = prod_k Gamma(alpha_k) Gamma(gamma_k - alpha_k) / Gamma(gamma_k)`.
pub fn normalizing_constant(p: &ParameterSet<Complex64>) -> Result<Complex64> {
    let mut c = Complex64::new(1.0, 0.0);
    for (a, g) in p.alpha().iter().zip(p.gamma()) {
        c *= gamma(*a)? * gamma(g - a)? / gamma(*g)?;
    }
    Ok(c)
}

/// Parameters of the contiguous series in component `y_n^{(i)}`:
/// `alpha_1..alpha_{n-1}`, `beta_i` and `gamma_1..gamma_n` raised by one.
fn contiguous(p: &ParameterSet<Complex64>, i: usize, n: usize) -> Result<ParameterSet<Complex64>> {
    let l = p.l();
    let da: Vec<i64> = (1..l).map(|k| i64::from(k < n)).collect();
    let db: Vec<i64> = (0..p.n()).map(|j| i64::from(j == i)).collect();
    let dg: Vec<i64> = (1..l).map(|k| i64::from(k <= n)).collect();
    p.shifted(&da, &db, &dg)
}

/// `alpha_1 ... alpha_{n-1} (alpha_n - gamma_n) / (gamma_1 ... gamma_n)`.
fn component_prefactor(p: &ParameterSet<Complex64>, n: usize) -> Complex64 {
    let mut r = (p.alpha_at(n) - p.gamma_at(n)) / p.gamma_at(n);
    for k in 1..n {
        r *= p.alpha_at(k) / p.gamma_at(k);
    }
    r
}

fn solution_vector_with(
    p: &ParameterSet<Complex64>,
    eval: impl Fn(&ParameterSet<Complex64>) -> Result<SeriesValue>,
) -> Result<Vec<Complex64>> {
    let c = normalizing_constant(p)?;
    let mut y = Vec::with_capacity(p.rank());
    y.push(c * eval(p)?.value);
    for i in 0..p.n() {
        for n in 1..p.l() {
            let q = contiguous(p, i, n)?;
            y.push(component_prefactor(p, n) * c * eval(&q)?.value);
        }
    }
    debug_assert_eq!(y.len(), p.rank());
    Ok(y)
}

/// The solution of the Pfaffian system holomorphic at the origin, ordered
/// `(y_0, y_1^{(1)}, .., y_{L-1}^{(1)}, .., y_{L-1}^{(N)})`.
pub fn holomorphic_solution_vector(p: &ParameterSet<Complex64>, x: &[Complex64], order: usize) -> Result<Vec<Complex64>> {
    solution_vector_with(p, |q| eval_series(q, x, order))
}

/// [`holomorphic_solution_vector`] with automatic truncation order.
pub fn holomorphic_solution_vector_auto(p: &ParameterSet<Complex64>, x: &[Complex64]) -> Result<Vec<Complex64>> {
    solution_vector_with(p, |q| eval_series_auto(q, x, AUTO_REL_TOL))
}
