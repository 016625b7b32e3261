//! Gauss-Jacobi rules on `[0, 1]` and their tensor products on the unit cube.
//!
//! Nodes start from the Golub-Welsch eigenvalues of the Jacobi matrix and are
//! polished by Newton's method on the three-term recurrence; weights come from
//! the closed form in terms of `P_n'` and `P_{n-1}`, which keeps small weights
//! accurate to full relative precision.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gamma::ln_gamma_real;

/// Rule for `int_0^1 s^p (1-s)^q f(s) ds ~ sum_k w_k f(s_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiRule {
    pub p: f64,
    pub q: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `P_n^{(a,b)}`, `P_{n-1}^{(a,b)}` and `P_n^{(a,b)}'` at `x = u - 1`.
///
/// Everything is written in terms of `u = 1 + x` so that nodes close to
/// `x = -1` keep full relative precision.
fn jacobi_eval(n: usize, a: f64, b: f64, u: f64) -> (f64, f64, f64) {
    let ab = a + b;
    let mut p1 = -(1.0 + b) + (1.0 + 0.5 * ab) * u;
    let mut p2 = 1.0;
    let mut temp = 2.0 + ab;
    for j in 2..=n {
        let j = j as f64;
        let p3 = p2;
        p2 = p1;
        temp = 2.0 * j + ab;
        let tt = temp * (temp - 2.0);
        let c1 = 2.0 * j * (j + ab) * (temp - 2.0);
        let c2 = (temp - 1.0) * (a * a - b * b - tt + tt * u);
        let c3 = 2.0 * (j - 1.0 + a) * (j - 1.0 + b) * temp;
        p1 = (c2 * p2 - c3 * p3) / c1;
    }
    let nf = n as f64;
    let dp = (nf * (a - b + temp - temp * u) * p1 + 2.0 * (nf + a) * (nf + b) * p2) / (temp * (2.0 - u) * u);
    (p1, p2, dp)
}

/// Golub-Welsch node estimates on `[-1, 1]` for weight `(1-x)^a (1+x)^b`.
fn golub_welsch(n: usize, a: f64, b: f64) -> Vec<f64> {
    let ab = a + b;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jm[(k, k)] = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab)
                    / ((2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0))
            };
            jm[(k, k + 1)] = beta.sqrt();
            jm[(k + 1, k)] = beta.sqrt();
        }
    }
    let mut x: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().copied().collect();
    x.sort_by(|u, v| u.partial_cmp(v).unwrap());
    x
}

impl JacobiRule {
    /// `n`-point rule with weight `s^p (1-s)^q`, `p, q > -1`.
    pub fn new(n: usize, p: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch("quadrature needs at least one node".into()));
        }
        for (axis, e) in [(0, p), (1, q)] {
            if !(e > -1.0) || !e.is_finite() {
                return Err(Error::NonIntegrableExponent { axis, exponent: format!("{e}") });
            }
        }
        // on [-1, 1]: (1-x)^a (1+x)^b with s = (1+x)/2
        let (a, b) = (q, p);
        let ab = a + b;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        // Gamma(a+n) Gamma(b+n) / (n! Gamma(n+a+b+1)) by upward recurrence from n = 1
        let mut norm = (ln_gamma_real(a + 1.0) + ln_gamma_real(b + 1.0) - ln_gamma_real(ab + 2.0)).exp();
        for k in 1..n {
            let k = k as f64;
            norm *= (a + k) * (b + k) / ((k + 1.0) * (k + ab + 1.0));
        }
        let temp = 2.0 * n as f64 + ab;
        // Newton in u = 1 + x on the left half; the right half uses the mirror
        // symmetry P^{(a,b)}(-x) = (-1)^n P^{(b,a)}(x)
        let polish = |mut u: f64, a: f64, b: f64| -> (f64, f64) {
            let mut last = jacobi_eval(n, a, b, u);
            for _ in 0..10 {
                let du = last.0 / last.2;
                u -= du;
                last = jacobi_eval(n, a, b, u);
                if du.abs() <= 1e-17 * u {
                    break;
                }
            }
            (u, norm * temp / (2.0 * last.2 * last.1))
        };
        for x in golub_welsch(n, a, b) {
            if x < 0.0 {
                let (u, w) = polish(1.0 + x, a, b);
                nodes.push(0.5 * u);
                weights.push(w);
            } else {
                let (v, w) = polish(1.0 - x, b, a);
                nodes.push(1.0 - 0.5 * v);
                weights.push(w);
            }
        }
        Ok(JacobiRule { p, q, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&s, &w)| w * f(s)).sum()
    }
}

/// Tensor-product rule over `[0,1]^d`; evaluations are spread over threads
/// along the first axis.
pub fn tensor_integrate<F>(rules: &[JacobiRule], f: F) -> Complex64
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if rules.is_empty() {
        return f(&[]);
    }
    let d = rules.len();
    let first = &rules[0];
    (0..first.len())
        .into_par_iter()
        .map(|k0| {
            let mut point = vec![0.0; d];
            point[0] = first.nodes[k0];
            let mut idx = vec![0usize; d];
            let mut acc = Complex64::new(0.0, 0.0);
            loop {
                let mut w = first.weights[k0];
                for a in 1..d {
                    point[a] = rules[a].nodes[idx[a]];
                    w *= rules[a].weights[idx[a]];
                }
                acc += w * f(&point);
                // advance the odometer over axes 1..d
                let mut a = 1;
                loop {
                    if a == d {
                        return acc;
                    }
                    idx[a] += 1;
                    if idx[a] < rules[a].len() {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
            }
        })
        .sum()
}

/// Quadrature result with the doubling error estimate `|Q_n - Q_{2n}|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureValue {
    pub value: Complex64,
    pub error_estimate: f64,
    pub nodes_per_axis: usize,
}

/// Integrate `prod_k s_k^{p_k} (1-s_k)^{q_k} f(s)` over the unit cube with `n`
/// nodes per axis. The error estimate compares against the `2n`-node rule.
pub fn cube_integral<F>(exponents: &[(f64, f64)], n: usize, f: F) -> Result<QuadratureValue>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let rules = |m: usize| -> Result<Vec<JacobiRule>> {
        exponents
            .iter()
            .enumerate()
            .map(|(axis, &(p, q))| {
                JacobiRule::new(m, p, q).map_err(|e| match e {
                    Error::NonIntegrableExponent { exponent, .. } => Error::NonIntegrableExponent { axis, exponent },
                    e => e,
                })
            })
            .collect()
    };
    let coarse = tensor_integrate(&rules(n)?, &f);
    let fine = tensor_integrate(&rules(2 * n)?, &f);
    Ok(QuadratureValue { value: coarse, error_estimate: (fine - coarse).norm(), nodes_per_axis: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::beta_real;
    use proptest::prelude::*;

    #[test]
    fn weights_integrate_beta() {
        for &(p, q) in &[(0.0, 0.0), (-0.5, -0.5), (0.3, -0.7), (-0.95, 2.5), (4.0, 0.25)] {
            let rule = JacobiRule::new(48, p, q).unwrap();
            let total: f64 = rule.weights.iter().sum();
            let exact = beta_real(p + 1.0, q + 1.0);
            // strongly singular weights (p near -1) put most of the mass on the
            // first node, whose location is conditioned at about 1e-12
            assert!((total - exact).abs() <= 1e-11 * exact, "p={p} q={q}: {total} vs {exact}");
            assert!(rule.nodes.iter().all(|&s| s > 0.0 && s < 1.0));
            assert!(rule.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let rule = JacobiRule::new(6, 0.4, -0.3).unwrap();
        // int s^{p+k}(1-s)^q = B(p+k+1, q+1), exact up to degree 2n-1 = 11
        for k in 0..12 {
            let v = rule.integrate(|s| Complex64::new(s.powi(k), 0.0)).re;
            let exact = beta_real(0.4 + k as f64 + 1.0, 0.7);
            assert!((v - exact).abs() <= 1e-12 * exact, "degree {k}");
        }
    }

    #[test]
    fn single_node_rule() {
        let rule = JacobiRule::new(1, 1.0, 1.0).unwrap();
        assert!((rule.nodes[0] - 0.5).abs() < 1e-15);
        assert!((rule.weights[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_divergent_exponents() {
        assert!(matches!(JacobiRule::new(8, -1.0, 0.0), Err(Error::NonIntegrableExponent { axis: 0, .. })));
        let e = cube_integral(&[(0.0, 0.0), (0.5, -1.2)], 8, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(e, Err(Error::NonIntegrableExponent { axis: 1, .. })));
    }

    #[test]
    fn tensor_product_separable() {
        let ex = [(0.5, -0.25), (-0.5, 1.5), (0.0, 0.0)];
        let q = cube_integral(&ex, 16, |s| Complex64::new(1.0 + s[0] * s[1] * s[2], 0.0)).unwrap();
        let b = |p: f64, q: f64| beta_real(p + 1.0, q + 1.0);
        let exact = b(0.5, -0.25) * b(-0.5, 1.5) * b(0.0, 0.0) + b(1.5, -0.25) * b(0.5, 1.5) * b(1.0, 0.0);
        assert!((q.value.re - exact).abs() < 1e-12);
        assert!(q.error_estimate < 1e-12);
    }

    #[test]
    fn analytic_smooth_factor_converges() {
        // int_0^1 s^{-1/2} (1 - 0.3 s)^{-1/2} ds = 2 asin(sqrt(0.3))/sqrt(0.3)
        let q = cube_integral(&[(-0.5, 0.0)], 24, |s| Complex64::new((1.0 - 0.3 * s[0]).powf(-0.5), 0.0)).unwrap();
        let exact = 2.0 * 0.3f64.sqrt().asin() / 0.3f64.sqrt();
        assert!((q.value.re - exact).abs() < 1e-12);
        assert!(q.error_estimate < 1e-12);
    }

    proptest! {
        #[test]
        fn beta_identity(p in -0.9f64..3.0, q in -0.9f64..3.0, k in 0i32..10) {
            let rule = JacobiRule::new(12, p, q).unwrap();
            let v = rule.integrate(|s| Complex64::new(s.powi(k), 0.0)).re;
            let exact = beta_real(p + k as f64 + 1.0, q + 1.0);
            prop_assert!((v - exact).abs() <= 1e-12 * exact);
        }
    }
}
