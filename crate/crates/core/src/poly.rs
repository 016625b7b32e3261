//! Sparse multivariate polynomials with complex coefficients, enough to
//! expand the Hamiltonians and differentiate them exactly.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// `sum_k c_k x^{m_k}`; monomials are exponent vectors of length `nvars`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, k: usize) -> Self {
        let mut m = vec![0; nvars];
        m[k] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(m, Complex64::new(1.0, 0.0));
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Complex64)> {
        self.terms.iter().map(|(m, c)| (m.as_slice(), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Vec<u32>, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry(m).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        // drop exact cancellations so degrees stay honest
        self.terms.retain(|_, v| *v != Complex64::new(0.0, 0.0));
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    /// Partial derivative with respect to variable `k`.
    pub fn diff(&self, k: usize) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (m, v) in &self.terms {
            if m[k] > 0 {
                let mut d = m.clone();
                d[k] -= 1;
                out.add_term(d, v * f64::from(m[k]));
            }
        }
        out
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, v)| m.iter().zip(x).fold(*v, |acc, (&e, xi)| if e == 0 { acc } else { acc * xi.powu(e) }))
            .sum()
    }

    /// Total degree (`0` for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|m| m[k]).max().unwrap_or(0)
    }

    /// Largest coefficient modulus.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, v) in &rhs.terms {
            out.add_term(m.clone(), *v);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (a, u) in &self.terms {
            for (b, v) in &rhs.terms {
                let m: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *acc.entry(m).or_insert(Complex64::new(0.0, 0.0)) += u * v;
            }
        }
        acc.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Poly { nvars: self.nvars, terms: acc }
    }
}
