//! Parameter tuples `(alpha, beta, gamma)` of `F_{L,N}`, the exponent symbols
//! derived from them, and the affine reparameterizations between them.
//!
//! Index conventions used across the crate: coordinate indices `i, j`
//! (ranging over the variables `x_1..x_N`) are **0-based**; level indices
//! `n, k` keep their mathematical numbering `1..=L-1`, because level `0` is
//! meaningful (`y_0`, `zeta_0`, `e_0`, `kappa_0`).

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet<S> {
    l: usize,
    n: usize,
    alpha: Vec<S>,
    beta: Vec<S>,
    gamma: Vec<S>,
}

/// Validate and build a parameter set.
pub fn validate_parameters<S: Scalar>(
    l: usize,
    n: usize,
    alpha: Vec<S>,
    beta: Vec<S>,
    gamma: Vec<S>,
) -> Result<ParameterSet<S>> {
    ParameterSet::new(l, n, alpha, beta, gamma)
}

impl<S: Scalar> ParameterSet<S> {
    /// `alpha` and `gamma` have length `L-1`, `beta` length `N`.
    ///
    /// `gamma_n` must avoid the non-positive integers **including zero**: the
    /// series denominator `(gamma)_{|m|}` vanishes there.
    pub fn new(l: usize, n: usize, alpha: Vec<S>, beta: Vec<S>, gamma: Vec<S>) -> Result<Self> {
        if l < 2 || n < 1 {
            return Err(Error::DimensionMismatch(format!("need L >= 2 and N >= 1, got L={l}, N={n}")));
        }
        if alpha.len() != l - 1 || gamma.len() != l - 1 || beta.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected lengths (alpha, beta, gamma) = ({}, {}, {}), got ({}, {}, {})",
                l - 1,
                n,
                l - 1,
                alpha.len(),
                beta.len(),
                gamma.len()
            )));
        }
        if let Some(k) = gamma.iter().position(|g| g.nonpositive_integer().is_some()) {
            return Err(Error::GammaNonPositiveInteger(k + 1));
        }
        Ok(ParameterSet { l, n, alpha, beta, gamma })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rank `N(L-1)+1` of the Pfaffian system.
    pub fn rank(&self) -> usize {
        self.n * (self.l - 1) + 1
    }

    pub fn alpha(&self) -> &[S] {
        &self.alpha
    }

    pub fn beta(&self) -> &[S] {
        &self.beta
    }

    pub fn gamma(&self) -> &[S] {
        &self.gamma
    }

    /// `alpha_k` for `k = 1..=L-1`.
    pub fn alpha_at(&self, k: usize) -> S {
        self.alpha[k - 1].clone()
    }

    /// `gamma_k` for `k = 1..=L`, with `gamma_L = 1`.
    pub fn gamma_at(&self, k: usize) -> S {
        if k == self.l {
            S::one()
        } else {
            self.gamma[k - 1].clone()
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> ParameterSet<T> {
        ParameterSet {
            l: self.l,
            n: self.n,
            alpha: self.alpha.iter().map(&f).collect(),
            beta: self.beta.iter().map(&f).collect(),
            gamma: self.gamma.iter().map(&f).collect(),
        }
    }

    pub fn to_complex(&self) -> ParameterSet<Complex64> {
        self.map(Scalar::to_complex)
    }

    /// Copy with selected entries shifted; used for the contiguous series of
    /// the holomorphic solution vector. Shifts are `(alpha, beta, gamma)`.
    pub(crate) fn shifted(&self, da: &[i64], db: &[i64], dg: &[i64]) -> Result<Self> {
        let add = |v: &[S], d: &[i64]| -> Vec<S> {
            v.iter().zip(d).map(|(x, &s)| x.clone() + S::from_i64(s)).collect()
        };
        ParameterSet::new(self.l, self.n, add(&self.alpha, da), add(&self.beta, db), add(&self.gamma, dg))
    }

    /// Derived exponent symbols `zeta, eta, theta, a, b`.
    pub fn derived(&self) -> DerivedSymbols<S> {
        derive_symbols(self)
    }

    /// Extended `alpha_k` for `N = 1`: `alpha_0 = beta`, `alpha_{k+L} = alpha_k + 1`.
    fn alpha_ext(&self, k: usize) -> S {
        let (q, r) = (k / self.l, k % self.l);
        let base = if r == 0 { self.beta[0].clone() } else { self.alpha[r - 1].clone() };
        base + S::from_i64(q as i64)
    }

    /// Extended `gamma_k` for `N = 1`: `gamma_0 = 0`, `gamma_{k+L} = gamma_k + 1`.
    fn gamma_ext(&self, k: usize) -> S {
        let (q, r) = (k / self.l, k % self.l);
        let base = if r == 0 { S::zero() } else { self.gamma[r - 1].clone() };
        base + S::from_i64(q as i64)
    }

    /// The parameter transformation induced by the cyclic rotation of the
    /// Thomae system (`N = 1`):
    /// `alpha_k -> alpha_{k+n} - gamma_n`, `beta -> alpha_n - gamma_n`,
    /// `gamma_k -> gamma_{k+n} - gamma_n`, with extended indices.
    pub fn cyclic_shift(&self, n: usize) -> Result<Self> {
        if self.n != 1 {
            return Err(Error::NotThomaeCase(self.n));
        }
        if n >= self.l {
            return Err(Error::ShiftOutOfRange { n, max: self.l - 1 });
        }
        let gn = self.gamma_ext(n);
        let alpha = (1..self.l).map(|k| self.alpha_ext(k + n) - gn.clone()).collect();
        let gamma = (1..self.l).map(|k| self.gamma_ext(k + n) - gn.clone()).collect();
        let beta = vec![self.alpha_ext(n) - gn.clone()];
        ParameterSet::new(self.l, 1, alpha, beta, gamma)
    }

    /// Isomonodromic parameters `(e, kappa, theta)` with
    /// `alpha_n = e_n - e_0`, `beta_i = -theta_i`, `gamma_n = e_n - e_0 - kappa_n`,
    /// the gauge `sum e_n = (L-1)/2`, `kappa_0 = sum_i theta_i` and `theta_0`
    /// fixed by the Fuchsian relation.
    pub fn to_isomonodromic(&self) -> IsoParams<S> {
        let l = self.l;
        let sum_alpha = self.alpha.iter().fold(S::zero(), |acc, a| acc + a.clone());
        let half = S::from_ratio(l as i64 - 1, 2);
        let e0 = (half - sum_alpha) / S::from_i64(l as i64);
        let mut e = vec![e0.clone()];
        e.extend(self.alpha.iter().map(|a| e0.clone() + a.clone()));

        let theta_i: Vec<S> = self.beta.iter().map(|b| -b.clone()).collect();
        let sum_theta = theta_i.iter().fold(S::zero(), |acc, t| acc + t.clone());
        let mut kappa = vec![sum_theta];
        kappa.extend(self.alpha.iter().zip(&self.gamma).map(|(a, g)| a.clone() - g.clone()));

        let sum_kappa_pos = kappa[1..].iter().fold(S::zero(), |acc, k| acc + k.clone());
        let mut theta = vec![sum_kappa_pos];
        theta.extend(theta_i);
        IsoParams { e, kappa, theta }
    }

    /// Inverse of [`ParameterSet::to_isomonodromic`] (modulo the e-gauge).
    pub fn from_isomonodromic(iso: &IsoParams<S>) -> Result<Self> {
        let l = iso.e.len();
        let n = iso.theta.len() - 1;
        let alpha = (1..l).map(|k| iso.e[k].clone() - iso.e[0].clone()).collect();
        let gamma = (1..l)
            .map(|k| iso.e[k].clone() - iso.e[0].clone() - iso.kappa[k].clone())
            .collect();
        let beta = iso.theta[1..].iter().map(|t| -t.clone()).collect();
        ParameterSet::new(l, n, alpha, beta, gamma)
    }
}

impl ParameterSet<Rational> {
    pub fn from_ratios(
        l: usize,
        n: usize,
        alpha: &[(i64, i64)],
        beta: &[(i64, i64)],
        gamma: &[(i64, i64)],
    ) -> Result<Self> {
        let conv = |v: &[(i64, i64)]| v.iter().map(|&(p, q)| Rational::from_ratio(p, q)).collect();
        ParameterSet::new(l, n, conv(alpha), conv(beta), conv(gamma))
    }
}

impl ParameterSet<Complex64> {
    pub fn from_reals(l: usize, n: usize, alpha: &[f64], beta: &[f64], gamma: &[f64]) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        ParameterSet::new(l, n, conv(alpha), conv(beta), conv(gamma))
    }

    /// True when all parameters have vanishing imaginary part.
    pub fn is_real(&self) -> bool {
        self.alpha.iter().chain(&self.beta).chain(&self.gamma).all(|z| z.im == 0.0)
    }
}

/// The exponent symbols attached to a parameter set.
///
/// `zeta_k = alpha_k - gamma_{k+1}` (with `gamma_L = 1`), `eta_k = gamma_k - alpha_k`,
/// `theta_i = -beta_i`, `a_n = alpha_n - gamma_n`,
/// `b_{i,n} = sum_{j != i} beta_j - gamma_n`, `alpha_0 = sum_i beta_i` and
/// `zeta_0 = -1 - sum_k (zeta_k + eta_k) - sum_i theta_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedSymbols<S> {
    zeta: Vec<S>,
    eta: Vec<S>,
    theta: Vec<S>,
    a: Vec<S>,
    b: Vec<Vec<S>>,
    alpha0: S,
}

pub fn derive_symbols<S: Scalar>(p: &ParameterSet<S>) -> DerivedSymbols<S> {
    let l = p.l;
    let zeta_pos: Vec<S> = (1..l).map(|k| p.alpha_at(k) - p.gamma_at(k + 1)).collect();
    let eta: Vec<S> = (1..l).map(|k| p.gamma_at(k) - p.alpha_at(k)).collect();
    let theta: Vec<S> = p.beta.iter().map(|b| -b.clone()).collect();
    let sum = |v: &[S]| v.iter().fold(S::zero(), |acc, x| acc + x.clone());
    let zeta0 = -S::one() - sum(&zeta_pos) - sum(&eta) - sum(&theta);
    let mut zeta = vec![zeta0];
    zeta.extend(zeta_pos);
    let a = (1..l).map(|k| p.alpha_at(k) - p.gamma_at(k)).collect();
    let beta_sum = sum(&p.beta);
    let b = (0..p.n)
        .map(|i| {
            let others = beta_sum.clone() - p.beta[i].clone();
            (1..l).map(|k| others.clone() - p.gamma_at(k)).collect()
        })
        .collect();
    DerivedSymbols { zeta, eta, theta, a, b, alpha0: beta_sum }
}

impl<S: Scalar> DerivedSymbols<S> {
    /// `zeta_k`, `k = 0..=L-1`.
    pub fn zeta(&self, k: usize) -> S {
        self.zeta[k].clone()
    }

    /// `eta_k`, `k = 1..=L-1`.
    pub fn eta(&self, k: usize) -> S {
        self.eta[k - 1].clone()
    }

    /// `theta_i` for coordinate `i` (0-based).
    pub fn theta(&self, i: usize) -> S {
        self.theta[i].clone()
    }

    /// `a_n`, `n = 1..=L-1`.
    pub fn a(&self, n: usize) -> S {
        self.a[n - 1].clone()
    }

    /// `b_{i,n}` for coordinate `i` (0-based), `n = 1..=L-1`.
    pub fn b(&self, i: usize, n: usize) -> S {
        self.b[i][n - 1].clone()
    }

    pub fn alpha0(&self) -> S {
        self.alpha0.clone()
    }
}

/// Parameters `(e, kappa, theta)` of the isomonodromic side.
///
/// `e[0..L]`, `kappa[0..L]`, `theta[0..=N]`; `theta[i + 1]` belongs to
/// coordinate `i` and `theta[0]` is the exponent attached to `z = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoParams<S> {
    pub e: Vec<S>,
    pub kappa: Vec<S>,
    pub theta: Vec<S>,
}

impl<S: Scalar> IsoParams<S> {
    pub fn l(&self) -> usize {
        self.e.len()
    }

    pub fn n(&self) -> usize {
        self.theta.len() - 1
    }

    /// `sum e_n - (L-1)/2`; zero after normalization.
    pub fn normalization_defect(&self) -> S {
        let s = self.e.iter().fold(S::zero(), |acc, x| acc + x.clone());
        s - S::from_ratio(self.l() as i64 - 1, 2)
    }

    /// `sum kappa_n - sum theta_i`; zero when the Fuchsian relation holds.
    pub fn fuchsian_defect(&self) -> S {
        let k = self.kappa.iter().fold(S::zero(), |acc, x| acc + x.clone());
        let t = self.theta.iter().fold(S::zero(), |acc, x| acc + x.clone());
        k - t
    }

    pub fn to_complex(&self) -> IsoParams<Complex64> {
        let c = |v: &[S]| v.iter().map(Scalar::to_complex).collect();
        IsoParams { e: c(&self.e), kappa: c(&self.kappa), theta: c(&self.theta) }
    }
}

// ---------------------------------------------------------------------------
// JSON

/// One scalar in a parameter document: `[re, im]`, `{"num": p, "den": q}` or a
/// bare real number.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ScalarJson {
    Complex([f64; 2]),
    Rational { num: i64, den: i64 },
    Real(f64),
}

impl ScalarJson {
    pub fn to_complex(&self) -> Complex64 {
        match *self {
            ScalarJson::Complex([re, im]) => Complex64::new(re, im),
            ScalarJson::Rational { num, den } => Complex64::new(num as f64 / den as f64, 0.0),
            ScalarJson::Real(x) => Complex64::new(x, 0.0),
        }
    }

    pub fn to_rational(&self) -> Option<Rational> {
        match *self {
            ScalarJson::Rational { num, den } if den != 0 => Some(Rational::from_ratio(num, den)),
            _ => None,
        }
    }

    fn from_rational(r: &Rational) -> Result<Self> {
        let num = r.numer().to_i64();
        let den = r.denom().to_i64();
        match (num, den) {
            (Some(num), Some(den)) => Ok(ScalarJson::Rational { num, den }),
            _ => Err(Error::Parse(format!("rational {r} does not fit in 64-bit integers"))),
        }
    }
}

/// On-disk parameter document `{"L", "N", "alpha", "beta", "gamma"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamsDoc {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: Vec<ScalarJson>,
    pub beta: Vec<ScalarJson>,
    pub gamma: Vec<ScalarJson>,
}

impl ParamsDoc {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_complex(&self) -> Result<ParameterSet<Complex64>> {
        let c = |v: &[ScalarJson]| v.iter().map(ScalarJson::to_complex).collect();
        ParameterSet::new(self.l, self.n, c(&self.alpha), c(&self.beta), c(&self.gamma))
    }

    /// Exact parameters; `None` when any entry is not given as a rational.
    pub fn to_rational(&self) -> Option<Result<ParameterSet<Rational>>> {
        let c = |v: &[ScalarJson]| v.iter().map(ScalarJson::to_rational).collect::<Option<Vec<_>>>();
        let (a, b, g) = (c(&self.alpha)?, c(&self.beta)?, c(&self.gamma)?);
        Some(ParameterSet::new(self.l, self.n, a, b, g))
    }
}

impl From<&ParameterSet<Complex64>> for ParamsDoc {
    fn from(p: &ParameterSet<Complex64>) -> Self {
        let c = |v: &[Complex64]| v.iter().map(|z| ScalarJson::Complex([z.re, z.im])).collect();
        ParamsDoc { l: p.l, n: p.n, alpha: c(&p.alpha), beta: c(&p.beta), gamma: c(&p.gamma) }
    }
}

impl TryFrom<&ParameterSet<Rational>> for ParamsDoc {
    type Error = Error;
    fn try_from(p: &ParameterSet<Rational>) -> Result<Self> {
        let c = |v: &[Rational]| v.iter().map(ScalarJson::from_rational).collect::<Result<Vec<_>>>();
        Ok(ParamsDoc { l: p.l, n: p.n, alpha: c(&p.alpha)?, beta: c(&p.beta)?, gamma: c(&p.gamma)? })
    }
}

/// Sum helper shared by several modules.
pub(crate) fn sum<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, x| acc + x.clone())
}
