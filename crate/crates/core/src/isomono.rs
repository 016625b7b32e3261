//! The Fuchsian system in `z = 1/x_{N+1}` obtained from `P_{L,N+1}` with
//! `beta_{N+1} = 0`, its Lax pair along `u_i = 1/x_i`, the Hamiltonians of
//! the isomonodromic deformation and the checks tying them to the
//! hypergeometric data.
//!
//! Poles of the Fuchsian system are stored in the order
//! `u_0 = 1, u_1, ..., u_N, u_{N+1} = 0`; coordinates `i = 1..=N` in this
//! module follow that numbering (so `u[i - 1]` is `u_i`).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::params::{IsoParams, ParameterSet};
use crate::pfaffian::block_index;
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::series::holomorphic_solution_vector_auto;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Source of `P_{L,N}` solution values `y(x)` (solution-vector layout).
pub type SolutionFn<'a> = dyn Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync + 'a;

/// The holomorphic solution at the origin, by series.
pub fn series_solution(p: &ParameterSet<Complex64>) -> impl Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync + '_ {
    move |x: &[Complex64]| holomorphic_solution_vector_auto(p, x)
}

#[derive(Clone, Debug, Serialize)]
pub struct FuchsianLax {
    pub l: usize,
    pub n: usize,
    #[serde(skip)]
    pub iso: IsoParams<Complex64>,
    /// `u_1..u_N`.
    pub u: Vec<Complex64>,
    pub h: Complex64,
    /// `b[i - 1][n - 1] = b_n^{(i)}`.
    pub b: Vec<Vec<Complex64>>,
    /// `A'_0..A'_{N+1}`.
    pub a_prime: Vec<Matrix<Complex64>>,
    /// `A_0..A_{N+1}` (empty until [`gauge_to_lax`]).
    pub a: Vec<Matrix<Complex64>>,
}

fn check_points(u: &[Complex64]) -> Result<()> {
    let mut pts = vec![c(1.0), c(0.0)];
    pts.extend_from_slice(u);
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            if (pts[a] - pts[b]).norm() == 0.0 {
                return Err(Error::CoincidentDeformationPoints(format!("{} = {}", pts[a], pts[b])));
            }
        }
    }
    Ok(())
}

fn u_power(iso: &IsoParams<Complex64>, u: &[Complex64]) -> Complex64 {
    u.iter().zip(&iso.theta[1..]).map(|(ui, th)| ui.powc(*th)).product()
}

/// `A'_i` from `(e, kappa, theta)`, the points `u` and a `P_{L,N}` solution
/// value `y` at `x = 1/u`.
pub fn build_fuchsian_prime(iso: &IsoParams<Complex64>, u: &[Complex64], y: &[Complex64]) -> Result<FuchsianLax> {
    let (l, n) = (iso.l(), iso.n());
    if u.len() != n || y.len() != n * (l - 1) + 1 {
        return Err(Error::DimensionMismatch(format!("need {n} points and a length-{} solution", n * (l - 1) + 1)));
    }
    check_points(u)?;
    let pw = u_power(iso, u);
    let h = y[0] * pw;
    let b: Vec<Vec<Complex64>> =
        (0..n).map(|i| (1..l).map(|m| y[block_index(l, i, m)] * iso.theta[i + 1] * pw).collect()).collect();
    let kap = &iso.kappa;
    let mut a_prime = Vec::with_capacity(n + 2);
    a_prime.push(Matrix::from_fn(l, l, |r, col| match (r, col) {
        (0, _) => c(0.0),
        (r, 0) => kap[r] * h,
        (r, _) => -kap[r],
    }));
    for i in 0..n {
        let th = iso.theta[i + 1];
        a_prime.push(Matrix::from_fn(l, l, |r, col| match (r, col) {
            (0, _) => c(0.0),
            (r, 0) => b[i][r - 1],
            (r, col) if r == col => th,
            _ => c(0.0),
        }));
    }
    let e = &iso.e;
    a_prime.push(Matrix::from_fn(l, l, |r, col| match (r, col) {
        (0, _) => c(0.0),
        (r, col) if r == col => e[r] - e[0],
        (r, col) if col > r => kap[r],
        _ => c(0.0),
    }));
    Ok(FuchsianLax { l, n, iso: iso.clone(), u: u.to_vec(), h, b, a_prime, a: Vec::new() })
}

/// `A_0 = A'_0`, `A_i = A'_i - theta_i I`, `A_{N+1} = A'_{N+1} + e_0 I`.
pub fn gauge_to_lax(mut f: FuchsianLax) -> FuchsianLax {
    let (l, n) = (f.l, f.n);
    let id = Matrix::<Complex64>::identity(l);
    let mut a = vec![f.a_prime[0].clone()];
    for i in 1..=n {
        a.push(&f.a_prime[i] - &id.scale(&f.iso.theta[i]));
    }
    a.push(&f.a_prime[n + 1] + &id.scale(&f.iso.e[0]));
    f.a = a;
    f
}

/// Lax data at `u` from a solution source.
pub fn lax_at(iso: &IsoParams<Complex64>, u: &[Complex64], sol: &SolutionFn) -> Result<FuchsianLax> {
    check_points(u)?;
    let x: Vec<Complex64> = u.iter().map(|v| 1.0 / v).collect();
    Ok(gauge_to_lax(build_fuchsian_prime(iso, u, &sol(&x)?)?))
}

impl FuchsianLax {
    /// `[1, u_1, ..., u_N, 0]`.
    pub fn poles(&self) -> Vec<Complex64> {
        let mut v = vec![c(1.0)];
        v.extend_from_slice(&self.u);
        v.push(c(0.0));
        v
    }

    fn check_z(&self, z: Complex64) -> Result<()> {
        if self.poles().iter().any(|p| (p - z).norm() == 0.0) {
            return Err(Error::SingularPoint(format!("{z}")));
        }
        Ok(())
    }

    fn sum_over_poles(&self, mats: &[Matrix<Complex64>], z: Complex64) -> Result<Matrix<Complex64>> {
        self.check_z(z)?;
        let mut out = Matrix::zeros(self.l, self.l);
        for (m, p) in mats.iter().zip(self.poles()) {
            out = &out + &m.scale(&(1.0 / (z - p)));
        }
        Ok(out)
    }

    /// `A'(z)`.
    pub fn a_prime_at(&self, z: Complex64) -> Result<Matrix<Complex64>> {
        self.sum_over_poles(&self.a_prime, z)
    }

    /// `A(z)`.
    pub fn a_at(&self, z: Complex64) -> Result<Matrix<Complex64>> {
        self.sum_over_poles(&self.a, z)
    }

    fn b_parts(&self, i: usize) -> (Matrix<Complex64>, Matrix<Complex64>) {
        let l = self.l;
        let th = self.iso.theta[i];
        let b = &self.b[i - 1];
        let first = Matrix::from_fn(l, l, |r, col| match (r, col) {
            (0, 0) => -th,
            (r, 0) if r > 0 => b[r - 1],
            _ => c(0.0),
        });
        let second = Matrix::from_fn(l, l, |r, col| match (r, col) {
            (r, col) if r == col => -th / l as f64,
            (r, 0) => b[r - 1],
            _ => c(0.0),
        });
        (first, second)
    }

    /// `B_i(z)` for `i = 1..=N`.
    pub fn b_at(&self, i: usize, z: Complex64) -> Result<Matrix<Complex64>> {
        self.check_i(i)?;
        self.check_z(z)?;
        let ui = self.u[i - 1];
        let (m1, m2) = self.b_parts(i);
        Ok(&m1.scale(&(1.0 / (ui - z))) - &m2.scale(&(1.0 / ui)))
    }

    /// `dB_i/dz`, in closed form.
    pub fn db_dz(&self, i: usize, z: Complex64) -> Result<Matrix<Complex64>> {
        self.check_i(i)?;
        self.check_z(z)?;
        let ui = self.u[i - 1];
        let (m1, _) = self.b_parts(i);
        Ok(m1.scale(&(1.0 / ((ui - z) * (ui - z)))))
    }

    fn check_i(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::DimensionMismatch(format!("deformation index {i} not in 1..={}", self.n)));
        }
        Ok(())
    }

    /// Residue of `A` at infinity, `-(A_0 + ... + A_{N+1})`.
    pub fn residue_at_infinity(&self) -> Matrix<Complex64> {
        let mut s = Matrix::zeros(self.l, self.l);
        for m in &self.a {
            s = &s + m;
        }
        s.scale(&c(-1.0))
    }
}

/// Characteristic exponents of the Lax system at `0`, `infinity`, `1` and
/// each `u_i` (in that order).
pub fn lax_riemann_scheme(iso: &IsoParams<Complex64>) -> Vec<Vec<Complex64>> {
    let l = iso.l();
    let mut rows = vec![iso.e.clone(), (0..l).map(|k| iso.kappa[k] - iso.e[k]).collect()];
    let mut at_one = vec![-iso.kappa[1..].iter().sum::<Complex64>()];
    at_one.extend(std::iter::repeat_n(c(0.0), l - 1));
    rows.push(at_one);
    for th in &iso.theta[1..] {
        let mut r = vec![-th];
        r.extend(std::iter::repeat_n(c(0.0), l - 1));
        rows.push(r);
    }
    rows
}

/// Coefficients `A_i = b^{(i)} (c^{(i)})^T` (`i = 0..=N`) and the upper
/// triangular `A_{N+1}` with diagonal `e` and `w_{m,n} = -sum_i b_m^{(i)} c_n^{(i)}`
/// of the general Fuchsian system with the Lax spectral type.
pub fn general_fuchsian(e: &[Complex64], b: &[Vec<Complex64>], cv: &[Vec<Complex64>]) -> Result<Vec<Matrix<Complex64>>> {
    let l = e.len();
    if b.len() != cv.len() || b.iter().chain(cv).any(|v| v.len() != l) {
        return Err(Error::DimensionMismatch("b and c need N+1 rows of length L".into()));
    }
    let mut out: Vec<Matrix<Complex64>> =
        b.iter().zip(cv).map(|(bi, ci)| Matrix::from_fn(l, l, |r, col| bi[r] * ci[col])).collect();
    out.push(Matrix::from_fn(l, l, |r, col| match (r, col) {
        (r, col) if r == col => e[r],
        (r, col) if col > r => -b.iter().zip(cv).map(|(bi, ci)| bi[r] * ci[col]).sum::<Complex64>(),
        _ => c(0.0),
    }));
    Ok(out)
}

/// Canonical coordinates `q_n^{(i)} = c_n^{(i)} / c_n^{(0)}`,
/// `p_n^{(i)} = -b_n^{(i)} c_n^{(0)}` for `i, n >= 1`.
pub fn canonical_coordinates(b: &[Vec<Complex64>], cv: &[Vec<Complex64>]) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let l = cv[0].len();
    let q = (1..cv.len()).map(|i| (1..l).map(|m| cv[i][m] / cv[0][m]).collect()).collect();
    let p = (1..b.len()).map(|i| (1..l).map(|m| -b[i][m] * cv[0][m]).collect()).collect();
    (q, p)
}

/// The `(b, c)` data of the hypergeometric specialization:
/// `b^{(0)} = (0, kappa_n h)`, `b^{(i)} = (-theta_i, b_n^{(i)})`,
/// `c^{(0)} = (1, -1/h, ...)`, `c^{(i)} = (1, 0, ...)`.
pub fn hypergeometric_bc(f: &FuchsianLax) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let l = f.l;
    let mut b = vec![(0..l).map(|m| if m == 0 { c(0.0) } else { f.iso.kappa[m] * f.h }).collect::<Vec<_>>()];
    let mut cv = vec![(0..l).map(|m| if m == 0 { c(1.0) } else { -1.0 / f.h }).collect::<Vec<_>>()];
    for i in 1..=f.n {
        let mut bi = vec![-f.iso.theta[i]];
        bi.extend_from_slice(&f.b[i - 1]);
        b.push(bi);
        cv.push((0..l).map(|m| if m == 0 { c(1.0) } else { c(0.0) }).collect());
    }
    (b, cv)
}

/// `max |dA/du_i - dB_i/dz + [A, B_i]|` at `z`, with `dA/du_i` by central
/// differences of step `step` through the solution source.
pub fn lax_compatibility_residual(
    iso: &IsoParams<Complex64>,
    u: &[Complex64],
    i: usize,
    z: Complex64,
    step: f64,
    sol: &SolutionFn,
) -> Result<f64> {
    let f = lax_at(iso, u, sol)?;
    let mut up = u.to_vec();
    let mut um = u.to_vec();
    f.check_i(i)?;
    up[i - 1] += step;
    um[i - 1] -= step;
    let ap = lax_at(iso, &up, sol)?.a_at(z)?;
    let am = lax_at(iso, &um, sol)?.a_at(z)?;
    let da = (&ap - &am).scale(&c(0.5 / step));
    let a = f.a_at(z)?;
    let bi = f.b_at(i, z)?;
    let r = &(&da - &f.db_dz(i, z)?) + &a.commutator(&bi);
    Ok(r.max_abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2` of successive residual ratios (steps are halved).
    pub orders: Vec<f64>,
}

/// Residuals at `step, step/2, step/4, ...` (`levels` values).
pub fn lax_convergence_study(
    iso: &IsoParams<Complex64>,
    u: &[Complex64],
    i: usize,
    z: Complex64,
    step: f64,
    levels: usize,
    sol: &SolutionFn,
) -> Result<ConvergenceStudy> {
    let steps: Vec<f64> = (0..levels).map(|k| step / f64::from(1u32 << k)).collect();
    let residuals = steps.iter().map(|&h| lax_compatibility_residual(iso, u, i, z, h, sol)).collect::<Result<Vec<_>>>()?;
    let orders = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceStudy { steps, residuals, orders })
}

// ---------------------------------------------------------------------------
// Hamiltonians

/// Variable index of `q_n^{(i)}` (`i = 1..=N`, `n = 1..=L-1`).
pub fn q_var(l: usize, i: usize, n: usize) -> usize {
    (i - 1) * (l - 1) + (n - 1)
}

/// Variable index of `p_n^{(i)}`.
pub fn p_var(l: usize, nn: usize, i: usize, n: usize) -> usize {
    nn * (l - 1) + q_var(l, i, n)
}

/// State of the Hamiltonian system: `q[i - 1][n - 1] = q_n^{(i)}`, same for `p`.
#[derive(Clone, Debug, Serialize)]
pub struct HamState {
    pub x: Vec<Complex64>,
    pub q: Vec<Vec<Complex64>>,
    pub p: Vec<Vec<Complex64>>,
    #[serde(skip)]
    pub iso: IsoParams<Complex64>,
}

impl HamState {
    pub fn variables(&self) -> Vec<Complex64> {
        self.q.iter().flatten().chain(self.p.iter().flatten()).copied().collect()
    }
}

/// `H_1..H_N` as polynomials in `(q, p)` at fixed `x`, with the boundary
/// conventions `q_n^{(0)} = q_0^{(i)} = 1`,
/// `p_n^{(0)} = kappa_n - sum_i q_n^{(i)} p_n^{(i)}`,
/// `p_0^{(i)} = theta_i - sum_n q_n^{(i)} p_n^{(i)}` substituted.
pub fn hamiltonian_polys(iso: &IsoParams<Complex64>, x: &[Complex64]) -> Result<Vec<Poly>> {
    let (l, nn) = (iso.l(), iso.n());
    if x.len() != nn {
        return Err(Error::DimensionMismatch(format!("expected {nn} deformation variables")));
    }
    let nv = 2 * nn * (l - 1);
    let mut xs = vec![c(1.0)];
    xs.extend_from_slice(x);
    for i in 1..=nn {
        if xs[i].norm() == 0.0 {
            return Err(Error::CoincidentDeformationPoints(format!("x{i} = 0")));
        }
        for j in 0..=nn {
            if j != i && (xs[i] - xs[j]).norm() == 0.0 {
                return Err(Error::CoincidentDeformationPoints(format!("x{i} = x{j}")));
            }
        }
    }
    let one = Poly::constant(nv, c(1.0));
    let q = |i: usize, n: usize| if i == 0 || n == 0 { one.clone() } else { Poly::var(nv, q_var(l, i, n)) };
    let p_inner = |i: usize, n: usize| Poly::var(nv, p_var(l, nn, i, n));
    let p = |i: usize, n: usize| -> Poly {
        match (i, n) {
            (0, n) => {
                let mut s = Poly::constant(nv, iso.kappa[n]);
                for k in 1..=nn {
                    let pk = if n == 0 {
                        let mut t = Poly::constant(nv, iso.theta[k]);
                        for m in 1..l {
                            t = &t - &(&q(k, m) * &p_inner(k, m));
                        }
                        t
                    } else {
                        &q(k, n) * &p_inner(k, n)
                    };
                    s = &s - &pk;
                }
                s
            }
            (i, 0) => {
                let mut t = Poly::constant(nv, iso.theta[i]);
                for m in 1..l {
                    t = &t - &(&q(i, m) * &p_inner(i, m));
                }
                t
            }
            (i, n) => p_inner(i, n),
        }
    };
    let mut out = Vec::with_capacity(nn);
    for i in 1..=nn {
        let mut s = Poly::zero(nv);
        for n in 0..l {
            s = &s + &(&q(i, n) * &p(i, n)).scale(iso.e[n]);
        }
        let quad = |j: usize, m: usize, n: usize| &(&q(i, m) * &p(j, m)) * &(&q(j, n) * &p(i, n));
        for j in 0..=nn {
            for m in 0..l {
                for n in m + 1..l {
                    s = &s + &quad(j, m, n);
                }
            }
        }
        for j in (0..=nn).filter(|&j| j != i) {
            let w = xs[j] / (xs[i] - xs[j]);
            // sum_{m,n} factorizes as (sum_m q_m^i p_m^j)(sum_n q_n^j p_n^i)
            let mut left = Poly::zero(nv);
            let mut right = Poly::zero(nv);
            for m in 0..l {
                left = &left + &(&q(i, m) * &p(j, m));
                right = &right + &(&q(j, m) * &p(i, m));
            }
            s = &s + &(&left * &right).scale(w);
        }
        out.push(s.scale(1.0 / xs[i]));
    }
    Ok(out)
}

/// `H_i(x; q, p)` for `i = 1..=N`.
pub fn hamiltonian(st: &HamState, i: usize) -> Result<Complex64> {
    let h = hamiltonian_polys(&st.iso, &st.x)?;
    let poly = h.get(i.wrapping_sub(1)).ok_or_else(|| Error::DimensionMismatch(format!("no Hamiltonian H_{i}")))?;
    Ok(poly.eval(&st.variables()))
}

/// `(dq/dx_j, dp/dx_j) = (dH_j/dp, -dH_j/dq)`, by exact differentiation.
pub fn hamilton_rhs(st: &HamState, j: usize) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
    let (l, nn) = (st.iso.l(), st.iso.n());
    let hs = hamiltonian_polys(&st.iso, &st.x)?;
    let h = hs.get(j.wrapping_sub(1)).ok_or_else(|| Error::DimensionMismatch(format!("no Hamiltonian H_{j}")))?;
    let v = st.variables();
    let dq = (1..=nn).map(|i| (1..l).map(|n| h.diff(p_var(l, nn, i, n)).eval(&v)).collect()).collect();
    let dp = (1..=nn).map(|i| (1..l).map(|n| -h.diff(q_var(l, i, n)).eval(&v)).collect()).collect();
    Ok((dq, dp))
}

#[derive(Clone, Debug, Serialize)]
pub struct ParticularSolutionReport {
    /// `max |dp/dx_j + dH_j/dq|` over the grid, all `j` and components.
    pub hamilton_residual: f64,
    /// `max |dH_j/dp|` on the locus `q = 0` (zero iff `q = 0` is consistent).
    pub q_consistency: f64,
    pub points: usize,
}

/// `p_n^{(i)} = theta_i y_n^{(i)} / y_0` from a solution vector.
pub fn momenta_from_solution(iso: &IsoParams<Complex64>, y: &[Complex64]) -> Vec<Vec<Complex64>> {
    let (l, nn) = (iso.l(), iso.n());
    (0..nn).map(|i| (1..l).map(|m| iso.theta[i + 1] * y[block_index(l, i, m)] / y[0]).collect()).collect()
}

/// Checks that `q = 0`, `p_n^{(i)} = theta_i y_n^{(i)}/y_0` solves the
/// Hamiltonian system at each grid point, with `dp/dx_j` by central
/// differences of step `step`.
pub fn verify_particular_solution(
    p: &ParameterSet<Complex64>,
    xgrid: &[Vec<Complex64>],
    step: f64,
    sol: &SolutionFn,
) -> Result<ParticularSolutionReport> {
    let iso = p.to_isomonodromic();
    let (l, nn) = (p.l(), p.n());
    let per_point = xgrid
        .par_iter()
        .map(|x| -> Result<(f64, f64)> {
            let st = HamState { x: x.clone(), q: vec![vec![c(0.0); l - 1]; nn], p: momenta_from_solution(&iso, &sol(x)?), iso: iso.clone() };
            let mut res: f64 = 0.0;
            let mut cons: f64 = 0.0;
            for j in 1..=nn {
                let (dq, dp) = hamilton_rhs(&st, j)?;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j - 1] += step;
                xm[j - 1] -= step;
                let pp = momenta_from_solution(&iso, &sol(&xp)?);
                let pm = momenta_from_solution(&iso, &sol(&xm)?);
                for i in 0..nn {
                    for n in 0..l - 1 {
                        let fd = (pp[i][n] - pm[i][n]) / (2.0 * step);
                        res = res.max((fd - dp[i][n]).norm());
                        cons = cons.max(dq[i][n].norm());
                    }
                }
            }
            Ok((res, cons))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParticularSolutionReport {
        hamilton_residual: per_point.iter().map(|r| r.0).fold(0.0, f64::max),
        q_consistency: per_point.iter().map(|r| r.1).fold(0.0, f64::max),
        points: xgrid.len(),
    })
}

// ---------------------------------------------------------------------------
// Reduction to P_{L-1,1}

/// Parameters of `P_{L-1,1}`: `alpha_k = kappa_1 - e_1 + e_{k+1}`,
/// `beta = kappa_1`, `gamma_k = kappa_1 - kappa_{k+1} - e_1 + e_{k+1}`.
pub fn reduce_to_thomae<S: Scalar>(iso: &IsoParams<S>) -> Result<ParameterSet<S>> {
    let l = iso.l();
    if l < 3 {
        return Err(Error::RankTooSmall(l));
    }
    let (e, k) = (&iso.e, &iso.kappa);
    let base = k[1].clone() - e[1].clone();
    let alpha = (1..l - 1).map(|j| base.clone() + e[j + 1].clone()).collect();
    let gamma = (1..l - 1).map(|j| base.clone() - k[j + 1].clone() + e[j + 1].clone()).collect();
    ParameterSet::new(l - 1, 1, alpha, vec![k[1].clone()], gamma)
}

/// Residues `(E, F)` in `w = 1/z` of the block `W` of `A'` after the gauge
/// `z^{kappa_1 - e_1 + e_0} prod (z - u_i)^{-theta_i}`, written in the form
/// `dZ/dw = (E/w - F/(1-w)) Z` used by the Pfaffian systems.
///
/// The block only involves `A'_0` and `A'_{N+1}` (the `A'_i` contribute
/// `theta_i I`, removed by the gauge), so no solution data is needed.
pub fn w_system<S: Scalar>(iso: &IsoParams<S>) -> Result<(Matrix<S>, Matrix<S>)> {
    let l = iso.l();
    if l < 3 {
        return Err(Error::RankTooSmall(l));
    }
    let d = l - 1;
    let (e, k) = (&iso.e, &iso.kappa);
    let shift = k[1].clone() - e[1].clone() + e[0].clone();
    // z-residues at 0 and 1 of the gauged block
    let r0 = Matrix::from_fn(d, d, |r, col| {
        let (m, n) = (r + 1, col + 1);
        if m == n {
            e[m].clone() - e[0].clone() + shift.clone()
        } else if n > m {
            k[m].clone()
        } else {
            S::zero()
        }
    });
    let r1 = Matrix::from_fn(d, d, |r, _| -k[r + 1].clone());
    // w = 1/z: R0/z + R1/(z-1) -> -(R0 + R1)/w - R1/(1-w)
    let e_w = (&r0 + &r1).scale(&S::from_i64(-1));
    Ok((e_w, r1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfaffian::{build_system, multiplicities};
    use crate::scalar::rat;

    fn gauss_iso() -> (ParameterSet<Complex64>, IsoParams<Complex64>) {
        let p = ParameterSet::from_reals(2, 1, &[0.3], &[0.45], &[1.7]).unwrap();
        let iso = p.to_isomonodromic();
        (p, iso)
    }

    #[test]
    fn fuchsian_prime_structure() {
        let p = ParameterSet::from_reals(3, 2, &[0.3, 0.6], &[0.45, -0.2], &[1.7, 2.3]).unwrap();
        let iso = p.to_isomonodromic();
        let u = [c(2.5), Complex64::new(-3.0, 1.0)];
        let sol = series_solution(&p);
        let f = lax_at(&iso, &u, &sol).unwrap();
        for (k, m) in f.a_prime.iter().enumerate() {
            assert!(m.row(0).iter().all(|z| z.norm() == 0.0), "first row of A'_{k}");
        }
        for i in 1..=2 {
            assert!((f.a_prime[i].trace() - iso.theta[i] * 2.0).norm() < 1e-14);
            assert!((f.a[i].trace() + iso.theta[i]).norm() < 1e-14);
        }
        let ev = f.a_prime[3].eigenvalues().unwrap();
        let want = [c(0.0), iso.e[1] - iso.e[0], iso.e[2] - iso.e[0]];
        assert!(crate::continuation::multiset_distance(&ev, &want) < 1e-12);
    }

    #[test]
    fn lax_scheme_and_spectral_type() {
        let p = ParameterSet::from_reals(3, 2, &[0.3, 0.6], &[0.45, -0.2], &[1.7, 2.3]).unwrap();
        let iso = p.to_isomonodromic();
        let sol = series_solution(&p);
        let f = lax_at(&iso, &[c(2.5), Complex64::new(-3.0, 1.0)], &sol).unwrap();
        let scheme = lax_riemann_scheme(&iso);
        let n = f.n;
        let mats = [f.a[n + 1].clone(), f.residue_at_infinity(), f.a[0].clone()];
        for (m, want) in mats.iter().zip(&scheme) {
            let ev = m.eigenvalues().unwrap();
            assert!(crate::continuation::multiset_distance(&ev, want) < 1e-9, "{ev:?} vs {want:?}");
        }
        for i in 1..=n {
            let ev = f.a[i].eigenvalues().unwrap();
            assert!(crate::continuation::multiset_distance(&ev, &scheme[2 + i]) < 1e-9);
            let mut mult = multiplicities(&scheme[2 + i]);
            mult.sort_unstable();
            assert_eq!(mult, vec![1, 2]);
        }
        assert_eq!(multiplicities(&scheme[0]), vec![1, 1, 1]);
    }

    #[test]
    fn hypergeometric_specialization_of_general_system() {
        let p = ParameterSet::from_reals(3, 2, &[0.3, 0.6], &[0.45, -0.2], &[1.7, 2.3]).unwrap();
        let iso = p.to_isomonodromic();
        let sol = series_solution(&p);
        let f = lax_at(&iso, &[c(2.5), c(-3.0)], &sol).unwrap();
        let (b, cv) = hypergeometric_bc(&f);
        let g = general_fuchsian(&iso.e, &b, &cv).unwrap();
        for (x, y) in g.iter().zip(&f.a) {
            assert!((x - y).max_abs() < 1e-12 * (1.0 + y.max_abs()));
        }
        let (q, pm) = canonical_coordinates(&b, &cv);
        let y = sol(&[c(1.0 / 2.5), c(-1.0 / 3.0)]).unwrap();
        let want = momenta_from_solution(&iso, &y);
        for i in 0..2 {
            for n in 0..2 {
                assert_eq!(q[i][n], c(0.0));
                assert!((pm[i][n] - want[i][n]).norm() < 1e-12 * want[i][n].norm());
            }
        }
    }

    #[test]
    fn gauss_lax_compatibility() {
        let (p, iso) = gauss_iso();
        let sol = series_solution(&p);
        let z = Complex64::new(0.37, 0.2);
        let r = lax_compatibility_residual(&iso, &[c(2.5)], 1, z, 1e-4, &sol).unwrap();
        assert!(r < 1e-6, "{r:e}");
        let st = lax_convergence_study(&iso, &[c(2.5)], 1, z, 2e-2, 3, &sol).unwrap();
        assert!(st.orders.iter().all(|o| (o - 2.0).abs() < 0.2), "{:?}", st.orders);
    }

    #[test]
    fn lax_compatibility_higher_rank() {
        for (p, u) in [
            (ParameterSet::from_reals(3, 1, &[0.3, 0.6], &[0.45], &[1.7, 2.3]).unwrap(), vec![c(2.5)]),
            (ParameterSet::from_reals(2, 2, &[0.3], &[0.45, -0.2], &[1.7]).unwrap(), vec![c(2.5), c(-3.0)]),
        ] {
            let iso = p.to_isomonodromic();
            let sol = series_solution(&p);
            let z = Complex64::new(0.37, 0.2);
            for i in 1..=p.n() {
                let r = lax_compatibility_residual(&iso, &u, i, z, 1e-4, &sol).unwrap();
                assert!(r < 1e-6, "L={} N={} i={i}: {r:e}", p.l(), p.n());
            }
        }
    }

    #[test]
    fn zero_theta_keeps_compatibility() {
        let p = ParameterSet::from_reals(2, 2, &[0.3], &[0.0, -0.2], &[1.7]).unwrap();
        let iso = p.to_isomonodromic();
        let sol = series_solution(&p);
        let f = lax_at(&iso, &[c(2.5), c(-3.0)], &sol).unwrap();
        let z = Complex64::new(0.37, 0.2);
        let (m1, _) = f.b_parts(1);
        assert!(m1.row(0).iter().all(|v| v.norm() == 0.0));
        let r = lax_compatibility_residual(&iso, &[c(2.5), c(-3.0)], 1, z, 1e-4, &sol).unwrap();
        assert!(r < 1e-6, "{r:e}");
    }

    fn random_state(iso: &IsoParams<Complex64>, x: Vec<Complex64>, seed: u64) -> HamState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (l, nn) = (iso.l(), iso.n());
        let mut draw = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let q = (0..nn).map(|_| (1..l).map(|_| draw()).collect()).collect();
        let p = (0..nn).map(|_| (1..l).map(|_| draw()).collect()).collect();
        HamState { x, q, p, iso: iso.clone() }
    }

    #[test]
    fn painleve_six_structure() {
        let (_, iso) = gauss_iso();
        let (e0, e1, k0, k1, th) = (iso.e[0], iso.e[1], iso.kappa[0], iso.kappa[1], iso.theta[1]);
        for seed in 0..5 {
            let st = random_state(&iso, vec![Complex64::new(0.3, 0.2)], seed);
            let (q, p, x) = (st.q[0][0], st.p[0][0], st.x[0]);
            let qp = q * p;
            let expanded = e0 * (th - qp)
                + e1 * qp
                + (k0 - th + qp) * p
                + (th - qp) * qp
                + ((k0 - th + qp) + q * (k1 - qp)) * (th - qp + p) / (x - 1.0);
            let h = hamiltonian(&st, 1).unwrap();
            assert!((h - expanded / x).norm() < 1e-13 * (1.0 + h.norm()));
        }
        // leading part q(q-1)(q-t)p^2 / (t(t-1)) of the sixth Painleve Hamiltonian
        let t = c(0.3);
        let poly = &hamiltonian_polys(&iso, &[t]).unwrap()[0];
        assert_eq!(poly.degree(), 5);
        assert_eq!(poly.degree_in(p_var(2, 1, 1, 1)), 2);
        assert_eq!(poly.degree_in(q_var(2, 1, 1)), 3);
        let lead = poly.terms().find(|(m, _)| *m == [3, 2]).map(|(_, v)| *v).unwrap();
        assert!((lead - 1.0 / (t * (t - 1.0))).norm() < 1e-14);
    }

    #[test]
    fn hamiltonian_on_q_zero() {
        let p = ParameterSet::from_reals(3, 2, &[0.3, 0.6], &[0.45, -0.2], &[1.7, 2.3]).unwrap();
        let iso = p.to_isomonodromic();
        let x = vec![Complex64::new(0.3, 0.1), c(-0.4)];
        let mut st = random_state(&iso, x.clone(), 7);
        st.q = vec![vec![c(0.0); 2]; 2];
        let p00 = iso.kappa[0] - iso.theta[1] - iso.theta[2];
        let mut xs = vec![c(1.0)];
        xs.extend_from_slice(&x);
        for i in 1..=2 {
            let sp: Complex64 = st.p[i - 1].iter().sum();
            let mut v = iso.e[0] * iso.theta[i] + p00 * sp + p00 * (iso.theta[i] + sp) / (xs[i] - 1.0);
            for j in (1..=2).filter(|&j| j != i) {
                v += xs[j] / (xs[i] - xs[j]) * iso.theta[j] * iso.theta[i];
            }
            let h = hamiltonian(&st, i).unwrap();
            assert!((h - v / xs[i]).norm() < 1e-13 * (1.0 + h.norm()), "H_{i}");
        }
    }

    #[test]
    fn degree_in_each_momentum() {
        let p = ParameterSet::from_reals(3, 2, &[0.3, 0.6], &[0.45, -0.2], &[1.7, 2.3]).unwrap();
        let iso = p.to_isomonodromic();
        for h in hamiltonian_polys(&iso, &[c(0.3), c(-0.4)]).unwrap() {
            for i in 1..=2 {
                for n in 1..=2 {
                    assert!(h.degree_in(p_var(3, 2, i, n)) <= 2);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (l, nn) in [(2usize, 1usize), (2, 2), (3, 1), (3, 2)] {
            for _ in 0..100 {
                let alpha: Vec<f64> = (0..l - 1).map(|_| rng.gen_range(0.1..0.9)).collect();
                let beta: Vec<f64> = (0..nn).map(|_| rng.gen_range(-0.9..0.9)).collect();
                let gamma: Vec<f64> = (0..l - 1).map(|_| rng.gen_range(1.1..2.9)).collect();
                let iso = ParameterSet::from_reals(l, nn, &alpha, &beta, &gamma).unwrap().to_isomonodromic();
                let x: Vec<Complex64> = (0..nn).map(|k| Complex64::new(0.2 + 0.3 * k as f64, 0.1 - 0.5 * k as f64)).collect();
                let st = random_state(&iso, x, rng.gen());
                let hs = hamiltonian_polys(&iso, &st.x).unwrap();
                let v = st.variables();
                let h = 1e-6;
                for (j, poly) in hs.iter().enumerate() {
                    let (dq, dp) = hamilton_rhs(&st, j + 1).unwrap();
                    let exact: Vec<Complex64> = dp.iter().flatten().map(|z| -z).chain(dq.iter().flatten().copied()).collect();
                    for (k, ex) in exact.iter().enumerate() {
                        let mut vp = v.clone();
                        let mut vm = v.clone();
                        vp[k] += h;
                        vm[k] -= h;
                        let fd = (poly.eval(&vp) - poly.eval(&vm)) / (2.0 * h);
                        assert!((fd - ex).norm() < 1e-6 * (1.0 + ex.norm()), "L={l} N={nn} var {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn particular_solution() {
        for (p, grid) in [
            (
                ParameterSet::from_reals(2, 1, &[0.3], &[0.45], &[1.7]).unwrap(),
                vec![vec![c(0.1)], vec![c(0.2)], vec![c(0.3)]],
            ),
            (
                ParameterSet::from_reals(3, 1, &[0.3, 0.6], &[0.45], &[1.7, 2.3]).unwrap(),
                vec![vec![c(0.1)], vec![c(0.3)]],
            ),
            (
                ParameterSet::from_reals(2, 2, &[0.3], &[0.45, -0.2], &[1.7]).unwrap(),
                vec![vec![c(0.2), c(-0.35)], vec![c(0.1), c(0.3)]],
            ),
        ] {
            let sol = series_solution(&p);
            let r = verify_particular_solution(&p, &grid, 1e-4, &sol).unwrap();
            assert!(r.hamilton_residual < 1e-6, "L={} N={}: {:e}", p.l(), p.n(), r.hamilton_residual);
            assert!(r.q_consistency < 1e-8);
        }
    }

    #[test]
    fn reduction_is_exact() {
        for (l, alpha, beta, gamma) in [
            (3usize, vec![rat(1, 3), rat(2, 7)], vec![rat(-1, 5)], vec![rat(3, 2), rat(9, 4)]),
            (4, vec![rat(1, 3), rat(2, 7), rat(5, 11)], vec![rat(2, 9), rat(-3, 5)], vec![rat(3, 2), rat(9, 4), rat(7, 3)]),
        ] {
            let n = beta.len();
            let p = ParameterSet::new(l, n, alpha, beta, gamma).unwrap();
            let iso = p.to_isomonodromic();
            let (e, f) = w_system(&iso).unwrap();
            let red = reduce_to_thomae(&iso).unwrap();
            let sys = build_system(&red);
            assert_eq!(&e, sys.e(0), "E for L={l}");
            assert_eq!(&f, sys.f(0), "F for L={l}");
        }
    }

    #[test]
    fn reduction_parameters() {
        let iso = IsoParams {
            e: vec![rat(-1, 3), rat(1, 6), rat(2, 3)],
            kappa: vec![rat(1, 4), rat(3, 5), rat(-2, 7)],
            theta: vec![rat(11, 35), rat(1, 4)],
        };
        let p = reduce_to_thomae(&iso).unwrap();
        assert_eq!((p.l(), p.n()), (2, 1));
        assert_eq!(p.alpha()[0], rat(3, 5) - rat(1, 6) + rat(2, 3));
        assert_eq!(p.beta()[0], rat(3, 5));
        assert!(matches!(reduce_to_thomae(&IsoParams { e: vec![rat(0, 1); 2], kappa: vec![rat(0, 1); 2], theta: vec![rat(0, 1); 2] }), Err(Error::RankTooSmall(2))));
    }
}
