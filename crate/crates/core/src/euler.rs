//! Euler-type integrals of `U(t) phi` over the simplex `Delta_0` and its
//! cyclic images `Delta_n^{(j)}`, and the fundamental systems built from them.
//!
//! Everything is done in homogeneous coordinates `tau_0..tau_{L-1}`: the
//! integrand is a product of powers of linear forms in `tau` times the Euler
//! form `omega`. A cyclic image `Delta_n^{(j)}` is pulled back to `Delta_0`
//! by `pi_j^{-n}` (`tau_k -> tau_{k-n}`, with `tau_k = x_j tau_{k+L}` for
//! negative indices), then dehomogenized at `tau_0 = 1` and mapped to the
//! unit cube by `t_k = s_1 s_2 ... s_k`. Each linear form then splits into a
//! monomial in `s`, a Jacobi factor `(1 - s_l)` or a factor that does not
//! vanish on the cube, so the integral becomes a tensor Gauss-Jacobi rule.
//!
//! Branches: constants `c^lambda` use the principal logarithm (a real
//! negative `c` gets `arg = +pi`), and powers of `x_j` are collected into a
//! single symbolic prefactor `x_j^E`. Each column of a fundamental system is
//! therefore one fixed branch of the integral, up to a column constant.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::params::ParameterSet;
use crate::pfaffian::{block_index, build_system};
use crate::quadrature::cube_integral;

/// Jacobi exponents must exceed `-1` by this much; closer values are
/// rounding noise around a divergent integral.
pub const EXPONENT_MARGIN: f64 = 1e-9;

/// Default Gauss-Jacobi nodes per cube axis.
pub const DEFAULT_NODES: usize = 48;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Principal logarithm with the sign of a zero imaginary part normalized, so
/// that every negative real number gets argument `+pi`.
pub(crate) fn ln_principal(z: Complex64) -> Complex64 {
    let z = if z.im == 0.0 { Complex64::new(z.re, 0.0) } else { z };
    z.ln()
}

/// `z^lambda` on the principal branch of [`ln_principal`].
pub(crate) fn pow_principal(z: Complex64, lambda: Complex64) -> Complex64 {
    if lambda == c(0.0) {
        return c(1.0);
    }
    (lambda * ln_principal(z)).exp()
}

/// Row of the solution vector: `phi_0`, or `phi_m^{(i)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormRow {
    Phi0,
    Phi { i: usize, m: usize },
}

impl FormRow {
    /// All rows in solution-vector order.
    pub fn all(l: usize, n: usize) -> Vec<FormRow> {
        let mut v = vec![FormRow::Phi0];
        for i in 0..n {
            for m in 1..l {
                v.push(FormRow::Phi { i, m });
            }
        }
        v
    }

    pub fn index(&self, l: usize) -> usize {
        match *self {
            FormRow::Phi0 => 0,
            FormRow::Phi { i, m } => block_index(l, i, m),
        }
    }
}

/// Integration cycle: the simplex or its image under `pi_j^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Cycle {
    Delta0,
    Cyclic { j: usize, n: usize },
}

/// Coefficient `value * x_j^{xj_pow}` of a linear form, with the `x_j`
/// power kept apart so that it can be tracked symbolically.
#[derive(Clone, Copy, Debug, PartialEq)]
struct XCoef {
    value: Complex64,
    xj_pow: i32,
}

impl XCoef {
    const ZERO: XCoef = XCoef { value: Complex64 { re: 0.0, im: 0.0 }, xj_pow: 0 };

    fn plain(value: Complex64) -> Self {
        XCoef { value, xj_pow: 0 }
    }

    fn is_zero(&self) -> bool {
        self.value == c(0.0)
    }
}

/// Factor `(sum_k coef_k tau_k)^exponent`.
#[derive(Clone, Debug)]
struct LinearFactor {
    coef: Vec<XCoef>,
    exponent: Complex64,
}

/// `g(s)^exponent` with `g = 1 + sum_b r_b prod_{lead < l <= b} s_l`; cube
/// axes are numbered `1..=L-1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothFactor {
    pub lead: usize,
    pub terms: Vec<(usize, Complex64)>,
    pub exponent: Complex64,
}

impl SmoothFactor {
    fn base(&self, s: &[f64]) -> Complex64 {
        let mut g = c(1.0);
        let mut prod = 1.0;
        let mut l = self.lead;
        for &(b, r) in &self.terms {
            while l < b {
                l += 1;
                prod *= s[l - 1];
            }
            g += r * prod;
        }
        g
    }

    /// Reject factors whose base meets zero or the branch cut on the cube.
    /// The base is multilinear in `s`, so its real part (and, when all
    /// coefficients are real, the base itself) is extremal at the vertices.
    fn check_admissible(&self, dim: usize) -> Result<()> {
        let real = self.terms.iter().all(|(_, r)| r.im.abs() <= 1e-14 * r.norm());
        let mut worst = f64::INFINITY;
        for mask in 0..(1u32 << dim) {
            let s: Vec<f64> = (0..dim).map(|k| f64::from((mask >> k) & 1)).collect();
            worst = worst.min(self.base(&s).re);
        }
        if worst <= 1e-12 {
            let what = if real { "vanishes" } else { "may cross the branch cut" };
            return Err(Error::InadmissibleChamber(format!(
                "factor with lead {} {what} on the integration domain (min Re = {worst:e})",
                self.lead
            )));
        }
        Ok(())
    }
}

/// The pulled-back integrand on the unit cube:
/// `prefactor * prod_l s_l^{p_l} (1-s_l)^{q_l} * prod smooth`, with
/// `prefactor = constant * x_j^{x_power}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegrandSpec {
    pub dimension: usize,
    /// `(p_l, q_l)` for cube axes `l = 1..=L-1`.
    pub jacobi_exponents: Vec<(Complex64, Complex64)>,
    pub smooth: Vec<SmoothFactor>,
    pub constant: Complex64,
    /// `(j, E)` when the integral carries the factor `x_j^E`.
    pub x_power: Option<(usize, Complex64)>,
    #[serde(skip)]
    x: Vec<Complex64>,
}

impl IntegrandSpec {
    /// `constant * x_j^E`.
    pub fn prefactor(&self) -> Complex64 {
        match self.x_power {
            Some((j, e)) => self.constant * pow_principal(self.x[j], e),
            None => self.constant,
        }
    }

    /// The non-Jacobi part of the integrand at a cube point (includes the
    /// imaginary parts of the Jacobi exponents, if any).
    pub fn smooth_value(&self, s: &[f64]) -> Complex64 {
        let mut v = c(1.0);
        for f in &self.smooth {
            v *= pow_principal(f.base(s), f.exponent);
        }
        for (l, (p, q)) in self.jacobi_exponents.iter().enumerate() {
            if p.im != 0.0 {
                v *= (Complex64::i() * p.im * s[l].ln()).exp();
            }
            if q.im != 0.0 {
                v *= (Complex64::i() * q.im * (1.0 - s[l]).ln()).exp();
            }
        }
        v
    }
}

fn derived_exponents(p: &ParameterSet<Complex64>) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let d = p.derived();
    let zeta = (0..p.l()).map(|k| d.zeta(k)).collect();
    let eta = (1..p.l()).map(|k| d.eta(k)).collect();
    let theta = (0..p.n()).map(|i| d.theta(i)).collect();
    (zeta, eta, theta)
}

/// Homogeneous factors of `V(tau) psi` for one row, plus the sign.
fn homogeneous_factors(p: &ParameterSet<Complex64>, x: &[Complex64], row: FormRow, j: Option<usize>) -> (Vec<LinearFactor>, Complex64) {
    let l = p.l();
    let (zeta, eta, theta) = derived_exponents(p);
    let unit = |k: usize| {
        let mut v = vec![XCoef::ZERO; l];
        v[k] = XCoef::plain(c(1.0));
        v
    };
    let mut out = Vec::new();
    for (k, z) in zeta.iter().enumerate() {
        out.push(LinearFactor { coef: unit(k), exponent: *z });
    }
    let (row_m, row_i) = match row {
        FormRow::Phi0 => (0, None),
        FormRow::Phi { i, m } => (m, Some(i)),
    };
    for k in 1..l {
        let mut v = vec![XCoef::ZERO; l];
        v[k - 1] = XCoef::plain(c(1.0));
        v[k] = XCoef::plain(c(-1.0));
        let e = eta[k - 1] - 1.0 + if k == row_m { 1.0 } else { 0.0 };
        out.push(LinearFactor { coef: v, exponent: e });
    }
    for (i, th) in theta.iter().enumerate() {
        let mut v = vec![XCoef::ZERO; l];
        v[0] = XCoef::plain(c(1.0));
        v[l - 1] = if Some(i) == j { XCoef { value: c(-1.0), xj_pow: 1 } } else { XCoef::plain(-x[i]) };
        let e = th - if Some(i) == row_i { 1.0 } else { 0.0 };
        out.push(LinearFactor { coef: v, exponent: e });
    }
    // psi_m^{(i)} has (x_i tau_{L-1} - tau_0) = -(tau_0 - x_i tau_{L-1}) in the denominator
    let sign = if row_i.is_some() { c(-1.0) } else { c(1.0) };
    (out, sign)
}

/// `tau_k -> tau_{k-n}`, with `tau_{k-n} = x_j tau_{k-n+L}` when `k < n`.
fn pull_back(f: &LinearFactor, n: usize) -> LinearFactor {
    let l = f.coef.len();
    let mut coef = vec![XCoef::ZERO; l];
    for (k, cf) in f.coef.iter().enumerate() {
        if k >= n {
            coef[k - n] = *cf;
        } else {
            coef[k + l - n] = XCoef { value: cf.value, xj_pow: cf.xj_pow + 1 };
        }
    }
    LinearFactor { coef, exponent: f.exponent }
}

fn cube_spec(
    factors: &[LinearFactor],
    mut constant: Complex64,
    mut x_exp: Complex64,
    l: usize,
    x: &[Complex64],
    j: Option<usize>,
) -> Result<IntegrandSpec> {
    let dim = l - 1;
    let mut pq = vec![(c(0.0), c(0.0)); dim];
    // Jacobian of sigma_k = s_1 ... s_k
    for (idx, e) in pq.iter_mut().enumerate() {
        e.0 += (dim - (idx + 1)) as f64;
    }
    let xj = j.map(|j| x[j]);
    let mut smooth = Vec::new();
    for f in factors {
        let lam = f.exponent;
        let Some(a) = f.coef.iter().position(|cf| !cf.is_zero()) else {
            return Err(Error::InadmissibleChamber("identically vanishing linear form".into()));
        };
        let ca = f.coef[a];
        constant *= pow_principal(ca.value, lam);
        x_exp += lam * f64::from(ca.xj_pow);
        for e in pq.iter_mut().take(a) {
            e.0 += lam;
        }
        let others: Vec<usize> = (a + 1..l).filter(|&b| !f.coef[b].is_zero()).collect();
        if others.is_empty() {
            continue;
        }
        let cb = f.coef[a + 1];
        if others == [a + 1] && cb.value == -ca.value && cb.xj_pow == ca.xj_pow {
            pq[a].1 += lam;
            continue;
        }
        let terms = others
            .iter()
            .map(|&b| {
                let cf = f.coef[b];
                let dp = cf.xj_pow - ca.xj_pow;
                let xfac = if dp == 0 { c(1.0) } else { xj.expect("x_j power without cyclic cycle").powi(dp) };
                (b, cf.value / ca.value * xfac)
            })
            .collect();
        let sf = SmoothFactor { lead: a, terms, exponent: lam };
        sf.check_admissible(dim)?;
        smooth.push(sf);
    }
    for (idx, (p, q)) in pq.iter().enumerate() {
        for (e, _) in [(p, 0), (q, 1)] {
            if !(e.re > -1.0 + EXPONENT_MARGIN) {
                return Err(Error::NonIntegrableExponent { axis: idx + 1, exponent: format!("{e}") });
            }
        }
    }
    Ok(IntegrandSpec {
        dimension: dim,
        jacobi_exponents: pq,
        smooth,
        constant,
        x_power: j.map(|j| (j, x_exp)),
        x: x.to_vec(),
    })
}

fn check_x(p: &ParameterSet<Complex64>, x: &[Complex64]) -> Result<()> {
    if x.len() != p.n() {
        return Err(Error::DimensionMismatch(format!("expected {} coordinates, got {}", p.n(), x.len())));
    }
    Ok(())
}

/// `U(t) phi` over `Delta_0` as a cube integrand.
pub fn simplex_to_cube(p: &ParameterSet<Complex64>, row: FormRow, x: &[Complex64]) -> Result<IntegrandSpec> {
    check_x(p, x)?;
    let (factors, sign) = homogeneous_factors(p, x, row, None);
    cube_spec(&factors, sign, c(0.0), p.l(), x, None)
}

/// `U(t) phi` over `Delta_n^{(j)}`, pulled back to `Delta_0` by `pi_j^{-n}`.
pub fn pullback_cyclic(p: &ParameterSet<Complex64>, j: usize, n: usize, row: FormRow, x: &[Complex64]) -> Result<IntegrandSpec> {
    check_x(p, x)?;
    let l = p.l();
    if j >= p.n() || n == 0 || n >= l {
        return Err(Error::ShiftOutOfRange { n, max: l - 1 });
    }
    let (factors, sign) = homogeneous_factors(p, x, row, Some(j));
    let pulled: Vec<LinearFactor> = factors.iter().map(|f| pull_back(f, n)).collect();
    // pi_j^{-n}(omega) = (-1)^{n(L-1)} x_j^n omega
    let det_sign = if (n * (l - 1)) % 2 == 1 { -1.0 } else { 1.0 };
    cube_spec(&pulled, sign * det_sign, c(n as f64), l, x, Some(j))
}

/// Integrand for any cycle.
pub fn integrand(p: &ParameterSet<Complex64>, cycle: Cycle, row: FormRow, x: &[Complex64]) -> Result<IntegrandSpec> {
    match cycle {
        Cycle::Delta0 => simplex_to_cube(p, row, x),
        Cycle::Cyclic { j, n } => pullback_cyclic(p, j, n, row, x),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralValue {
    pub value: Complex64,
    /// `|Q_n - Q_{2n}|` scaled by the prefactor.
    pub error_estimate: f64,
    pub nodes_per_axis: usize,
}

/// Tensor Gauss-Jacobi quadrature of an integrand spec.
pub fn quadrature(spec: &IntegrandSpec, nodes: usize) -> Result<IntegralValue> {
    let ex: Vec<(f64, f64)> = spec.jacobi_exponents.iter().map(|(p, q)| (p.re, q.re)).collect();
    let q = cube_integral(&ex, nodes, |s| spec.smooth_value(s))?;
    let pre = spec.prefactor();
    Ok(IntegralValue { value: pre * q.value, error_estimate: pre.norm() * q.error_estimate, nodes_per_axis: nodes })
}

/// Quadrature, failing when the doubling estimate exceeds `rel_tol * |value|`.
pub fn quadrature_checked(spec: &IntegrandSpec, nodes: usize, rel_tol: f64) -> Result<IntegralValue> {
    let v = quadrature(spec, nodes)?;
    let tol = rel_tol * v.value.norm();
    if v.error_estimate > tol {
        return Err(Error::QuadratureNotConverged { estimate: v.error_estimate, tolerance: tol });
    }
    Ok(v)
}

/// Integral of `U phi_row` over a cycle.
pub fn euler_integral(p: &ParameterSet<Complex64>, cycle: Cycle, row: FormRow, x: &[Complex64], nodes: usize) -> Result<IntegralValue> {
    quadrature(&integrand(p, cycle, row, x)?, nodes)
}

/// The whole solution vector `y(x; cycle)`.
pub fn solution_vector(p: &ParameterSet<Complex64>, cycle: Cycle, x: &[Complex64], nodes: usize) -> Result<(Vec<Complex64>, f64)> {
    let mut y = Vec::with_capacity(p.rank());
    let mut err: f64 = 0.0;
    for row in FormRow::all(p.l(), p.n()) {
        let v = euler_integral(p, cycle, row, x, nodes)?;
        err = err.max(v.error_estimate);
        y.push(v.value);
    }
    Ok((y, err))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ColumnLabel {
    Delta0,
    Cyclic { j: usize, n: usize },
    /// Column `n` of the single-simplex representation (`N = 1`).
    Shifted { n: usize },
}

#[derive(Clone, Debug)]
pub struct FundamentalSystem {
    pub x: Vec<Complex64>,
    pub y: Matrix<Complex64>,
    pub labels: Vec<ColumnLabel>,
    pub nodes_per_axis: usize,
    /// Largest per-entry quadrature error estimate.
    pub error_estimate: f64,
}

impl FundamentalSystem {
    /// Determinant after scaling every row to unit max-norm.
    pub fn scaled_determinant(&self) -> Complex64 {
        let n = self.y.rows();
        let scaled = Matrix::from_fn(n, n, |r, col| {
            let m = self.y.row(r).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if m > 0.0 {
                self.y[(r, col)] / m
            } else {
                self.y[(r, col)]
            }
        });
        scaled.determinant()
    }
}

/// Columns `Delta_0` and `Delta_n^{(j)}` in solution-vector order.
pub fn general_cycles(l: usize, n: usize) -> Vec<Cycle> {
    let mut v = vec![Cycle::Delta0];
    for j in 0..n {
        for k in 1..l {
            v.push(Cycle::Cyclic { j, n: k });
        }
    }
    v
}

/// `Y = (int_{Delta_n^{(j)}} U phi_m^{(i)})`: one column per cycle.
///
/// Needs a chamber where every pulled-back factor is non-vanishing on the
/// simplex: `|x_j| < 1` and `x_i / x_j` not a positive real for `i != j`
/// (for real `x` and `N >= 2`: coordinates of opposite sign), and exponents
/// in the convergence region (for column `(j, n)` this includes
/// `Re theta_j > 0`).
pub fn fundamental_system_general(p: &ParameterSet<Complex64>, x: &[Complex64], nodes: usize) -> Result<FundamentalSystem> {
    check_x(p, x)?;
    let size = p.rank();
    let cycles = general_cycles(p.l(), p.n());
    let mut y = Matrix::zeros(size, size);
    let mut err: f64 = 0.0;
    let mut labels = Vec::with_capacity(size);
    for (col, cycle) in cycles.iter().enumerate() {
        let (v, e) = solution_vector(p, *cycle, x, nodes)?;
        y.set_column(col, &v);
        err = err.max(e);
        labels.push(match *cycle {
            Cycle::Delta0 => ColumnLabel::Delta0,
            Cycle::Cyclic { j, n } => ColumnLabel::Cyclic { j, n },
        });
    }
    Ok(FundamentalSystem { x: x.to_vec(), y, labels, nodes_per_axis: nodes, error_estimate: err })
}

/// Build (without integrating) every integrand of the general fundamental
/// system, surfacing chamber and exponent errors cheaply.
pub fn check_general_admissible(p: &ParameterSet<Complex64>, x: &[Complex64]) -> Result<()> {
    check_x(p, x)?;
    for cycle in general_cycles(p.l(), p.n()) {
        for row in FormRow::all(p.l(), p.n()) {
            integrand(p, cycle, row, x)?;
        }
    }
    Ok(())
}

/// Which of the two `N = 1` representations to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThomaeRep {
    /// Single simplex, shifted parameters: column `n` is
    /// `x^{-gamma_n} int_{Delta_0} U_n phi_{m-n}` with `phi_{k} = x phi_{k+L}`.
    SingleSimplex,
    /// Cyclic simplices: column `n` is `int_{Delta_n} U phi_m`.
    CyclicSimplices,
}

/// Fundamental system of the `N = 1` (Thomae) system in either representation.
/// Both agree up to right multiplication by a constant diagonal matrix.
pub fn fundamental_system_thomae(p: &ParameterSet<Complex64>, x: Complex64, nodes: usize, rep: ThomaeRep) -> Result<FundamentalSystem> {
    if p.n() != 1 {
        return Err(Error::NotThomaeCase(p.n()));
    }
    let l = p.l();
    match rep {
        ThomaeRep::CyclicSimplices => fundamental_system_general(p, &[x], nodes),
        ThomaeRep::SingleSimplex => {
            let mut y = Matrix::zeros(l, l);
            let mut err: f64 = 0.0;
            let mut labels = Vec::with_capacity(l);
            for n in 0..l {
                let q = p.cyclic_shift(n)?;
                let gn = if n == 0 { c(0.0) } else { p.gamma_at(n) };
                let col_factor = pow_principal(x, -gn);
                for m in 0..l {
                    let k = (m + l - n) % l;
                    let row = if k == 0 { FormRow::Phi0 } else { FormRow::Phi { i: 0, m: k } };
                    let wrap = if m < n { x } else { c(1.0) };
                    let v = euler_integral(&q, Cycle::Delta0, row, &[x], nodes)?;
                    y[(m, n)] = col_factor * wrap * v.value;
                    err = err.max((col_factor * wrap).norm() * v.error_estimate);
                }
                labels.push(ColumnLabel::Shifted { n });
            }
            Ok(FundamentalSystem { x: vec![x], y, labels, nodes_per_axis: nodes, error_estimate: err })
        }
    }
}

/// Central-difference residual of a solution-valued function:
/// `max_i max_r |(y(x + h e_i) - y(x - h e_i))/(2h) - M_i(x) y(x)|_r`,
/// divided by `max_i |M_i| * max_r |y_r|`.
pub fn connection_residual<F>(p: &ParameterSet<Complex64>, x: &[Complex64], h: f64, f: F) -> Result<f64>
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let sys = build_system(p);
    let m = sys.connection_at(x)?;
    let y0 = f(x)?;
    let ymax = y0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = f64::MIN_POSITIVE;
    for (i, mi) in m.iter().enumerate() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let (yp, ym) = (f(&xp)?, f(&xm)?);
        let my = mi.mul_vec(&y0);
        for r in 0..y0.len() {
            let fd = (yp[r] - ym[r]) / (2.0 * h);
            worst = worst.max((fd - my[r]).norm());
        }
        scale = scale.max(mi.max_abs() * ymax);
    }
    Ok(worst / scale)
}

/// Observations behind [`local_factorization_check`].
#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    /// `x_j` sample magnitudes (largest first).
    pub samples: Vec<f64>,
    /// `(column, row, fitted slope, expected exponent)` for the entries that
    /// behave like `x_j^{b_{j,n}}`.
    pub exponent_slopes: Vec<(usize, usize, f64, f64)>,
    /// `(column, row, smallest slope)` of `|Phi|` for entries that must vanish
    /// as `x_j -> 0`.
    pub decay_slopes: Vec<(usize, usize, f64)>,
    pub max_exponent_deviation: f64,
    pub min_decay_slope: f64,
}

/// Local behaviour of the cyclic columns as `x_j -> 0`.
///
/// `base` fixes the other coordinates; coordinate `j` takes the values
/// `sign(base_j) * s` for `s` in `samples`. Column `(j, n)` must behave like
/// `x_j^{b_{j,n}}` in rows `0`-block-free lower-triangular positions
/// (`y_m^{(j)}`, `m >= n`) and like `x_j^{b_{j,n}+1}` or faster elsewhere.
pub fn local_factorization_check(
    p: &ParameterSet<Complex64>,
    base: &[Complex64],
    samples: &[f64],
    nodes: usize,
    slope_tol: f64,
    min_decay: f64,
) -> Result<FactorizationReport> {
    check_x(p, base)?;
    let (l, nn) = (p.l(), p.n());
    let d = p.derived();
    let mut exponent_slopes = Vec::new();
    let mut decay_slopes = Vec::new();
    for j in 0..nn {
        let sign = base[j].re.signum();
        let mut cols: Vec<Vec<Vec<Complex64>>> = vec![Vec::new(); l - 1];
        for &s in samples {
            let mut x = base.to_vec();
            x[j] = c(sign * s);
            for n in 1..l {
                let (v, _) = solution_vector(p, Cycle::Cyclic { j, n }, &x, nodes)?;
                cols[n - 1].push(v);
            }
        }
        for n in 1..l {
            let col = block_index(l, j, n);
            let b = d.b(j, n).re;
            for row in FormRow::all(l, nn) {
                let r = row.index(l);
                let on_pattern = matches!(row, FormRow::Phi { i, m } if i == j && m >= n);
                let series: Vec<f64> = cols[n - 1].iter().map(|v| v[r].norm().ln()).collect();
                let mut slopes = Vec::new();
                for k in 1..samples.len() {
                    let dl = samples[k].ln() - samples[k - 1].ln();
                    let raw = (series[k] - series[k - 1]) / dl;
                    slopes.push(if on_pattern { raw } else { raw - b });
                }
                if on_pattern {
                    let last = *slopes.last().unwrap_or(&f64::NAN);
                    exponent_slopes.push((col, r, last, b));
                } else {
                    let min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
                    decay_slopes.push((col, r, min));
                }
            }
        }
    }
    let max_exponent_deviation = exponent_slopes.iter().map(|&(_, _, s, b)| (s - b).abs()).fold(0.0, f64::max);
    let min_decay_slope = decay_slopes.iter().map(|&(_, _, s)| s).fold(f64::INFINITY, f64::min);
    if max_exponent_deviation > slope_tol {
        let &(col, r, s, b) = exponent_slopes
            .iter()
            .max_by(|u, v| (u.2 - u.3).abs().partial_cmp(&(v.2 - v.3).abs()).unwrap())
            .unwrap();
        return Err(Error::FactorizationViolated { entry: format!("Y[{r}][{col}]"), observed: s, expected: b });
    }
    if min_decay_slope < min_decay {
        let &(col, r, s) = decay_slopes.iter().min_by(|u, v| u.2.partial_cmp(&v.2).unwrap()).unwrap();
        return Err(Error::FactorizationViolated { entry: format!("Phi[{r}][{col}]"), observed: s, expected: min_decay });
    }
    Ok(FactorizationReport {
        samples: samples.to_vec(),
        exponent_slopes,
        decay_slopes,
        max_exponent_deviation,
        min_decay_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::beta_real;
    use crate::series::{eval_series_auto, holomorphic_solution_vector_auto, normalizing_constant};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm()
    }

    #[test]
    fn gauss_phi0_exponents() {
        let (a, b, g) = (0.5, 0.5, 1.5);
        let p = ParameterSet::from_reals(2, 1, &[a], &[b], &[g]).unwrap();
        let spec = simplex_to_cube(&p, FormRow::Phi0, &[c(0.3)]).unwrap();
        assert!(close(spec.jacobi_exponents[0].0, c(a - 1.0), 1e-15));
        assert!(close(spec.jacobi_exponents[0].1, c(g - a - 1.0), 1e-15));
        assert_eq!(spec.smooth.len(), 1);
        assert_eq!(spec.smooth[0].terms, vec![(1, c(-0.3))]);
        assert!(close(spec.smooth[0].exponent, c(-b), 1e-15));
    }

    #[test]
    fn l3_phi0_exponents() {
        let p = ParameterSet::from_reals(3, 1, &[0.4, 0.7], &[0.3], &[1.6, 1.9]).unwrap();
        let d = p.derived();
        let spec = simplex_to_cube(&p, FormRow::Phi0, &[c(0.2)]).unwrap();
        let (p1, q1) = spec.jacobi_exponents[0];
        let (p2, q2) = spec.jacobi_exponents[1];
        assert!(close(q1, d.eta(1) - 1.0, 1e-14));
        assert!(close(q2, d.eta(2) - 1.0, 1e-14));
        assert!(close(p1, d.zeta(1) + d.zeta(2) + d.eta(2), 1e-14));
        assert!(close(p2, d.zeta(2), 1e-14));
        // equivalently p_l = alpha_l - 1
        assert!(close(p1, c(0.4 - 1.0), 1e-14) && close(p2, c(0.7 - 1.0), 1e-14));
    }

    #[test]
    fn divergent_eta_is_rejected() {
        // eta_1 = gamma - alpha = 0 makes the phi_0 exponent -1
        let p = ParameterSet::from_reals(2, 1, &[0.5], &[0.5], &[0.5]).unwrap();
        assert!(matches!(
            simplex_to_cube(&p, FormRow::Phi0, &[c(0.3)]),
            Err(Error::NonIntegrableExponent { axis: 1, .. })
        ));
    }

    #[test]
    fn beta_function_when_smooth_factor_is_trivial() {
        let p = ParameterSet::from_reals(2, 1, &[0.7], &[0.4], &[1.9]).unwrap();
        let v = euler_integral(&p, Cycle::Delta0, FormRow::Phi0, &[c(0.0)], 24).unwrap();
        assert!((v.value.re - beta_real(0.7, 1.2)).abs() < 1e-13);
    }

    #[test]
    fn gauss_value_matches_series() {
        let (a, b, g) = (0.5, 0.5, 1.5);
        let p = ParameterSet::from_reals(2, 1, &[a], &[b], &[g]).unwrap();
        let x = [c(0.3)];
        let v = euler_integral(&p, Cycle::Delta0, FormRow::Phi0, &x, DEFAULT_NODES).unwrap();
        let cc = normalizing_constant(&p).unwrap();
        let f = eval_series_auto(&p, &x, 1e-16).unwrap().value;
        assert!(close(v.value, cc * f, 1e-12), "{} vs {}", v.value, cc * f);
        assert!(v.error_estimate < 1e-12);
    }

    #[test]
    fn delta0_vector_is_the_holomorphic_solution() {
        for (l, n, a, b, g, x) in [
            (3, 1, vec![0.4, 0.7], vec![0.3], vec![1.6, 1.9], vec![c(0.6)]),
            (2, 2, vec![0.6], vec![0.3, -0.4], vec![1.7], vec![c(0.3), c(-0.5)]),
            (3, 2, vec![0.4, 0.7], vec![0.3, 0.5], vec![1.6, 1.9], vec![c(0.25), Complex64::new(-0.2, 0.3)]),
        ] {
            let p = ParameterSet::from_reals(l, n, &a, &b, &g).unwrap();
            let (y, _) = solution_vector(&p, Cycle::Delta0, &x, DEFAULT_NODES).unwrap();
            let h = holomorphic_solution_vector_auto(&p, &x).unwrap();
            for (u, v) in y.iter().zip(&h) {
                assert!(close(*u, *v, 1e-11), "L={l} N={n}: {u} vs {v}");
            }
        }
    }

    /// `int_{1/x}^inf t^{a-1} (t-1)^{g-a-1} (xt-1)^{-b} dt` by the substitution
    /// `t = 1/(x w)`: `x^{1-g} int_0^1 w^{b-g} (1-w)^{-b} (1-xw)^{g-a-1} dw`.
    fn gauss_y01_modulus(a: f64, b: f64, g: f64, x: f64) -> f64 {
        let q = crate::quadrature::cube_integral(&[(b - g, -b)], 64, |w| c((1.0 - x * w[0]).powf(g - a - 1.0))).unwrap();
        x.powf(1.0 - g) * q.value.re
    }

    #[test]
    fn gauss_cyclic_column_against_substitution() {
        let (a, b, g) = (0.25, -0.1, 0.3);
        let p = ParameterSet::from_reals(2, 1, &[a], &[b], &[g]).unwrap();
        let x = 0.4;
        let v = euler_integral(&p, Cycle::Cyclic { j: 0, n: 1 }, FormRow::Phi0, &[c(x)], 64).unwrap();
        let m = gauss_y01_modulus(a, b, g, x);
        assert!((v.value.norm() - m).abs() <= 1e-9 * m, "{} vs {m}", v.value.norm());
    }

    #[test]
    fn gauss_cyclic_prefactor_exponents() {
        // column 1 carries x^{1-gamma} in row 0 and x^{-gamma} in row 1
        let p = ParameterSet::from_reals(2, 1, &[0.25], &[-0.1], &[0.3]).unwrap();
        let s0 = pullback_cyclic(&p, 0, 1, FormRow::Phi0, &[c(0.4)]).unwrap();
        let s1 = pullback_cyclic(&p, 0, 1, FormRow::Phi { i: 0, m: 1 }, &[c(0.4)]).unwrap();
        assert!(close(s0.x_power.unwrap().1, c(1.0 - 0.3), 1e-14));
        assert!(close(s1.x_power.unwrap().1, c(-0.3), 1e-14));
    }

    #[test]
    fn cyclic_prefactor_table() {
        // x_j power of the pulled-back integrand: b_{j,n} (+1 if m < n) for i = j,
        // b_{j,n} + 1 (+1 if m < n) for i != j
        let p = ParameterSet::from_reals(4, 3, &[0.3, 0.5, 0.7], &[-0.2, -0.3, -0.4], &[1.4, 1.6, 1.9]).unwrap();
        let x = [c(0.5), c(-0.3), Complex64::new(0.1, 0.4)];
        let d = p.derived();
        for j in 0..3 {
            for n in 1..4 {
                for row in FormRow::all(4, 3) {
                    let Ok(spec) = pullback_cyclic(&p, j, n, row, &x) else { continue };
                    let (jj, e) = spec.x_power.unwrap();
                    assert_eq!(jj, j);
                    let b = d.b(j, n);
                    let expected = match row {
                        FormRow::Phi0 => b + 1.0,
                        FormRow::Phi { i, m } if i == j => b + if m < n { 1.0 } else { 0.0 },
                        FormRow::Phi { m, .. } => b + if m < n { 2.0 } else { 1.0 },
                    };
                    assert!(close(e, expected, 1e-13), "j={j} n={n} {row:?}: {e} vs {expected}");
                }
            }
        }
    }

    #[test]
    fn same_sign_chamber_is_rejected() {
        let p = ParameterSet::from_reals(2, 2, &[0.4], &[-0.15, -0.3], &[0.5]).unwrap();
        let r = pullback_cyclic(&p, 0, 1, FormRow::Phi0, &[c(0.5), c(0.3)]);
        assert!(matches!(r, Err(Error::InadmissibleChamber(_))), "{r:?}");
    }

    #[test]
    fn thomae_representations_are_diagonally_equivalent() {
        let p = ParameterSet::from_reals(3, 1, &[0.15, 0.35], &[-0.5], &[0.2, 0.4]).unwrap();
        let mut ratios = Vec::new();
        for x in [0.3, 0.45] {
            let y1 = fundamental_system_thomae(&p, c(x), DEFAULT_NODES, ThomaeRep::SingleSimplex).unwrap();
            let y2 = fundamental_system_thomae(&p, c(x), DEFAULT_NODES, ThomaeRep::CyclicSimplices).unwrap();
            ratios.push(Matrix::from_fn(3, 3, |r, k| y2.y[(r, k)] / y1.y[(r, k)]));
        }
        for k in 0..3 {
            for r in 0..3 {
                assert!(close(ratios[0][(r, k)], ratios[0][(0, k)], 1e-9), "column {k} not constant");
                assert!(close(ratios[1][(r, k)], ratios[0][(r, k)], 1e-9), "ratio depends on x");
            }
        }
    }

    #[test]
    fn general_system_solves_the_pfaffian_system() {
        let p = ParameterSet::from_reals(2, 2, &[0.4], &[-0.15, -0.3], &[0.5]).unwrap();
        let x = [c(0.35), c(-0.25)];
        let fs = fundamental_system_general(&p, &x, DEFAULT_NODES).unwrap();
        assert!(fs.scaled_determinant().norm() > 1e-10);
        for col in 0..fs.y.cols() {
            let cycle = general_cycles(2, 2)[col];
            let res = connection_residual(&p, &x, 1e-5, |xx| Ok(solution_vector(&p, cycle, xx, DEFAULT_NODES)?.0)).unwrap();
            assert!(res < 1e-6, "column {col}: {res:e}");
        }
    }

    #[test]
    fn gauss_local_factorization() {
        let p = ParameterSet::from_reals(2, 1, &[0.25], &[-0.1], &[0.3]).unwrap();
        let rep = local_factorization_check(&p, &[c(0.5)], &[1e-2, 1e-3, 1e-4], DEFAULT_NODES, 0.02, 0.98).unwrap();
        assert!(rep.max_exponent_deviation < 0.02);
        assert!(rep.min_decay_slope >= 0.98);
    }
}
