//! Residue matrices `E_i, F_i, G_ij` of the rank `N(L-1)+1` Pfaffian system
//!
//! ```text
//! dy = { sum_i (E_i dlog x_i + F_i dlog(1 - x_i)) + sum_{i<j} G_ij dlog(x_i - x_j) } y
//! ```
//!
//! together with the connection matrices, the Riemann scheme, flatness and
//! the cyclic gauge relating the `N = 1` systems at shifted parameters.
//!
//! Vector layout: slot `0` is `y_0`, slot [`block_index`]`(l, i, n)` is
//! `y_n^{(i)}` (coordinate `i` 0-based, level `n = 1..=L-1`).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::params::{ParameterSet, sum};
use crate::scalar::Scalar;

/// Irreducible components of the singular locus. Indices are 0-based and
/// `Diagonal(i, j)` has `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DivisorId {
    Zero(usize),
    One(usize),
    Infinity(usize),
    Diagonal(usize, usize),
}

impl DivisorId {
    pub fn diagonal(i: usize, j: usize) -> Self {
        DivisorId::Diagonal(i.min(j), i.max(j))
    }

    /// All divisors met when `x_i` moves with the other coordinates fixed,
    /// in the order `0, 1, infinity, x_j`.
    pub fn around(i: usize, n: usize) -> Vec<DivisorId> {
        let mut v = vec![DivisorId::Zero(i), DivisorId::One(i), DivisorId::Infinity(i)];
        v.extend((0..n).filter(|&j| j != i).map(|j| DivisorId::diagonal(i, j)));
        v
    }

    fn check(&self, n: usize) -> Result<()> {
        let ok = match *self {
            DivisorId::Zero(i) | DivisorId::One(i) | DivisorId::Infinity(i) => i < n,
            DivisorId::Diagonal(i, j) => i < j && j < n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("divisor {self} out of range for N = {n}")))
        }
    }
}

impl fmt::Display for DivisorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DivisorId::Zero(i) => write!(f, "x{}=0", i + 1),
            DivisorId::One(i) => write!(f, "x{}=1", i + 1),
            DivisorId::Infinity(i) => write!(f, "x{}=inf", i + 1),
            DivisorId::Diagonal(i, j) => write!(f, "x{}=x{}", i + 1, j + 1),
        }
    }
}

impl std::str::FromStr for DivisorId {
    type Err = Error;

    /// Parses the [`Display`](fmt::Display) form: `x1=0`, `x2=1`, `x1=inf`, `x1=x2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("divisor `{s}` (expected x<i>=0, x<i>=1, x<i>=inf or x<i>=x<j>)"));
        let coord = |t: &str| -> Result<usize> {
            let k: usize = t.trim().strip_prefix('x').ok_or_else(bad)?.parse().map_err(|_| bad())?;
            k.checked_sub(1).ok_or_else(bad)
        };
        let (lhs, rhs) = s.split_once('=').ok_or_else(bad)?;
        let i = coord(lhs)?;
        match rhs.trim() {
            "0" => Ok(DivisorId::Zero(i)),
            "1" => Ok(DivisorId::One(i)),
            "inf" | "infinity" => Ok(DivisorId::Infinity(i)),
            other => {
                let j = coord(other)?;
                if i == j {
                    return Err(bad());
                }
                Ok(DivisorId::diagonal(i, j))
            }
        }
    }
}

/// Position of `y_n^{(i)}` in the solution vector.
pub fn block_index(l: usize, i: usize, n: usize) -> usize {
    debug_assert!((1..l).contains(&n));
    1 + i * (l - 1) + (n - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PfaffianSystem<S> {
    params: ParameterSet<S>,
    e: Vec<Matrix<S>>,
    f: Vec<Matrix<S>>,
    g: BTreeMap<(usize, usize), Matrix<S>>,
}

pub fn build_system<S: Scalar>(p: &ParameterSet<S>) -> PfaffianSystem<S> {
    let (l, nn) = (p.l(), p.n());
    let size = p.rank();
    let d = p.derived();
    let beta = p.beta();
    let idx = |i, n| block_index(l, i, n);

    let mut e = Vec::with_capacity(nn);
    let mut f = Vec::with_capacity(nn);
    for i in 0..nn {
        let mut ei = Matrix::zeros(size, size);
        let mut fi = Matrix::zeros(size, size);
        fi[(0, 0)] = -beta[i].clone();
        for k in 1..l {
            fi[(0, idx(i, k))] = -beta[i].clone();
        }
        for m in 1..l {
            let r = idx(i, m);
            let am = d.a(m);
            ei[(r, 0)] = am.clone();
            for k in 1..m {
                ei[(r, idx(i, k))] = am.clone();
            }
            ei[(r, r)] = d.b(i, m);
            for j in (0..nn).filter(|&j| j != i) {
                ei[(r, idx(j, m))] = -beta[j].clone();
            }
            fi[(r, 0)] = -am.clone();
            for k in 1..l {
                fi[(r, idx(i, k))] = -am.clone();
            }
        }
        e.push(ei);
        f.push(fi);
    }

    let mut g = BTreeMap::new();
    for i in 0..nn {
        for j in i + 1..nn {
            let mut gij = Matrix::zeros(size, size);
            for m in 1..l {
                let (ri, rj) = (idx(i, m), idx(j, m));
                gij[(ri, ri)] = -beta[j].clone();
                gij[(ri, rj)] = beta[j].clone();
                gij[(rj, ri)] = beta[i].clone();
                gij[(rj, rj)] = -beta[i].clone();
            }
            g.insert((i, j), gij);
        }
    }
    PfaffianSystem { params: p.clone(), e, f, g }
}

fn near_zero<S: Scalar>(s: &S) -> bool {
    if S::is_exact() {
        s.is_zero()
    } else {
        s.magnitude() <= 1e-14
    }
}

/// Locate the divisor a point lies on, if any.
pub fn divisor_at<S: Scalar>(x: &[S]) -> Option<DivisorId> {
    for (i, xi) in x.iter().enumerate() {
        if near_zero(xi) {
            return Some(DivisorId::Zero(i));
        }
        if near_zero(&(xi.clone() - S::one())) {
            return Some(DivisorId::One(i));
        }
    }
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if near_zero(&(x[i].clone() - x[j].clone())) {
                return Some(DivisorId::Diagonal(i, j));
            }
        }
    }
    None
}

impl<S: Scalar> PfaffianSystem<S> {
    pub fn params(&self) -> &ParameterSet<S> {
        &self.params
    }

    pub fn size(&self) -> usize {
        self.params.rank()
    }

    pub fn e(&self, i: usize) -> &Matrix<S> {
        &self.e[i]
    }

    pub fn f(&self, i: usize) -> &Matrix<S> {
        &self.f[i]
    }

    /// `G_ij`, symmetric in `(i, j)`.
    pub fn g(&self, i: usize, j: usize) -> &Matrix<S> {
        &self.g[&(i.min(j), i.max(j))]
    }

    pub fn g_pairs(&self) -> impl Iterator<Item = (&(usize, usize), &Matrix<S>)> {
        self.g.iter()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> PfaffianSystem<T> {
        PfaffianSystem {
            params: self.params.map(f),
            e: self.e.iter().map(|m| m.map(f)).collect(),
            f: self.f.iter().map(|m| m.map(f)).collect(),
            g: self.g.iter().map(|(k, m)| (*k, m.map(f))).collect(),
        }
    }

    /// Residue of the connection along a divisor: `E_i`, `F_i`, `G_ij`, and
    /// `-(E_i + F_i + sum_j G_ij)` at `x_i = infinity`.
    pub fn residue(&self, d: DivisorId) -> Result<Matrix<S>> {
        d.check(self.params.n())?;
        Ok(match d {
            DivisorId::Zero(i) => self.e[i].clone(),
            DivisorId::One(i) => self.f[i].clone(),
            DivisorId::Diagonal(i, j) => self.g(i, j).clone(),
            DivisorId::Infinity(i) => {
                let mut s = &self.e[i] + &self.f[i];
                for j in (0..self.params.n()).filter(|&j| j != i) {
                    s = &s + self.g(i, j);
                }
                -&s
            }
        })
    }

    /// Eigenvalues of [`PfaffianSystem::residue`], extracted exactly from the
    /// block structure.
    pub fn residue_spectrum(&self, d: DivisorId) -> Result<Vec<S>> {
        structured_eigenvalues(&self.residue(d)?)
    }

    /// `M_i(x) = E_i/x_i - F_i/(1-x_i) + sum_{j != i} G_ij/(x_i - x_j)`.
    pub fn connection_at(&self, x: &[S]) -> Result<Vec<Matrix<S>>> {
        let nn = self.params.n();
        if x.len() != nn {
            return Err(Error::DimensionMismatch(format!("expected {nn} coordinates, got {}", x.len())));
        }
        if let Some(d) = divisor_at(x) {
            return Err(Error::OnSingularLocus(d));
        }
        Ok((0..nn)
            .map(|i| {
                let xi = &x[i];
                let mut m = &self.e[i].scale(&(S::one() / xi.clone()))
                    - &self.f[i].scale(&(S::one() / (S::one() - xi.clone())));
                for j in (0..nn).filter(|&j| j != i) {
                    m = &m + &self.g(i, j).scale(&(S::one() / (xi.clone() - x[j].clone())));
                }
                m
            })
            .collect())
    }

    /// Curvature components `d_j M_i - d_i M_j + [M_i, M_j]` for `i < j`,
    /// with the partial derivatives in closed form.
    pub fn curvature(&self, x: &[S]) -> Result<Vec<((usize, usize), Matrix<S>)>> {
        let m = self.connection_at(x)?;
        let nn = self.params.n();
        let mut out = Vec::new();
        for i in 0..nn {
            for j in i + 1..nn {
                let dij = x[i].clone() - x[j].clone();
                let sq = S::one() / (dij.clone() * dij);
                // d_j M_i = G_ij/(x_i-x_j)^2 and d_i M_j = G_ij/(x_j-x_i)^2
                let dj_mi = self.g(i, j).scale(&sq);
                let di_mj = self.g(i, j).scale(&sq);
                let k = &(&dj_mi - &di_mj) + &m[i].commutator(&m[j]);
                out.push(((i, j), k));
            }
        }
        Ok(out)
    }

    /// Largest curvature entry; `0` when `N = 1`.
    pub fn integrability_residual(&self, x: &[S]) -> Result<f64> {
        Ok(self.curvature(x)?.iter().map(|(_, k)| k.max_abs()).fold(0.0, f64::max))
    }

    /// [`PfaffianSystem::integrability_residual`] divided by
    /// `max_{i<j} |M_i| |M_j|`, the natural size of the commutator terms.
    pub fn integrability_residual_relative(&self, x: &[S]) -> Result<f64> {
        let m = self.connection_at(x)?;
        let mut scale: f64 = f64::MIN_POSITIVE;
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                scale = scale.max(m[i].max_abs() * m[j].max_abs());
            }
        }
        Ok(self.integrability_residual(x)? / scale)
    }

    /// True when every curvature component vanishes (exactly, for rational
    /// scalars).
    pub fn is_flat(&self, x: &[S]) -> Result<bool> {
        Ok(self.curvature(x)?.iter().all(|(_, k)| k.is_zero()))
    }

    /// Partition of `N(L-1)+1` given by the eigenvalue multiplicities of each
    /// residue met by `x_i` (order `0, 1, infinity, x_j`), sorted ascending.
    ///
    /// Fails with [`Error::NonGenericParameters`] when a partition differs
    /// from the generic one, i.e. exponents collide beyond the forced ones.
    pub fn spectral_type(&self, i: usize) -> Result<Vec<(DivisorId, Vec<usize>)>> {
        let p = &self.params;
        let mut out = Vec::new();
        for d in DivisorId::around(i, p.n()) {
            let found = multiplicities(&self.residue_spectrum(d)?);
            let expected = generic_partition(p.l(), p.n(), d);
            if found != expected {
                return Err(Error::NonGenericParameters(format!(
                    "at {d}: multiplicities {found:?}, generic {expected:?}"
                )));
            }
            out.push((d, found));
        }
        Ok(out)
    }
}

/// Generic spectral type at a divisor, sorted ascending.
pub fn generic_partition(l: usize, n: usize, d: DivisorId) -> Vec<usize> {
    let big = (n - 1) * (l - 1) + 1;
    let mut v = match d {
        DivisorId::Zero(_) | DivisorId::Infinity(_) => {
            let mut v = vec![1; l - 1];
            v.push(big);
            v
        }
        DivisorId::One(_) => vec![1, n * (l - 1)],
        DivisorId::Diagonal(..) => vec![l - 1, big],
    };
    v.sort_unstable();
    v
}

/// Multiset of equal values, as sorted multiplicities.
pub fn multiplicities<S: Scalar>(values: &[S]) -> Vec<usize> {
    let mut groups: Vec<(S, usize)> = Vec::new();
    for v in values {
        match groups.iter_mut().find(|(g, _)| g.approx_eq(v)) {
            Some((_, c)) => *c += 1,
            None => groups.push((v.clone(), 1)),
        }
    }
    let mut m: Vec<usize> = groups.into_iter().map(|(_, c)| c).collect();
    m.sort_unstable();
    m
}

/// The characteristic exponents listed in the Riemann scheme for a divisor.
pub fn expected_exponents<S: Scalar>(p: &ParameterSet<S>, d: DivisorId) -> Vec<S> {
    let (l, n) = (p.l(), p.n());
    let big = (n - 1) * (l - 1) + 1;
    let dd = p.derived();
    let beta = p.beta();
    match d {
        DivisorId::Zero(i) => {
            let mut v: Vec<S> = (1..l).map(|k| dd.b(i, k)).collect();
            v.extend(std::iter::repeat_n(S::zero(), big));
            v
        }
        DivisorId::One(i) => {
            let a: Vec<S> = (1..l).map(|k| dd.a(k)).collect();
            let mut v = vec![-beta[i].clone() - sum(&a)];
            v.extend(std::iter::repeat_n(S::zero(), n * (l - 1)));
            v
        }
        DivisorId::Infinity(i) => {
            let mut v = p.alpha().to_vec();
            v.extend(std::iter::repeat_n(beta[i].clone(), big));
            v
        }
        DivisorId::Diagonal(i, j) => {
            let mut v = vec![-beta[i].clone() - beta[j].clone(); l - 1];
            v.extend(std::iter::repeat_n(S::zero(), big));
            v
        }
    }
}

/// Multiset equality (exact for rationals, tolerant for floats).
pub fn same_multiset<S: Scalar>(a: &[S], b: &[S]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        match (0..b.len()).find(|&k| !used[k] && x.approx_eq(&b[k])) {
            Some(k) => {
                used[k] = true;
                true
            }
            None => false,
        }
    })
}

/// Eigenvalues of a matrix that is permutation-similar to a block triangular
/// matrix whose diagonal blocks are `1x1` or of rank one.
///
/// The diagonal blocks are the strongly connected components of the sparsity
/// graph; a rank-one block `u v^T` has eigenvalues `{v.u, 0, ..}`. No
/// rounding is introduced, so the result is exact over the rationals.
pub fn structured_eigenvalues<S: Scalar>(m: &Matrix<S>) -> Result<Vec<S>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    let mut out = Vec::with_capacity(m.rows());
    for comp in strongly_connected_components(m) {
        if comp.len() == 1 {
            out.push(m[(comp[0], comp[0])].clone());
            continue;
        }
        let block = m.select(&comp, &comp);
        if !is_rank_one(&block) {
            return Err(Error::UnstructuredResidue);
        }
        out.push(block.trace());
        out.extend(std::iter::repeat_n(S::zero(), comp.len() - 1));
    }
    Ok(out)
}

fn is_rank_one<S: Scalar>(b: &Matrix<S>) -> bool {
    let n = b.rows();
    let pivot = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).find(|&(r, c)| !b[(r, c)].is_zero());
    let Some((p, q)) = pivot else { return true };
    (0..n).all(|r| {
        (0..n).all(|c| {
            (b[(r, c)].clone() * b[(p, q)].clone()).approx_eq(&(b[(r, q)].clone() * b[(p, c)].clone()))
        })
    })
}

/// Tarjan's algorithm on the graph with an edge `r -> c` whenever `m[r][c] != 0`.
fn strongly_connected_components<S: Scalar>(m: &Matrix<S>) -> Vec<Vec<usize>> {
    struct State {
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        comps: Vec<Vec<usize>>,
    }
    fn visit<S: Scalar>(v: usize, m: &Matrix<S>, st: &mut State) {
        st.index[v] = Some(st.next);
        st.low[v] = st.next;
        st.next += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for w in 0..m.cols() {
            if w == v || m[(v, w)].is_zero() {
                continue;
            }
            match st.index[w] {
                None => {
                    visit(w, m, st);
                    st.low[v] = st.low[v].min(st.low[w]);
                }
                Some(iw) if st.on_stack[w] => st.low[v] = st.low[v].min(iw),
                _ => {}
            }
        }
        if Some(st.low[v]) == st.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().expect("tarjan stack");
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            st.comps.push(comp);
        }
    }
    let n = m.rows();
    let mut st = State {
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.index[v].is_none() {
            visit(v, m, &mut st);
        }
    }
    st.comps
}

/// The cyclic matrix `Lambda(x)` with ones on the superdiagonal and `1/x` in
/// the lower-left corner.
pub fn rotation_matrix<S: Scalar>(l: usize, x: &S) -> Matrix<S> {
    let mut m = Matrix::zeros(l, l);
    for k in 0..l - 1 {
        m[(k, k + 1)] = S::one();
    }
    m[(l - 1, 0)] = S::one() / x.clone();
    m
}

fn rotation_inverse<S: Scalar>(l: usize, x: &S) -> Matrix<S> {
    let mut m = Matrix::zeros(l, l);
    for k in 0..l - 1 {
        m[(k + 1, k)] = S::one();
    }
    m[(0, l - 1)] = x.clone();
    m
}

/// `Lambda^n K_n Lambda^{-n} + (d Lambda^n / dx) Lambda^{-n}` at `x`, where
/// `K_n = M(x) - (b_n/x) I` is the connection satisfied by the `n`-th column
/// of the local fundamental system (`b_0 = 0`, `b_n = -gamma_n`).
///
/// For `N = 1` this equals the connection of the system at the cyclically
/// shifted parameters.
pub fn cyclic_conjugate_connection<S: Scalar>(sys: &PfaffianSystem<S>, n: usize, x: &S) -> Result<Matrix<S>> {
    let p = sys.params();
    if p.n() != 1 {
        return Err(Error::NotThomaeCase(p.n()));
    }
    let l = p.l();
    if n >= l {
        return Err(Error::ShiftOutOfRange { n, max: l - 1 });
    }
    let m = sys.connection_at(std::slice::from_ref(x))?.remove(0);
    let bn = if n == 0 { S::zero() } else { p.derived().b(0, n) };
    let k = &m - &Matrix::identity(l).scale(&(bn / x.clone()));

    let lam = rotation_matrix(l, x);
    let lam_inv = rotation_inverse(l, x);
    let mut dlam = Matrix::zeros(l, l);
    dlam[(l - 1, 0)] = -(S::one() / (x.clone() * x.clone()));
    let n32 = n as u32;
    let mut d_lam_n = Matrix::zeros(l, l);
    for j in 0..n32 {
        d_lam_n = &d_lam_n + &(&(&lam.pow(j) * &dlam) * &lam.pow(n32 - 1 - j));
    }
    let lam_n = lam.pow(n32);
    let lam_inv_n = lam_inv.pow(n32);
    Ok(&(&(&lam_n * &k) * &lam_inv_n) + &(&d_lam_n * &lam_inv_n))
}
