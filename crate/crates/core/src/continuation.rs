//! Analytic continuation of solutions along piecewise paths avoiding the
//! singular locus, and monodromy matrices of closed loops.
//!
//! Along a curve `x(t)` the system pulls back to the linear ODE
//! `dY/dt = (sum_i M_i(x(t)) x_i'(t)) Y`, integrated here with the
//! Dormand-Prince 5(4) pair. Solution frames are transported column by
//! column; a loop acts on a frame by right multiplication, `Y -> Y M`.
//! Under this convention the loop `g1` followed by `g2` has monodromy
//! `M_{g2} M_{g1}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::fundamental_system_general;
use crate::matrix::Matrix;
use crate::pfaffian::{expected_exponents, DivisorId, PfaffianSystem};

/// One smooth piece of a path, parametrized by `t in [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Line { from: Vec<Complex64>, to: Vec<Complex64> },
    /// `x_coord(t) = center + radius * exp(i (start_angle + sweep t))`, the
    /// other coordinates fixed at `base`. Angles in radians.
    Arc { base: Vec<Complex64>, coord: usize, center: Complex64, radius: f64, start_angle: f64, sweep: f64 },
}

impl Segment {
    pub fn point(&self, t: f64) -> Vec<Complex64> {
        match self {
            Segment::Line { from, to } => from.iter().zip(to).map(|(a, b)| a + (b - a) * t).collect(),
            Segment::Arc { base, coord, center, radius, start_angle, sweep } => {
                let mut x = base.clone();
                x[*coord] = center + Complex64::from_polar(*radius, start_angle + sweep * t);
                x
            }
        }
    }

    pub fn velocity(&self, t: f64) -> Vec<Complex64> {
        match self {
            Segment::Line { from, to } => from.iter().zip(to).map(|(a, b)| b - a).collect(),
            Segment::Arc { base, coord, radius, start_angle, sweep, .. } => {
                let mut v = vec![Complex64::new(0.0, 0.0); base.len()];
                v[*coord] = Complex64::i() * sweep * Complex64::from_polar(*radius, start_angle + sweep * t);
                v
            }
        }
    }

    pub fn start(&self) -> Vec<Complex64> {
        self.point(0.0)
    }

    pub fn end(&self) -> Vec<Complex64> {
        self.point(1.0)
    }

    fn dim(&self) -> usize {
        match self {
            Segment::Line { from, .. } => from.len(),
            Segment::Arc { base, .. } => base.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Segment::Line { from, to } if from.len() != to.len() => {
                Err(Error::InvalidPath("line endpoints have different dimensions".into()))
            }
            Segment::Arc { base, coord, radius, .. } if *coord >= base.len() || !(*radius > 0.0) => {
                Err(Error::InvalidPath(format!("arc needs coord < {} and radius > 0", base.len())))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub segments: Vec<Segment>,
}

const JOIN_TOL: f64 = 1e-12;

impl Path {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let p = Path { segments };
        p.validate()?;
        Ok(p)
    }

    /// Polyline through the given waypoints.
    pub fn polyline(points: &[Vec<Complex64>]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPath("a polyline needs at least two points".into()));
        }
        Path::new(points.windows(2).map(|w| Segment::Line { from: w[0].clone(), to: w[1].clone() }).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.segments.first() else {
            return Err(Error::InvalidPath("empty path".into()));
        };
        let dim = first.dim();
        for s in &self.segments {
            s.validate()?;
            if s.dim() != dim {
                return Err(Error::InvalidPath("segments of different dimensions".into()));
            }
        }
        for (k, w) in self.segments.windows(2).enumerate() {
            if dist(&w[0].end(), &w[1].start()) > JOIN_TOL * (1.0 + norm_inf(&w[1].start())) {
                return Err(Error::InvalidPath(format!("segment {} does not start where segment {k} ends", k + 1)));
            }
        }
        Ok(())
    }

    pub fn basepoint(&self) -> Vec<Complex64> {
        self.segments[0].start()
    }

    pub fn end(&self) -> Vec<Complex64> {
        self.segments.last().expect("validated path").end()
    }

    pub fn is_closed(&self) -> bool {
        dist(&self.basepoint(), &self.end()) <= JOIN_TOL * (1.0 + norm_inf(&self.basepoint()))
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Path {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| match s {
                Segment::Line { from, to } => Segment::Line { from: to.clone(), to: from.clone() },
                Segment::Arc { base, coord, center, radius, start_angle, sweep } => Segment::Arc {
                    base: base.clone(),
                    coord: *coord,
                    center: *center,
                    radius: *radius,
                    start_angle: start_angle + sweep,
                    sweep: -sweep,
                },
            })
            .collect();
        Path { segments }
    }

    pub fn concat(&self, other: &Path) -> Result<Path> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Path::new(segments)
    }
}

fn norm_inf(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
}

/// Distance from `x` to the singular locus (`x_i = 0`, `x_i = 1`, `x_i = x_j`).
pub fn distance_to_locus(x: &[Complex64]) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let mut d = f64::INFINITY;
    for (i, xi) in x.iter().enumerate() {
        d = d.min(xi.norm()).min((one - xi).norm());
        for xj in &x[i + 1..] {
            d = d.min((xi - xj).norm());
        }
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Local error tolerance, relative to the size of the transported frame.
    pub tol: f64,
    /// Minimum distance to the singular locus, relative to `max(1, |x_0|)`.
    pub locus_margin: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { tol: 1e-10, locus_margin: 1e-3, max_steps: 200_000, min_step: 1e-14 }
    }
}

impl ContinuationOptions {
    pub fn with_tol(tol: f64) -> Self {
        ContinuationOptions { tol, ..Default::default() }
    }
}

/// Counters from one transport.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TransportStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_distance: f64,
}

// Dormand-Prince 5(4)
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Rhs<'a> {
    sys: &'a PfaffianSystem<Complex64>,
    seg: &'a Segment,
}

impl Rhs<'_> {
    fn coefficient(&self, t: f64) -> Result<Matrix<Complex64>> {
        let x = self.seg.point(t);
        let v = self.seg.velocity(t);
        let m = self.sys.connection_at(&x)?;
        let n = self.sys.size();
        let mut a = Matrix::zeros(n, n);
        for (mi, vi) in m.iter().zip(&v) {
            if *vi != Complex64::new(0.0, 0.0) {
                a = &a + &mi.scale(vi);
            }
        }
        Ok(a)
    }
}

fn axpy(y: &Matrix<Complex64>, terms: &[(f64, &Matrix<Complex64>)], h: f64) -> Matrix<Complex64> {
    let mut out = y.clone();
    for &(w, k) in terms {
        if w != 0.0 {
            out = &out + &k.scale(&Complex64::new(w * h, 0.0));
        }
    }
    out
}

fn transport_segment(
    sys: &PfaffianSystem<Complex64>,
    seg: &Segment,
    y0: Matrix<Complex64>,
    opts: &ContinuationOptions,
    margin: f64,
    stats: &mut TransportStats,
) -> Result<Matrix<Complex64>> {
    let rhs = Rhs { sys, seg };
    let mut t = 0.0;
    let mut h: f64 = 0.05;
    let mut y = y0;
    let check = |t: f64, stats: &mut TransportStats| -> Result<()> {
        let d = distance_to_locus(&seg.point(t));
        stats.min_distance = stats.min_distance.min(d);
        if d < margin {
            return Err(Error::NearSingularLocus { distance: d, limit: margin });
        }
        Ok(())
    };
    check(0.0, stats)?;
    let mut steps = 0;
    while t < 1.0 {
        if steps >= opts.max_steps {
            return Err(Error::ToleranceNotMet(opts.max_steps));
        }
        steps += 1;
        h = h.min(1.0 - t);
        let mut k: Vec<Matrix<Complex64>> = Vec::with_capacity(7);
        for s in 0..7 {
            let terms: Vec<(f64, &Matrix<Complex64>)> = (0..s).map(|r| (A[s][r], &k[r])).collect();
            let ys = axpy(&y, &terms, h);
            let a = rhs.coefficient(t + C[s] * h)?;
            k.push(&a * &ys);
        }
        let y5 = axpy(&y, &(0..7).map(|r| (B5[r], &k[r])).collect::<Vec<_>>(), h);
        let y4 = axpy(&y, &(0..7).map(|r| (B4[r], &k[r])).collect::<Vec<_>>(), h);
        let scale = y.max_abs().max(y5.max_abs()).max(f64::MIN_POSITIVE);
        let err = (&y5 - &y4).max_abs() / (opts.tol * scale);
        if !err.is_finite() {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            stats.accepted += 1;
            check(t.min(1.0), stats)?;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < opts.min_step && t < 1.0 {
            return Err(Error::StepSizeUnderflow { t, h });
        }
    }
    Ok(y)
}

/// Transports a frame (matrix of solution columns) along a path.
pub fn transport(
    sys: &PfaffianSystem<Complex64>,
    path: &Path,
    y0: &Matrix<Complex64>,
    opts: &ContinuationOptions,
) -> Result<(Matrix<Complex64>, TransportStats)> {
    path.validate()?;
    if path.basepoint().len() != sys.params().n() || y0.rows() != sys.size() {
        return Err(Error::DimensionMismatch("path or frame does not match the system".into()));
    }
    let margin = opts.locus_margin * norm_inf(&path.basepoint()).max(1.0);
    let mut stats = TransportStats { min_distance: f64::INFINITY, ..Default::default() };
    let mut y = y0.clone();
    for seg in &path.segments {
        y = transport_segment(sys, seg, y, opts, margin, &mut stats)?;
    }
    Ok((y, stats))
}

/// Continues a single solution vector along a path.
pub fn integrate_path(
    sys: &PfaffianSystem<Complex64>,
    path: &Path,
    y0: &[Complex64],
    opts: &ContinuationOptions,
) -> Result<Vec<Complex64>> {
    let m = Matrix::from_fn(y0.len(), 1, |r, _| y0[r]);
    Ok(transport(sys, path, &m, opts)?.0.column(0))
}

/// Transports several paths independently (in parallel).
pub fn transport_many(
    sys: &PfaffianSystem<Complex64>,
    paths: &[Path],
    y0: &Matrix<Complex64>,
    opts: &ContinuationOptions,
) -> Vec<Result<Matrix<Complex64>>> {
    paths.par_iter().map(|p| transport(sys, p, y0, opts).map(|r| r.0)).collect()
}

/// How the frame at the basepoint is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSeed {
    /// The solutions with identity initial data at the basepoint.
    Identity,
    /// The Euler-integral fundamental system at the basepoint (needs an
    /// admissible real chamber).
    Euler { nodes: usize },
}

/// An invertible matrix of solution columns at `x0`.
pub fn fundamental_frame(sys: &PfaffianSystem<Complex64>, x0: &[Complex64], seed: FrameSeed) -> Result<Matrix<Complex64>> {
    if x0.len() != sys.params().n() {
        return Err(Error::DimensionMismatch(format!("expected {} coordinates", sys.params().n())));
    }
    if let Some(d) = crate::pfaffian::divisor_at(x0) {
        return Err(Error::OnSingularLocus(d));
    }
    match seed {
        FrameSeed::Identity => Ok(Matrix::identity(sys.size())),
        FrameSeed::Euler { nodes } => Ok(fundamental_system_general(sys.params(), x0, nodes)?.y),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonodromyResult {
    /// `M` with `Y(after loop) = Y(before) M`.
    pub matrix: Matrix<Complex64>,
    pub eigenvalues: Vec<Complex64>,
    pub basepoint: Vec<Complex64>,
    pub frame: String,
    pub stats: TransportStats,
}

/// Monodromy of a closed loop in the given frame.
pub fn monodromy_matrix(
    sys: &PfaffianSystem<Complex64>,
    lp: &Path,
    frame: &Matrix<Complex64>,
    opts: &ContinuationOptions,
) -> Result<MonodromyResult> {
    if !lp.is_closed() {
        return Err(Error::InvalidPath("monodromy needs a closed loop".into()));
    }
    let (y1, stats) = transport(sys, lp, frame, opts)?;
    let matrix = frame.solve(&y1)?;
    let eigenvalues = matrix.eigenvalues()?;
    Ok(MonodromyResult {
        matrix,
        eigenvalues,
        basepoint: lp.basepoint(),
        frame: "columns are solutions at the basepoint; Y -> Y M".into(),
        stats,
    })
}

/// Default loop radius around a finite divisor.
pub const LOOP_RADIUS: f64 = 0.1;

/// Positively oriented loop based at `base` that encircles one divisor:
/// coordinate `i` moves radially to a circle of `radius` around the
/// divisor's position, turns once counterclockwise and returns; the other
/// coordinates stay fixed. For `Infinity(i)` the circle is centered at `0`
/// with `radius` large enough to enclose `0`, `1` and every `x_j`, so that
/// it turns once clockwise around infinity.
pub fn loop_around(base: &[Complex64], divisor: DivisorId, radius: f64) -> Result<Path> {
    let n = base.len();
    let (i, center) = match divisor {
        DivisorId::Zero(i) => (i, Complex64::new(0.0, 0.0)),
        DivisorId::One(i) => (i, Complex64::new(1.0, 0.0)),
        DivisorId::Infinity(i) => (i, Complex64::new(0.0, 0.0)),
        DivisorId::Diagonal(i, j) => (i, *base.get(j).ok_or_else(|| Error::InvalidPath("divisor out of range".into()))?),
    };
    if i >= n {
        return Err(Error::InvalidPath(format!("divisor {divisor} out of range")));
    }
    if (base[i] - center).norm() == 0.0 {
        return Err(Error::OnSingularLocus(divisor));
    }
    // points the moving coordinate has to steer around
    let mut obstacles = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    obstacles.extend(base.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, z)| *z));
    if !matches!(divisor, DivisorId::Infinity(_)) {
        obstacles.retain(|z| (z - center).norm() > 1e-300);
    }
    let entry = approach_point(base[i], center, radius, &obstacles, (base[i] - center).norm() > radius);
    let mut on_circle = base.to_vec();
    on_circle[i] = entry;
    let dir = (entry - center) / radius;
    let arc = Segment::Arc {
        base: on_circle.clone(),
        coord: i,
        center,
        radius,
        start_angle: dir.arg(),
        sweep: 2.0 * PI,
    };
    let mut segments = Vec::new();
    if (on_circle[i] - base[i]).norm() > JOIN_TOL {
        segments.push(Segment::Line { from: base.to_vec(), to: on_circle.clone() });
    }
    segments.push(arc);
    if (on_circle[i] - base[i]).norm() > JOIN_TOL {
        segments.push(Segment::Line { from: on_circle, to: base.to_vec() });
    }
    Path::new(segments)
}

/// Entry point on the circle `|z - center| = radius` for the straight leg
/// from `b`, chosen among the radial point and a ring of candidates so
/// that the leg keeps away from the obstacles (and, for a small circle, does
/// not cut through its disc). The radial point wins unless it is much worse.
fn approach_point(b: Complex64, center: Complex64, radius: f64, obstacles: &[Complex64], outside: bool) -> Complex64 {
    let clearance = |end: Complex64| {
        let c = obstacles.iter().map(|&o| segment_distance(b, end, o)).fold(f64::INFINITY, f64::min);
        if outside {
            c.min(segment_distance(b, end, center) - 0.5 * radius)
        } else {
            c
        }
    };
    let rel = b - center;
    let radial = center + rel / rel.norm() * radius;
    let r0 = clearance(radial);
    let mut best = (r0, radial);
    for k in 0..256 {
        let end = center + Complex64::from_polar(radius, f64::from(k) * PI / 128.0);
        let c = clearance(end);
        if c > best.0 {
            best = (c, end);
        }
    }
    if r0 >= 0.5 * best.0 {
        radial
    } else {
        best.1
    }
}

fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).conj() * ab).re / len2;
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Radius of a loop around infinity for `x_i` at the given base.
pub fn infinity_radius(base: &[Complex64], i: usize) -> f64 {
    let others = base.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, z)| z.norm()).fold(1.0, f64::max);
    2.0 * others.max(base[i].norm()) + 1.0
}

/// The loop used for local monodromy around `divisor`.
pub fn standard_loop(base: &[Complex64], divisor: DivisorId) -> Result<Path> {
    match divisor {
        DivisorId::Infinity(i) => loop_around(base, divisor, infinity_radius(base, i)),
        _ => loop_around(base, divisor, LOOP_RADIUS),
    }
}

/// `exp(2 pi i rho)` over the local exponents `rho`; for infinity the
/// standard loop turns clockwise around the point, so the sign flips.
pub fn predicted_eigenvalues(sys: &PfaffianSystem<Complex64>, divisor: DivisorId) -> Vec<Complex64> {
    let sign = if matches!(divisor, DivisorId::Infinity(_)) { -1.0 } else { 1.0 };
    expected_exponents(sys.params(), divisor)
        .into_iter()
        .map(|rho| (Complex64::new(0.0, sign * 2.0 * PI) * rho).exp())
        .collect()
}

/// Largest distance in an optimal pairing of two equally long lists.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let d = (0..n).map(|k| (a[k] - b[p[k]]).norm()).fold(0.0, f64::max);
            best = best.min(d);
        });
        best
    } else {
        let mut used = vec![false; n];
        let mut worst: f64 = 0.0;
        for z in a {
            let (k, d) = (0..n)
                .filter(|&k| !used[k])
                .map(|k| (k, (z - b[k]).norm()))
                .min_by(|u, v| u.1.total_cmp(&v.1))
                .expect("same length");
            used[k] = true;
            worst = worst.max(d);
        }
        worst
    }
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// Local monodromy around one divisor, compared with the exponents.
#[derive(Clone, Debug, Serialize)]
pub struct LocalMonodromy {
    pub divisor: DivisorId,
    pub eigenvalues: Vec<Complex64>,
    pub predicted: Vec<Complex64>,
    pub deviation: f64,
}

pub fn local_monodromy(
    sys: &PfaffianSystem<Complex64>,
    base: &[Complex64],
    divisor: DivisorId,
    opts: &ContinuationOptions,
) -> Result<LocalMonodromy> {
    let lp = standard_loop(base, divisor)?;
    let frame = fundamental_frame(sys, base, FrameSeed::Identity)?;
    let m = monodromy_matrix(sys, &lp, &frame, opts)?;
    let predicted = predicted_eigenvalues(sys, divisor);
    let deviation = multiset_distance(&m.eigenvalues, &predicted);
    Ok(LocalMonodromy { divisor, eigenvalues: m.eigenvalues, predicted, deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterSet;
    use crate::pfaffian::build_system;
    use crate::series::holomorphic_solution_vector_auto;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gauss() -> PfaffianSystem<Complex64> {
        build_system(&ParameterSet::from_reals(2, 1, &[0.3], &[0.45], &[0.8]).unwrap())
    }

    #[test]
    fn constant_path_keeps_data() {
        let sys = gauss();
        let x = vec![c(0.3)];
        let path = Path::new(vec![Segment::Line { from: x.clone(), to: x.clone() }]).unwrap();
        let y0 = vec![c(1.0), c(-2.0)];
        assert_eq!(integrate_path(&sys, &path, &y0, &Default::default()).unwrap(), y0);
    }

    #[test]
    fn continuation_matches_series() {
        for p in [
            ParameterSet::from_reals(2, 1, &[0.3], &[0.45], &[0.8]).unwrap(),
            ParameterSet::from_reals(3, 2, &[0.3, 0.6], &[0.45, -0.2], &[0.8, 1.7]).unwrap(),
        ] {
            let sys = build_system(&p);
            let n = p.n();
            let a: Vec<Complex64> = (0..n).map(|i| c(0.1) * (1.0 + 0.5 * i as f64)).collect();
            let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(0.2, 0.05) * (1.0 - 0.3 * i as f64)).collect();
            let ya = holomorphic_solution_vector_auto(&p, &a).unwrap();
            let yb = holomorphic_solution_vector_auto(&p, &b).unwrap();
            let path = Path::polyline(&[a, b]).unwrap();
            let y = integrate_path(&sys, &path, &ya, &ContinuationOptions::with_tol(1e-12)).unwrap();
            let scale = norm_inf(&yb);
            assert!(dist(&y, &yb) <= 1e-9 * scale, "{:e}", dist(&y, &yb));
        }
    }

    #[test]
    fn reverse_path_returns() {
        let sys = gauss();
        let a = vec![Complex64::new(0.2, 0.1)];
        let b = vec![Complex64::new(1.5, 0.7)];
        let path = Path::polyline(&[a.clone(), vec![Complex64::new(0.9, 0.5)], b]).unwrap();
        let opts = ContinuationOptions::with_tol(1e-10);
        let y0 = vec![c(1.0), Complex64::new(0.2, -0.3)];
        let y1 = integrate_path(&sys, &path, &y0, &opts).unwrap();
        let back = integrate_path(&sys, &path.reversed(), &y1, &opts).unwrap();
        assert!(dist(&back, &y0) <= 2e-10 * norm_inf(&y0).max(norm_inf(&y1)), "{:e}", dist(&back, &y0));
    }

    #[test]
    fn gauss_local_monodromy() {
        let sys = gauss();
        let base = vec![Complex64::new(0.4, 0.2)];
        let opts = ContinuationOptions::with_tol(1e-10);
        for d in [DivisorId::Zero(0), DivisorId::One(0), DivisorId::Infinity(0)] {
            let lm = local_monodromy(&sys, &base, d, &opts).unwrap();
            assert!(lm.deviation < 1e-6, "{d}: {:?} vs {:?}", lm.eigenvalues, lm.predicted);
        }
        // explicit form of the spectrum at zero: {1, exp(-2 pi i gamma)}
        let p = predicted_eigenvalues(&sys, DivisorId::Zero(0));
        let want = [c(1.0), (Complex64::new(0.0, -2.0 * PI) * 0.8).exp()];
        assert!(multiset_distance(&p, &want) < 1e-14);
    }

    #[test]
    fn loops_from_real_basepoints_avoid_other_points() {
        // radial legs would run through x = 1 (infinity) and through x = 1
        // again (zero, from the far side)
        let sys = gauss();
        let opts = ContinuationOptions::with_tol(1e-10);
        for (x, d) in [(0.4, DivisorId::Infinity(0)), (1.5, DivisorId::Zero(0)), (-0.5, DivisorId::One(0))] {
            let lm = local_monodromy(&sys, &[c(x)], d, &opts).unwrap();
            assert!(lm.deviation < 1e-6, "{d} from {x}: {:?} vs {:?}", lm.eigenvalues, lm.predicted);
        }
    }

    #[test]
    fn appell_local_monodromy() {
        let p = ParameterSet::from_reals(2, 2, &[0.3], &[0.45, 0.25], &[0.8]).unwrap();
        let sys = build_system(&p);
        let base = vec![Complex64::new(0.35, 0.1), Complex64::new(-0.3, 0.25)];
        let opts = ContinuationOptions::with_tol(1e-10);
        for d in [DivisorId::Zero(0), DivisorId::One(1), DivisorId::Diagonal(0, 1), DivisorId::Zero(1)] {
            let lm = local_monodromy(&sys, &base, d, &opts).unwrap();
            assert!(lm.deviation < 1e-6, "{d}: {:?} vs {:?}", lm.eigenvalues, lm.predicted);
        }
    }

    #[test]
    fn contractible_loop_is_trivial() {
        let sys = gauss();
        let base = vec![Complex64::new(0.4, 0.2)];
        let lp = Path::new(vec![
            Segment::Line { from: base.clone(), to: vec![Complex64::new(0.6, 0.2)] },
            Segment::Arc { base: vec![c(0.0)], coord: 0, center: Complex64::new(0.5, 0.2), radius: 0.1, start_angle: 0.0, sweep: 2.0 * PI },
            Segment::Line { from: vec![Complex64::new(0.6, 0.2)], to: base.clone() },
        ])
        .unwrap();
        let m = monodromy_matrix(&sys, &lp, &Matrix::identity(2), &ContinuationOptions::with_tol(1e-11)).unwrap();
        assert!((&m.matrix - &Matrix::identity(2)).max_abs() < 1e-9);
    }

    #[test]
    fn composition_of_loops() {
        let sys = gauss();
        let base = vec![Complex64::new(0.4, 0.2)];
        let opts = ContinuationOptions::with_tol(1e-11);
        let l0 = standard_loop(&base, DivisorId::Zero(0)).unwrap();
        let l1 = standard_loop(&base, DivisorId::One(0)).unwrap();
        let id = Matrix::identity(2);
        let m0 = monodromy_matrix(&sys, &l0, &id, &opts).unwrap().matrix;
        let m1 = monodromy_matrix(&sys, &l1, &id, &opts).unwrap().matrix;
        let m01 = monodromy_matrix(&sys, &l0.concat(&l1).unwrap(), &id, &opts).unwrap().matrix;
        assert!((&m01 - &(&m1 * &m0)).max_abs() < 1e-8);
    }

    #[test]
    fn homotopic_paths_agree() {
        let sys = gauss();
        let a = vec![Complex64::new(0.3, 0.1)];
        let b = vec![Complex64::new(0.7, 0.3)];
        let opts = ContinuationOptions::with_tol(1e-11);
        let y0 = vec![c(1.0), c(0.5)];
        let direct = integrate_path(&sys, &Path::polyline(&[a.clone(), b.clone()]).unwrap(), &y0, &opts).unwrap();
        let detour = Path::polyline(&[a, vec![Complex64::new(0.5, 0.6)], b]).unwrap();
        let other = integrate_path(&sys, &detour, &y0, &opts).unwrap();
        assert!(dist(&direct, &other) < 1e-9 * norm_inf(&direct));
    }

    #[test]
    fn near_locus_is_reported() {
        let sys = gauss();
        let path = Path::polyline(&[vec![c(0.5)], vec![c(1.5)]]).unwrap();
        let r = integrate_path(&sys, &path, &[c(1.0), c(0.0)], &Default::default());
        assert!(matches!(r, Err(Error::NearSingularLocus { .. })), "{r:?}");
    }

    #[test]
    fn euler_frame_is_invertible() {
        let p = ParameterSet::from_reals(2, 2, &[0.4], &[-0.15, -0.3], &[0.5]).unwrap();
        let sys = build_system(&p);
        let f = fundamental_frame(&sys, &[c(0.35), c(-0.25)], FrameSeed::Euler { nodes: 32 }).unwrap();
        assert!(f.try_inverse().is_ok());
    }

    #[test]
    fn path_json_roundtrip() {
        let lp = standard_loop(&[Complex64::new(0.4, 0.2)], DivisorId::One(0)).unwrap();
        let s = serde_json::to_string(&lp).unwrap();
        let back: Path = serde_json::from_str(&s).unwrap();
        assert_eq!(back, lp);
    }
}
