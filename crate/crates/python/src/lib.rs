//! Python bindings: parameter sets, series evaluation, the Pfaffian system,
//! Euler fundamental systems, monodromy and the isomonodromy checks.
//!
//! Matrices cross the boundary as nested lists of Python `complex`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fln::continuation::{self, ContinuationOptions, FrameSeed, Path};
use fln::euler::{self, ThomaeRep};
use fln::isomono;
use fln::pfaffian::{self, DivisorId};
use fln::{acceptance, series, Matrix, ParamsDoc};

create_exception!(fln_py, FlnError, PyException);

fn err(e: fln::Error) -> PyErr {
    FlnError::new_err(e.to_string())
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for fln::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn rows(m: &Matrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn parse_divisor(s: &str) -> PyResult<DivisorId> {
    s.parse().py()
}

/// Parameters `(L, N, alpha, beta, gamma)`; `alpha` and `gamma` have length
/// `L-1` and `beta` length `N`.
#[pyclass(name = "ParameterSet", module = "fln_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParameterSet {
    inner: fln::ParameterSet<Complex64>,
    /// Original document, kept so that rational entries stay exact.
    doc: ParamsDoc,
}

#[pymethods]
impl PyParameterSet {
    #[new]
    fn new(l: usize, n: usize, alpha: Vec<Complex64>, beta: Vec<Complex64>, gamma: Vec<Complex64>) -> PyResult<Self> {
        let inner = fln::ParameterSet::new(l, n, alpha, beta, gamma).py()?;
        let doc = ParamsDoc::from(&inner);
        Ok(PyParameterSet { inner, doc })
    }

    /// Parse the JSON parameter document (`{"num", "den"}` entries are exact).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc = ParamsDoc::from_json(text).py()?;
        let inner = doc.to_complex().py()?;
        Ok(PyParameterSet { inner, doc })
    }

    fn to_json(&self) -> PyResult<String> {
        self.doc.to_json().py()
    }

    #[getter(L)]
    fn l(&self) -> usize {
        self.inner.l()
    }

    #[getter(N)]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    #[getter]
    fn alpha(&self) -> Vec<Complex64> {
        self.inner.alpha().to_vec()
    }

    #[getter]
    fn beta(&self) -> Vec<Complex64> {
        self.inner.beta().to_vec()
    }

    #[getter]
    fn gamma(&self) -> Vec<Complex64> {
        self.inner.gamma().to_vec()
    }

    fn is_exact(&self) -> bool {
        self.doc.to_rational().is_some()
    }

    fn __repr__(&self) -> String {
        format!("ParameterSet(L={}, N={}, alpha={:?}, beta={:?}, gamma={:?})", self.l(), self.n(), self.alpha(), self.beta(), self.gamma())
    }
}

/// Residue matrices of the Pfaffian system.
#[pyclass(name = "PfaffianSystem", module = "fln_py", frozen)]
struct PyPfaffianSystem {
    inner: fln::PfaffianSystem<Complex64>,
}

#[pymethods]
impl PyPfaffianSystem {
    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn e(&self, i: usize) -> PyResult<Vec<Vec<Complex64>>> {
        self.check(i)?;
        Ok(rows(self.inner.e(i)))
    }

    fn f(&self, i: usize) -> PyResult<Vec<Vec<Complex64>>> {
        self.check(i)?;
        Ok(rows(self.inner.f(i)))
    }

    fn g(&self, i: usize, j: usize) -> PyResult<Vec<Vec<Complex64>>> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(FlnError::new_err("g(i, j) needs i != j"));
        }
        Ok(rows(self.inner.g(i, j)))
    }

    /// Residue along a divisor such as `"x1=0"`, `"x2=inf"` or `"x1=x2"`.
    fn residue(&self, divisor: &str) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows(&self.inner.residue(parse_divisor(divisor)?).py()?))
    }

    fn residue_spectrum(&self, divisor: &str) -> PyResult<Vec<Complex64>> {
        self.inner.residue_spectrum(parse_divisor(divisor)?).py()
    }

    /// Connection matrices `M_i(x)`, one per coordinate.
    fn connection(&self, x: Vec<Complex64>) -> PyResult<Vec<Vec<Vec<Complex64>>>> {
        Ok(self.inner.connection_at(&x).py()?.iter().map(rows).collect())
    }

    /// Relative size of the curvature at `x` (floating point).
    fn integrability_residual(&self, x: Vec<Complex64>) -> PyResult<f64> {
        self.inner.integrability_residual_relative(&x).py()
    }
}

impl PyPfaffianSystem {
    fn check(&self, i: usize) -> PyResult<()> {
        if i < self.inner.params().n() {
            Ok(())
        } else {
            Err(FlnError::new_err(format!("coordinate index {i} out of range")))
        }
    }
}

#[pyfunction]
fn build_system(p: &PyParameterSet) -> PyPfaffianSystem {
    PyPfaffianSystem { inner: fln::build_system(&p.inner) }
}

/// Exact flatness check; needs rational parameters and a rational point
/// given as `(num, den)` pairs.
#[pyfunction]
fn is_flat_exact(p: &PyParameterSet, x: Vec<(i64, i64)>) -> PyResult<bool> {
    let Some(exact) = p.doc.to_rational() else {
        return Err(FlnError::new_err("parameters are not rational"));
    };
    let sys = fln::build_system(&exact.py()?);
    let x: Vec<fln::Rational> = x.iter().map(|&(a, b)| fln::rat(a, b)).collect();
    sys.is_flat(&x).py()
}

/// `F(x)`: returns `(value, truncation_order, tail_bound)`. With `order`
/// the series is cut there, otherwise the order grows until `tol`.
#[pyfunction]
#[pyo3(signature = (p, x, order=None, tol=series::AUTO_REL_TOL))]
fn eval_series(p: &PyParameterSet, x: Vec<Complex64>, order: Option<usize>, tol: f64) -> PyResult<(Complex64, usize, f64)> {
    let v = match order {
        Some(k) => series::eval_series(&p.inner, &x, k),
        None => series::eval_series_auto(&p.inner, &x, tol),
    }
    .py()?;
    Ok((v.value, v.truncation_order, v.tail_bound))
}

/// The holomorphic solution vector at `x` (length `rank`).
#[pyfunction]
fn holomorphic_solution(p: &PyParameterSet, x: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    series::holomorphic_solution_vector_auto(&p.inner, &x).py()
}

#[pyfunction]
fn expected_exponents(p: &PyParameterSet, divisor: &str) -> PyResult<Vec<Complex64>> {
    Ok(pfaffian::expected_exponents(&p.inner, parse_divisor(divisor)?))
}

/// Euler-integral fundamental system at `x`; `rep` is `"general"`,
/// `"single"` or `"cyclic"` (the last two need `N = 1`).
#[pyfunction]
#[pyo3(signature = (p, x, nodes=euler::DEFAULT_NODES, rep="general"))]
fn fundamental_system<'py>(py: Python<'py>, p: &PyParameterSet, x: Vec<Complex64>, nodes: usize, rep: &str) -> PyResult<Bound<'py, PyDict>> {
    let fs = match rep {
        "general" => euler::fundamental_system_general(&p.inner, &x, nodes),
        "single" | "cyclic" => {
            let Some(&x0) = x.first() else { return Err(FlnError::new_err("empty point")) };
            let r = if rep == "single" { ThomaeRep::SingleSimplex } else { ThomaeRep::CyclicSimplices };
            euler::fundamental_system_thomae(&p.inner, x0, nodes, r)
        }
        other => return Err(FlnError::new_err(format!("unknown representation {other:?}"))),
    }
    .py()?;
    let d = PyDict::new(py);
    d.set_item("y", rows(&fs.y))?;
    d.set_item("labels", fs.labels.iter().map(|l| format!("{l:?}")).collect::<Vec<_>>())?;
    d.set_item("scaled_determinant", fs.scaled_determinant())?;
    d.set_item("error_estimate", fs.error_estimate)?;
    Ok(d)
}

/// Continues the holomorphic solution along a polyline of waypoints.
#[pyfunction]
#[pyo3(signature = (p, waypoints, tol=acceptance::ODE_TOL))]
fn continue_solution(p: &PyParameterSet, waypoints: Vec<Vec<Complex64>>, tol: f64) -> PyResult<Vec<Complex64>> {
    let path = Path::polyline(&waypoints).py()?;
    let y0 = series::holomorphic_solution_vector_auto(&p.inner, &path.basepoint()).py()?;
    let sys = fln::build_system(&p.inner);
    continuation::integrate_path(&sys, &path, &y0, &ContinuationOptions::with_tol(tol)).py()
}

/// Local monodromy around `divisor` from `base`, in the frame with identity
/// initial data (`Y -> Y M`).
#[pyfunction]
#[pyo3(signature = (p, base, divisor, tol=acceptance::ODE_TOL))]
fn monodromy<'py>(py: Python<'py>, p: &PyParameterSet, base: Vec<Complex64>, divisor: &str, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let d = parse_divisor(divisor)?;
    let sys = fln::build_system(&p.inner);
    let frame = continuation::fundamental_frame(&sys, &base, FrameSeed::Identity).py()?;
    let lp = continuation::standard_loop(&base, d).py()?;
    let m = continuation::monodromy_matrix(&sys, &lp, &frame, &ContinuationOptions::with_tol(tol)).py()?;
    let predicted = continuation::predicted_eigenvalues(&sys, d);
    let out = PyDict::new(py);
    out.set_item("matrix", rows(&m.matrix))?;
    out.set_item("deviation", continuation::multiset_distance(&m.eigenvalues, &predicted))?;
    out.set_item("eigenvalues", m.eigenvalues)?;
    out.set_item("predicted", predicted)?;
    Ok(out)
}

/// `max |dA/du_i - dB_i/dz + [A, B_i]|` at `u = 1/x` (`i` is 1-based).
#[pyfunction]
#[pyo3(signature = (p, x, i, z, step=acceptance::LAX_STEP))]
fn lax_residual(p: &PyParameterSet, x: Vec<Complex64>, i: usize, z: Complex64, step: f64) -> PyResult<f64> {
    let u: Vec<Complex64> = x.iter().map(|v| 1.0 / v).collect();
    let sol = isomono::series_solution(&p.inner);
    isomono::lax_compatibility_residual(&p.inner.to_isomonodromic(), &u, i, z, step, &sol).py()
}

/// Hamiltonian residual of the particular solution on a grid of points:
/// returns `(hamilton_residual, q_consistency)`.
#[pyfunction]
#[pyo3(signature = (p, grid, step=acceptance::LAX_STEP))]
fn hamiltonian_check(p: &PyParameterSet, grid: Vec<Vec<Complex64>>, step: f64) -> PyResult<(f64, f64)> {
    let sol = isomono::series_solution(&p.inner);
    let r = isomono::verify_particular_solution(&p.inner, &grid, step, &sol).py()?;
    Ok((r.hamilton_residual, r.q_consistency))
}

/// Runs the acceptance suite; one dict per criterion.
#[pyfunction]
#[pyo3(signature = (seed=acceptance::DEFAULT_SEED))]
fn run_acceptance<'py>(py: Python<'py>, seed: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = py.detach(|| acceptance::run_all(seed));
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("id", r.id)?;
            d.set_item("name", r.name)?;
            d.set_item("observed", r.observed)?;
            d.set_item("tolerance", r.tolerance)?;
            d.set_item("passed", r.passed)?;
            d.set_item("detail", &r.detail)?;
            d.set_item("line", r.line())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn fln_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FlnError", m.py().get_type::<FlnError>())?;
    m.add_class::<PyParameterSet>()?;
    m.add_class::<PyPfaffianSystem>()?;
    m.add_function(wrap_pyfunction!(build_system, m)?)?;
    m.add_function(wrap_pyfunction!(is_flat_exact, m)?)?;
    m.add_function(wrap_pyfunction!(eval_series, m)?)?;
    m.add_function(wrap_pyfunction!(holomorphic_solution, m)?)?;
    m.add_function(wrap_pyfunction!(expected_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_system, m)?)?;
    m.add_function(wrap_pyfunction!(continue_solution, m)?)?;
    m.add_function(wrap_pyfunction!(monodromy, m)?)?;
    m.add_function(wrap_pyfunction!(lax_residual, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_acceptance, m)?)?;
    Ok(())
}
