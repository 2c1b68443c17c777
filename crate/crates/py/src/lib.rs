//! Python bindings. Structured results come back as plain dicts and lists.

use anisotetra::expr::ExprField;
use anisotetra::geom::{self, Kind, Point3};
use anisotetra::lattice::{quotient_stencil, sigma_k, MultiIndex};
use anisotetra::quad::{self, Exponent, SeminormSpec};
use anisotetra::verify;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(anisotetra_py, DegenerateError, PyValueError);
create_exception!(anisotetra_py, InadmissibleError, PyValueError);
create_exception!(anisotetra_py, NumericalError, PyArithmeticError);

fn err(e: anisotetra::Error) -> PyErr {
    use anisotetra::Error as E;
    let msg = e.to_string();
    match e {
        E::DegenerateTetrahedron { .. } => DegenerateError::new_err(msg),
        E::InadmissiblePC { .. } => InadmissibleError::new_err(msg),
        E::IllConditionedBasis { .. } | E::GenerationFailure(_) => NumericalError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

/// `p` from a float (`math.inf` allowed) or a string such as `"inf"`.
fn exponent(p: &Bound<'_, PyAny>) -> PyResult<Exponent> {
    let text = match p.extract::<f64>() {
        Ok(x) => x.to_string(),
        Err(_) => p.extract::<String>()?,
    };
    text.parse().map_err(err)
}

fn kind_of(kind: u8) -> PyResult<Kind> {
    match kind {
        1 => Ok(Kind::Type1),
        2 => Ok(Kind::Type2),
        _ => Err(PyValueError::new_err(format!("kind must be 1 or 2, got {kind}"))),
    }
}

fn field(expr: &str, order: usize) -> PyResult<ExprField> {
    ExprField::parse(expr, order).map_err(err)
}

#[pyclass(name = "Tetrahedron", module = "anisotetra_py", frozen)]
struct PyTetrahedron {
    inner: geom::Tetrahedron,
}

#[pymethods]
impl PyTetrahedron {
    #[new]
    fn new(vertices: [[f64; 3]; 4]) -> PyResult<Self> {
        Ok(PyTetrahedron {
            inner: geom::Tetrahedron::from_coords(vertices).map_err(err)?,
        })
    }

    /// Reference element of type 1 or 2.
    #[staticmethod]
    #[pyo3(signature = (kind = 1))]
    fn reference(kind: u8) -> PyResult<Self> {
        Ok(PyTetrahedron {
            inner: kind_of(kind)?.reference().tetrahedron(),
        })
    }

    #[staticmethod]
    fn regular() -> Self {
        PyTetrahedron {
            inner: geom::Tetrahedron::regular(),
        }
    }

    #[getter]
    fn vertices(&self) -> [[f64; 3]; 4] {
        self.inner.v.map(|p| [p.x, p.y, p.z])
    }

    fn volume(&self) -> PyResult<f64> {
        geom::volume(&self.inner).map_err(err)
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    /// `(R_T, H_T)`.
    fn quality(&self) -> PyResult<(f64, f64)> {
        geom::quality(&self.inner).map_err(err)
    }

    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &geom::classify(&self.inner).map_err(err)?)
    }

    fn standard_position<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &geom::standard_position(&self.inner).map_err(err)?)
    }

    /// `A`, `D`, `X`, `Y` and their closed-form norms.
    fn matrices<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let sp = geom::standard_position(&self.inner).map_err(err)?;
        to_py(py, &geom::matrices(&sp))
    }

    /// Heights, angles, `R_T`, `H_T` and the classification.
    fn geometry<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &geom::angles(&self.inner).map_err(err)?)
    }

    fn max_angle(&self) -> PyResult<f64> {
        Ok(geom::angles(&self.inner).map_err(err)?.max_angle)
    }

    #[pyo3(signature = (gamma_max, eps = geom::ANGLE_EPS))]
    fn mac(&self, gamma_max: f64, eps: f64) -> PyResult<bool> {
        geom::mac_check_with_tolerance(&self.inner, gamma_max, eps).map_err(err)
    }

    /// Points of the degree-`k` lattice.
    fn lattice(&self, k: usize) -> PyResult<Vec<[f64; 3]>> {
        Ok(sigma_k(&self.inner, k)
            .map_err(err)?
            .into_iter()
            .map(|n| [n.point.x, n.point.y, n.point.z])
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Tetrahedron({:?})", self.vertices())
    }
}

/// `I^k v` evaluated at `points`, with `v` given as an expression in x, y, z.
#[pyfunction]
fn interpolate(expr: &str, tet: &PyTetrahedron, k: usize, points: Vec<[f64; 3]>) -> PyResult<Vec<f64>> {
    let v = field(expr, 0)?;
    let it = anisotetra::interp::interpolate(&v, &tet.inner, k).map_err(err)?;
    Ok(points.iter().map(|p| it.eval(&Point3::from(*p))).collect())
}

/// Error `|v - I^k v|_{m,p}` and its ratio to the anisotropic bound.
#[pyfunction]
fn error_ratio<'py>(
    py: Python<'py>,
    expr: &str,
    tet: &PyTetrahedron,
    k: usize,
    m: usize,
    p: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = exponent(p)?;
    let v = field(expr, k + 1)?;
    to_py(py, &verify::error_ratio(&v, &tet.inner, k, m, p).map_err(err)?)
}

/// `|v|_{m,p,T}` with multinomial weights.
#[pyfunction]
fn seminorm(expr: &str, tet: &PyTetrahedron, m: usize, p: &Bound<'_, PyAny>) -> PyResult<f64> {
    let spec = SeminormSpec::new(m, exponent(p)?);
    quad::seminorm(&field(expr, m)?, &tet.inner, &spec).map_err(err)
}

/// `int_T v` with the collapsed Gauss rule exact for `degree`.
#[pyfunction]
#[pyo3(signature = (expr, tet, degree = 8))]
fn integrate(expr: &str, tet: &PyTetrahedron, degree: usize) -> PyResult<f64> {
    let v = field(expr, 0)?;
    let rule = quad::rule_for_degree(degree).map_err(err)?;
    rule.integrate(&tet.inner, |x| anisotetra::field::ScalarField::eval(&v, x))
        .map_err(err)
}

/// Difference-quotient stencil for offset `delta`.
#[pyfunction]
fn stencil<'py>(py: Python<'py>, delta: [u32; 3]) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &quotient_stencil(MultiIndex(delta)))
}

/// Maximum angle condition experiment in both directions.
#[pyfunction]
#[pyo3(signature = (n, gamma_max, seed = 1))]
fn mac_experiment<'py>(py: Python<'py>, n: usize, gamma_max: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| verify::mac_experiment(n, gamma_max, seed)).map_err(err)?;
    to_py(py, &r)
}

/// Error ratios on `diag(alpha) T_ref` over the built-in field corpus.
#[pyfunction]
#[pyo3(signature = (k, m, p, alphas, kind = 1, seed = 1))]
fn squeeze_sweep<'py>(
    py: Python<'py>,
    k: usize,
    m: usize,
    p: &Bound<'py, PyAny>,
    alphas: Vec<[f64; 3]>,
    kind: u8,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = exponent(p)?;
    let kind = kind_of(kind)?;
    let r = py
        .detach(|| {
            let fields = verify::corpus(k, seed)?;
            verify::squeeze_sweep(k, m, p, &alphas, &fields, kind)
        })
        .map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
fn anisotetra_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyTetrahedron>()?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(error_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(seminorm, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(stencil, m)?)?;
    m.add_function(wrap_pyfunction!(mac_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(squeeze_sweep, m)?)?;
    m.add("DegenerateError", py.get_type::<DegenerateError>())?;
    m.add("InadmissibleError", py.get_type::<InadmissibleError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    Ok(())
}
