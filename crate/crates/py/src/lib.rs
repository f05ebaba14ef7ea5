//! Python bindings for circle domains, reflection-group ledgers, coefficient
//! extension and the grid Beltrami solver.

use circdom::beltrami::InvariantExtension;
use circdom::field::{Bbox, GridField};
use circdom::geometry::{Circle, CircleDomain};
use circdom::harness::{self, builtins, pipelines, Scene};
use circdom::schottky::{self, AreaLedger, Reduction};
use circdom::solver::{self, SolveOptions, SolveResult};
use num_complex::Complex64;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: circdom::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts a serializable report into Python objects via `json.loads`.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

#[pyclass(name = "Circle", frozen, from_py_object)]
#[derive(Clone)]
struct PyCircle {
    inner: Circle,
}

#[pymethods]
impl PyCircle {
    #[new]
    fn new(center: Complex64, radius: f64) -> PyResult<Self> {
        Circle::new(center, radius).map(|inner| PyCircle { inner }).map_err(err)
    }

    #[getter]
    fn center(&self) -> Complex64 {
        self.inner.center()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius()
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn reflect(&self, z: Complex64) -> PyResult<Complex64> {
        self.inner.reflect(z).map_err(err)
    }

    fn sample(&self, n: usize) -> Vec<Complex64> {
        self.inner.sample(n)
    }

    fn __repr__(&self) -> String {
        format!("Circle({}, {})", self.inner.center(), self.inner.radius())
    }
}

#[pyclass(name = "CircleDomain", frozen)]
struct PyDomain {
    inner: CircleDomain,
}

#[pymethods]
impl PyDomain {
    #[new]
    fn new(circles: Vec<PyCircle>) -> Self {
        PyDomain {
            inner: CircleDomain::new(circles.into_iter().map(|c| c.inner).collect()),
        }
    }

    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        builtins::domain(name).map(|inner| PyDomain { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        CircleDomain::from_json(s).map(|inner| PyDomain { inner }).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn circles(&self) -> Vec<PyCircle> {
        self.inner.circles.iter().map(|&inner| PyCircle { inner }).collect()
    }

    fn is_valid(&self) -> bool {
        self.inner.validate().is_valid()
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate())
    }

    fn in_fundamental_domain(&self, z: Complex64) -> bool {
        self.inner.in_fundamental_domain(z)
    }

    /// `(word, representative)` with `z = T_word(representative)`, or `None`
    /// when the point does not reduce to a finite point of the fundamental domain.
    #[pyo3(signature = (z, max_depth = schottky::DEFAULT_REDUCTION_DEPTH))]
    fn reduce(&self, z: Complex64, max_depth: usize) -> Option<(Vec<usize>, Complex64)> {
        match schottky::reduce_to_fundamental(&self.inner, z, max_depth) {
            Reduction::Resolved { word, representative } => Some((word.letters().to_vec(), representative)),
            _ => None,
        }
    }

    /// Applies the group element `R_{w1} ∘ ⋯ ∘ R_{wk}` to `z`.
    fn apply_word(&self, word: Vec<usize>, z: Complex64) -> PyResult<Complex64> {
        let w = schottky::ReducedWord::new(word).map_err(err)?;
        schottky::apply_word(&w, &self.inner, z).map_err(err)
    }

    fn contraction_ratio(&self) -> f64 {
        schottky::contraction_ratio(&self.inner)
    }

    /// Extends a builtin coefficient (`zero`, `invariant-constant`, `control`)
    /// and samples it on a square grid.
    #[pyo3(signature = (name, half_width = 4.5, n = 256))]
    fn builtin_coefficient(&self, name: &str, half_width: f64, n: usize) -> PyResult<PyField> {
        let bbox = Bbox::square(half_width).map_err(err)?;
        builtins::Coefficient::from_name(name)
            .and_then(|c| c.grid(&self.inner, bbox, n))
            .map(|inner| PyField { inner })
            .map_err(err)
    }

    /// Invariantly extends a field given on the fundamental domain, read
    /// cell by cell, onto the field's own grid.
    fn extend(&self, mu: &PyField) -> PyResult<(PyField, usize)> {
        let ext = InvariantExtension::new(&self.inner, builtins::nearest_cell(&mu.inner));
        let grid = ext.sample(mu.inner.bbox(), mu.inner.nx(), mu.inner.ny()).map_err(err)?;
        Ok((PyField { inner: grid.field }, grid.unresolved_cells))
    }

    fn render_svg(&self) -> PyResult<String> {
        Scene::domain(&self.inner).and_then(|s| harness::render_svg(&s)).map_err(err)
    }
}

#[pyclass(name = "AreaLedger", frozen)]
struct PyLedger {
    inner: AreaLedger,
}

#[pymethods]
impl PyLedger {
    #[new]
    #[pyo3(signature = (domain, depth = schottky::DEFAULT_DEPTH))]
    fn new(domain: &PyDomain, depth: usize) -> PyResult<Self> {
        AreaLedger::build(&domain.inner, depth).map(|inner| PyLedger { inner }).map_err(err)
    }

    #[getter]
    fn level_totals(&self) -> Vec<f64> {
        self.inner.level_totals.clone()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn __len__(&self) -> usize {
        self.inner.entries.len()
    }

    /// `(word, area)` of the `i`-th tile in length-lex order.
    fn entry(&self, i: usize) -> PyResult<(Vec<usize>, f64)> {
        self.inner
            .entries
            .get(i)
            .map(|e| (e.word.letters().to_vec(), e.area))
            .ok_or_else(|| PyIndexError::new_err(format!("entry {i} out of range")))
    }

    fn tail_bound(&self, level: usize) -> PyResult<f64> {
        self.inner.tail_bound(level).map_err(err)
    }

    fn tail_indices(&self, n_max: usize) -> PyResult<Vec<usize>> {
        self.inner.tail_indices(n_max).map_err(err)
    }
}

#[pyclass(name = "GridField", frozen)]
struct PyField {
    inner: GridField,
}

#[pymethods]
impl PyField {
    /// Row-major values, rows by increasing y, over `(x0, y0, x1, y1)`.
    #[new]
    fn new(bbox: (f64, f64, f64, f64), nx: usize, ny: usize, values: Vec<Complex64>) -> PyResult<Self> {
        let b = Bbox::new(bbox.0, bbox.1, bbox.2, bbox.3).map_err(err)?;
        GridField::new(b, nx, ny, values).map(|inner| PyField { inner }).map_err(err)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        GridField::read_file(path).map(|inner| PyField { inner }).map_err(err)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        self.inner.write_file(path).map_err(err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.nx(), self.inner.ny())
    }

    #[getter]
    fn bbox(&self) -> (f64, f64, f64, f64) {
        let b = self.inner.bbox();
        (b.x0, b.y0, b.x1, b.y1)
    }

    fn values(&self) -> Vec<Complex64> {
        self.inner.values().to_vec()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<Complex64> {
        if i >= self.inner.nx() || j >= self.inner.ny() {
            return Err(PyIndexError::new_err(format!("cell ({i}, {j}) out of range")));
        }
        Ok(self.inner.get(i, j))
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    /// Cell-area measure of `{|μ| > 1 − ε}` for each `ε`.
    fn superlevel_measure(&self, epsilons: Vec<f64>) -> Vec<f64> {
        self.inner.superlevel_measure(&epsilons).measures
    }
}

#[pyclass(name = "Solution", frozen)]
struct PySolution {
    inner: SolveResult,
}

#[pymethods]
impl PySolution {
    /// `f(z)` of the principal solution.
    fn __call__(&self, z: Complex64) -> Complex64 {
        self.inner.map().eval(z)
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn convergence_ratio(&self) -> f64 {
        self.inner.convergence_ratio
    }

    #[getter]
    fn warning(&self) -> Option<String> {
        self.inner.warning.clone()
    }

    fn displacement(&self) -> PyField {
        PyField {
            inner: self.inner.displacement.clone(),
        }
    }

    /// Circle fits of the images of the domain's circles.
    fn circle_images<'py>(&self, py: Python<'py>, domain: &PyDomain) -> PyResult<Bound<'py, PyAny>> {
        let f = self.inner.map();
        let fits = pipelines::circle_images(&domain.inner, |z| f.eval(z)).map_err(err)?;
        to_py(py, &fits)
    }
}

#[pyfunction]
#[pyo3(signature = (mu, tol = solver::DEFAULT_TOL, max_iter = solver::DEFAULT_MAX_ITER))]
fn solve_beltrami(py: Python<'_>, mu: &PyField, tol: f64, max_iter: usize) -> PyResult<PySolution> {
    let opts = SolveOptions { tol, max_iter };
    py.detach(|| solver::solve_beltrami(&mu.inner, opts))
        .map(|inner| PySolution { inner })
        .map_err(err)
}

/// Sibner's pipeline for `identity`, `shear:<re>[,<im>]` or `radial:<a>`.
#[pyfunction]
#[pyo3(signature = (domain, map, n = 512, half_width = 4.5))]
fn sibner<'py>(py: Python<'py>, domain: &PyDomain, map: &str, n: usize, half_width: f64) -> PyResult<Bound<'py, PyAny>> {
    let g = pipelines::TestMap::parse(map).map_err(err)?;
    let opts = pipelines::SibnerOptions {
        grid: pipelines::GridSpec { half_width, n },
        ..Default::default()
    };
    let rep = py.detach(|| pipelines::sibner_pipeline(&domain.inner, g, opts)).map_err(err)?;
    to_py(py, &rep)
}

/// The zero-area construction on the builtin domain with a fat Cantor set.
#[pyfunction]
#[pyo3(signature = (n = 256, rungs = 4))]
fn zero_area<'py>(py: Python<'py>, n: usize, rungs: usize) -> PyResult<Bound<'py, PyAny>> {
    let opts = pipelines::ZeroAreaOptions {
        grid: pipelines::GridSpec { half_width: 4.0, n },
        ladder_rungs: rungs,
        ..Default::default()
    };
    let rep = py
        .detach(|| pipelines::zero_area_probe(&builtins::zero_area_domain(), opts))
        .map_err(err)?;
    to_py(py, &rep)
}

/// `(domain, verification report)` of the accumulating-circles example.
#[pyfunction]
fn accumulation_example<'py>(py: Python<'py>, k_max: usize) -> PyResult<(PyDomain, Bound<'py, PyAny>)> {
    let cfg = harness::generate_accumulation_example(k_max).map_err(err)?;
    let rep = harness::verify_accumulation(&cfg);
    Ok((PyDomain { inner: cfg.domain() }, to_py(py, &rep)?))
}

#[pymodule]
fn circdom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircle>()?;
    m.add_class::<PyDomain>()?;
    m.add_class::<PyLedger>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_beltrami, m)?)?;
    m.add_function(wrap_pyfunction!(sibner, m)?)?;
    m.add_function(wrap_pyfunction!(zero_area, m)?)?;
    m.add_function(wrap_pyfunction!(accumulation_example, m)?)?;
    Ok(())
}
