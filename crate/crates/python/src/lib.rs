//! Python bindings: meshes, the exact orthogonality lemmas and convergence
//! studies. Reports come back as plain dicts and lists.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use tetsuper::analysis::{convergence_study as run_study, Problem, StudyOptions};
use tetsuper::exactmath::{fraction_string, parse_fraction, MultiPoly};
use tetsuper::lift::LiftStencil;
use tetsuper::mesh::{Mesh, NodeKind};
use tetsuper::orthogonality::{mesh_defects, orthogonality_defect, verify_all_lemmas};
use tetsuper::report::{render_convergence, Format, View};
use tetsuper::system::{LoadModel, DEFAULT_CG_TOL};
use tetsuper::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotConverged(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_kind(kind: &str) -> PyResult<NodeKind> {
    NodeKind::parse(kind).ok_or_else(|| {
        PyValueError::new_err(format!("unknown node class `{kind}` (expected cube-mid, square-mid, edge-mid or vertex)"))
    })
}

/// `{(a, b, c): "p/q", ...}` as an exact polynomial.
fn parse_poly(terms: Terms) -> PyResult<MultiPoly> {
    let mut p = MultiPoly::zero();
    for ((a, b, c), coeff) in terms {
        let v = parse_fraction(&coeff).ok_or_else(|| PyValueError::new_err(format!("bad fraction `{coeff}`")))?;
        p.add_term([a, b, c], v);
    }
    Ok(p)
}

/// Polynomial coefficients keyed by exponent triple.
type Terms = BTreeMap<(u32, u32, u32), String>;

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Uniform Kuhn mesh of the unit cube with `n` cubes per axis.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: Mesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self { inner: Mesh::uniform(n).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_tets(&self) -> usize {
        self.inner.tets().len()
    }

    #[getter]
    fn num_cubes(&self) -> usize {
        self.inner.num_cubes()
    }

    fn node_coords(&self, node: usize) -> PyResult<[f64; 3]> {
        self.check(node)?;
        Ok(self.inner.node_coords(node))
    }

    /// The ten P2 node indices of tetrahedron `t` (vertices, then edges).
    fn tet_nodes(&self, t: usize) -> PyResult<[u32; 10]> {
        self.inner.tet_nodes().get(t).copied().ok_or_else(|| {
            PyValueError::new_err(format!("tetrahedron {t} out of range ({} tetrahedra)", self.inner.tets().len()))
        })
    }

    /// `(class, interior)` of a node.
    fn classify_node(&self, node: usize) -> PyResult<(&'static str, bool)> {
        let c = self.inner.classify_node(node).map_err(to_py)?;
        Ok((c.kind.name(), c.interior))
    }

    fn support_patch(&self, node: usize) -> PyResult<Vec<usize>> {
        self.inner.support_patch(node).map_err(to_py)
    }

    fn interior_nodes(&self) -> Vec<usize> {
        self.inner.interior_nodes().collect()
    }

    /// Interior-node defects of `(∇(p − I_h p), ∇φ_j)` for a cubic given as
    /// `{(a, b, c): "p/q"}`.
    fn orthogonality_defects(&self, terms: Terms) -> PyResult<Vec<(usize, f64)>> {
        mesh_defects(&self.inner, &parse_poly(terms)?).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(n={}, nodes={}, tets={})", self.inner.n(), self.inner.num_nodes(), self.inner.tets().len())
    }
}

impl PyMesh {
    fn check(&self, node: usize) -> PyResult<()> {
        let count = self.inner.num_nodes();
        if node < count {
            Ok(())
        } else {
            Err(to_py(Error::NodeOutOfRange { index: node, count }))
        }
    }
}

/// All 80 exact orthogonality identities as a list of
/// `{"class", "monomial", "per_tet", "total"}` with fractions as strings.
#[pyfunction]
fn verify_lemmas(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    json_loads(py, &verify_all_lemmas().to_json())
}

/// Exact patch defect of a polynomial for one node class:
/// `{"total": "p/q", "per_tet": [...]}`.
#[pyfunction]
fn orthogonality_defect_of<'py>(
    py: Python<'py>,
    kind: &str,
    terms: Terms,
) -> PyResult<Bound<'py, PyDict>> {
    let d = orthogonality_defect(parse_kind(kind)?, &parse_poly(terms)?);
    let out = PyDict::new(py);
    out.set_item("total", fraction_string(&d.total))?;
    out.set_item("per_tet", PyList::new(py, d.per_tet.iter().map(fraction_string))?)?;
    Ok(out)
}

fn options(
    cg_tol: f64,
    load_degree: usize,
    error_degree: usize,
    load: &str,
    lift: bool,
    stencil: &str,
) -> PyResult<StudyOptions> {
    let load = LoadModel::parse(load)
        .ok_or_else(|| PyValueError::new_err(format!("unknown load model `{load}` (expected interpolated or quadrature)")))?;
    let stencil = LiftStencil::parse(stencil)
        .ok_or_else(|| PyValueError::new_err(format!("unknown stencil `{stencil}` (expected kuhn or corner)")))?;
    Ok(StudyOptions { cg_tol, max_iter: None, load_degree, error_degree, load, lift, stencil })
}

/// Run a convergence study. With `format=None` the report is returned as a
/// dict; otherwise as text in `"table"`, `"csv"` or `"json"` form.
#[pyfunction]
#[pyo3(signature = (
    problem, first = 2, last = 5, *, cg_tol = DEFAULT_CG_TOL, load_degree = 6, error_degree = 8,
    load = "interpolated", lift = true, stencil = "kuhn", format = None
))]
#[allow(clippy::too_many_arguments)]
fn convergence_study<'py>(
    py: Python<'py>,
    problem: &str,
    first: usize,
    last: usize,
    cg_tol: f64,
    load_degree: usize,
    error_degree: usize,
    load: &str,
    lift: bool,
    stencil: &str,
    format: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let problem: Problem = problem.parse().map_err(to_py)?;
    let opts = options(cg_tol, load_degree, error_degree, load, lift, stencil)?;
    let report = py.detach(|| run_study(problem, first, last, &opts)).map_err(to_py)?;
    match format {
        None => json_loads(py, &render_convergence(&report, Format::Json, View::All)),
        Some(f) => {
            let f: Format = f.parse().map_err(to_py)?;
            Ok(render_convergence(&report, f, View::All).into_pyobject(py)?.into_any())
        }
    }
}

#[pymodule]
#[pyo3(name = "tetsuper")]
fn tetsuper_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(verify_lemmas, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality_defect_of, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
