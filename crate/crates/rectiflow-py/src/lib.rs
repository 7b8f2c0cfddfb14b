//! Python bindings: thin wrappers over the core types plus module-level
//! functions mirroring the library entry points. Invalid input surfaces as
//! ValueError, numerical failures as RuntimeError; reports come back as
//! plain dicts so the Python side needs no wrapper classes for output.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rectiflow as rf;
use rf::{DiffVar, Expression, FlowQuery, Interval, SpatialBox, Tolerances, VectorFieldSpec};

fn to_py(e: rf::Error) -> PyErr {
    match e {
        rf::Error::Syntax { .. }
        | rf::Error::Dimension { .. }
        | rf::Error::InvalidInput(_)
        | rf::Error::MissingInverse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn interval(pair: (f64, f64)) -> PyResult<Interval> {
    Interval::new(pair.0, pair.1).map_err(to_py)
}

fn boxed(axes: Vec<(f64, f64)>) -> PyResult<SpatialBox> {
    let axes = axes
        .into_iter()
        .map(|(lo, hi)| Interval::new(lo, hi))
        .collect::<rf::Result<Vec<_>>>()
        .map_err(to_py)?;
    SpatialBox::new(axes).map_err(to_py)
}

fn parse_all(sources: &[String], dim: usize) -> PyResult<Vec<Expression>> {
    sources.iter().map(|s| Expression::parse(s, dim)).collect::<rf::Result<Vec<_>>>().map_err(to_py)
}

fn tol_of(t: Option<&PyTolerances>) -> Tolerances {
    t.map(|p| p.inner.clone()).unwrap_or_default()
}

#[pyclass(name = "Expression")]
struct PyExpression {
    inner: Expression,
}

#[pymethods]
impl PyExpression {
    #[new]
    #[pyo3(signature = (src, dim=1))]
    fn new(src: &str, dim: usize) -> PyResult<Self> {
        Ok(PyExpression { inner: Expression::parse(src, dim).map_err(to_py)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, t: f64, x: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(t, &x).map_err(to_py)
    }

    /// Symbolic derivative with respect to "t" or "x1".."xn".
    fn derivative(&self, var: &str) -> PyResult<PyExpression> {
        let v = if var == "t" {
            DiffVar::Time
        } else if let Some(k) = var.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if k == 0 || k > self.inner.dim() {
                return Err(PyValueError::new_err(format!(
                    "no variable {var} in dimension {}",
                    self.inner.dim()
                )));
            }
            DiffVar::Spatial(k - 1)
        } else {
            return Err(PyValueError::new_err(format!("unknown variable {var:?}")));
        };
        Ok(PyExpression { inner: self.inner.differentiate(v) })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression(\"{}\", dim={})", self.inner, self.inner.dim())
    }
}

#[pyclass(name = "Tolerances")]
struct PyTolerances {
    inner: Tolerances,
}

#[pymethods]
impl PyTolerances {
    #[new]
    #[pyo3(signature = (rtol=1e-9, atol=1e-12, blowup_norm=1e8, min_step=None))]
    fn new(rtol: f64, atol: f64, blowup_norm: f64, min_step: Option<f64>) -> PyResult<Self> {
        let inner = Tolerances { rtol, atol, blowup_norm, min_step };
        inner.validate().map_err(to_py)?;
        Ok(PyTolerances { inner })
    }

    #[getter]
    fn rtol(&self) -> f64 {
        self.inner.rtol
    }

    #[getter]
    fn atol(&self) -> f64 {
        self.inner.atol
    }

    #[getter]
    fn blowup_norm(&self) -> f64 {
        self.inner.blowup_norm
    }

    #[getter]
    fn min_step(&self) -> Option<f64> {
        self.inner.min_step
    }

    fn __repr__(&self) -> String {
        format!(
            "Tolerances(rtol={:e}, atol={:e}, blowup_norm={:e}, min_step={:?})",
            self.inner.rtol, self.inner.atol, self.inner.blowup_norm, self.inner.min_step
        )
    }
}

#[pyclass(name = "VectorField")]
struct PyVectorField {
    inner: VectorFieldSpec,
}

#[pymethods]
impl PyVectorField {
    /// Right-hand side x' = v(t, x). Components are expressions in t and
    /// x1..xn; n is the number of components. `domain` is a list of open
    /// (lo, hi) pairs per axis, `time_interval` one such pair; both default
    /// to unbounded.
    #[new]
    #[pyo3(signature = (components, domain=None, time_interval=None))]
    fn new(
        components: Vec<String>,
        domain: Option<Vec<(f64, f64)>>,
        time_interval: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        let dim = components.len();
        let comps = parse_all(&components, dim)?;
        let ti = match time_interval {
            Some(p) => interval(p)?,
            None => Interval::all(),
        };
        let dom = match domain {
            Some(a) => boxed(a)?,
            None => SpatialBox::all(dim),
        };
        Ok(PyVectorField { inner: VectorFieldSpec::new(comps, ti, dom).map_err(to_py)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, t: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.eval(t, &x).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("VectorField(dim={})", self.inner.dim())
    }
}

#[pyclass(name = "Solution")]
struct PySolution {
    inner: rf::SolutionCurve,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Time range the curve actually covers, as (lo, hi).
    #[getter]
    fn covered(&self) -> (f64, f64) {
        self.inner.covered()
    }

    #[getter]
    fn termination(&self) -> String {
        format!("{:?}", self.inner.termination())
    }

    #[getter]
    fn reached_target(&self) -> bool {
        self.inner.termination().reached_target()
    }

    /// Dense-output evaluation at any covered time.
    fn sample(&self, t: f64) -> PyResult<Vec<f64>> {
        self.inner.sample(t).map_err(to_py)
    }

    fn nodes(&self) -> Vec<(f64, Vec<f64>)> {
        self.inner.nodes()
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.covered();
        format!("Solution(covered=({lo}, {hi}), termination={:?})", self.inner.termination())
    }
}

#[pyfunction]
#[pyo3(signature = (field, source_time, state, target_time, tol=None))]
fn integrate(
    field: &PyVectorField,
    source_time: f64,
    state: Vec<f64>,
    target_time: f64,
    tol: Option<&PyTolerances>,
) -> PyResult<PySolution> {
    rf::integrate(&field.inner, source_time, &state, target_time, &tol_of(tol))
        .map(|c| PySolution { inner: c })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (field, source_time, state, target_time, tol=None))]
fn flow(
    field: &PyVectorField,
    source_time: f64,
    state: Vec<f64>,
    target_time: f64,
    tol: Option<&PyTolerances>,
) -> PyResult<Vec<f64>> {
    let q = FlowQuery::new(source_time, state, target_time).with_tol(tol_of(tol));
    rf::flow::flow(&field.inner, &q).map_err(to_py)
}

/// Jacobian of the flow with respect to the initial state, as nested lists
/// (rows = output components).
#[pyfunction]
#[pyo3(signature = (field, source_time, state, target_time, tol=None))]
fn flow_jacobian(
    field: &PyVectorField,
    source_time: f64,
    state: Vec<f64>,
    target_time: f64,
    tol: Option<&PyTolerances>,
) -> PyResult<Vec<Vec<f64>>> {
    let q = FlowQuery::new(source_time, state, target_time).with_tol(tol_of(tol));
    let m = rf::flow::flow_jacobian(&field.inner, &q).map_err(to_py)?;
    Ok((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
}

#[pyclass(name = "SpaceTimeMap")]
struct PySpaceTimeMap {
    inner: rf::SpaceTimeMap,
}

#[pymethods]
impl PySpaceTimeMap {
    /// Closed-form map (t, x) -> (time_out, space_out), with an optional
    /// closed-form inverse given as (time_in, [space_in...]).
    #[new]
    #[pyo3(signature = (time_out, space_out, inverse=None))]
    fn new(
        time_out: &str,
        space_out: Vec<String>,
        inverse: Option<(String, Vec<String>)>,
    ) -> PyResult<Self> {
        let dim = space_out.len();
        let f = Expression::parse(time_out, dim).map_err(to_py)?;
        let g = parse_all(&space_out, dim)?;
        let inv = match inverse {
            None => None,
            Some((fi, gi)) => {
                Some((Expression::parse(&fi, dim).map_err(to_py)?, parse_all(&gi, dim)?))
            }
        };
        Ok(PySpaceTimeMap { inner: rf::SpaceTimeMap::from_expressions(f, g, inv).map_err(to_py)? })
    }

    #[staticmethod]
    fn identity(dim: usize) -> PySpaceTimeMap {
        PySpaceTimeMap { inner: rf::SpaceTimeMap::identity(dim) }
    }

    /// outer after inner.
    #[staticmethod]
    fn compose(outer: &PySpaceTimeMap, inner: &PySpaceTimeMap) -> PyResult<PySpaceTimeMap> {
        rf::SpaceTimeMap::compose(&outer.inner, &inner.inner)
            .map(|m| PySpaceTimeMap { inner: m })
            .map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn has_inverse(&self) -> bool {
        self.inner.has_inverse()
    }

    fn apply(&self, t: f64, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.inner.apply(t, &x).map_err(to_py)
    }

    fn apply_inverse(&self, t: f64, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.inner.apply_inverse(t, &x).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("SpaceTimeMap(dim={}, has_inverse={})", self.inner.dim(), self.inner.has_inverse())
    }
}

#[pyclass(name = "WreathElement")]
struct PyWreathElement {
    inner: rf::WreathElement,
}

#[pymethods]
impl PyWreathElement {
    /// Element (f, g): a time warp f(t, x) paired with a time-free space map
    /// g(x). Provide both `f_inv` and `g_inv` to make it invertible.
    #[new]
    #[pyo3(signature = (f, g, f_inv=None, g_inv=None))]
    fn new(
        f: &str,
        g: Vec<String>,
        f_inv: Option<String>,
        g_inv: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let dim = g.len();
        let fe = Expression::parse(f, dim).map_err(to_py)?;
        let ge = parse_all(&g, dim)?;
        let elem = rf::WreathElement::new(fe, ge).map_err(to_py)?;
        let elem = match (f_inv, g_inv) {
            (None, None) => elem,
            (Some(fi), Some(gi)) => {
                let fie = Expression::parse(&fi, dim).map_err(to_py)?;
                elem.with_inverse(fie, parse_all(&gi, dim)?).map_err(to_py)?
            }
            _ => {
                return Err(PyValueError::new_err(
                    "provide both f_inv and g_inv, or neither",
                ))
            }
        };
        Ok(PyWreathElement { inner: elem })
    }

    #[staticmethod]
    fn identity(dim: usize) -> PyWreathElement {
        PyWreathElement { inner: rf::WreathElement::identity(dim) }
    }

    /// a after b.
    #[staticmethod]
    fn compose(a: &PyWreathElement, b: &PyWreathElement) -> PyResult<PyWreathElement> {
        rf::WreathElement::compose(&a.inner, &b.inner)
            .map(|e| PyWreathElement { inner: e })
            .map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn has_inverse(&self) -> bool {
        self.inner.has_inverse()
    }

    fn act(&self, t: f64, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.inner.act(t, &x).map_err(to_py)
    }

    fn act_inverse(&self, t: f64, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.inner.act_inverse(t, &x).map_err(to_py)
    }

    fn inverse(&self) -> PyResult<PyWreathElement> {
        self.inner.inverse().map(|e| PyWreathElement { inner: e }).map_err(to_py)
    }

    fn to_map(&self) -> PyResult<PySpaceTimeMap> {
        self.inner.to_map().map(|m| PySpaceTimeMap { inner: m }).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let g: Vec<String> = self.inner.space_part().iter().map(|e| e.to_string()).collect();
        format!("WreathElement(f=\"{}\", g={g:?})", self.inner.time_warp())
    }
}

#[pyclass(name = "Rectification")]
struct PyRectification {
    inner: rf::Rectification,
}

#[pymethods]
impl PyRectification {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.field().dim()
    }

    #[getter]
    fn base_time(&self) -> f64 {
        self.inner.base_time()
    }

    #[getter]
    fn window(&self) -> (f64, f64) {
        let w = self.inner.window();
        (w.lo, w.hi)
    }

    /// The straightening change of coordinates and its inverse. `apply`
    /// evolves the base-time state to (t, flow(t, x)); `apply_inverse` pulls
    /// a point back to its base-time label.
    fn apply(&self, t: f64, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.inner.apply(t, &x).map_err(to_py)
    }

    fn apply_inverse(&self, t: f64, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.inner.apply_inverse(t, &x).map_err(to_py)
    }

    fn forward_map(&self) -> PySpaceTimeMap {
        PySpaceTimeMap { inner: self.inner.forward_map() }
    }

    fn inverse_map(&self) -> PySpaceTimeMap {
        PySpaceTimeMap { inner: self.inner.inverse_map() }
    }

    /// Push the field through the inverse map on a probe grid and measure
    /// how far it lands from the constant field (1, 0), plus forward/inverse
    /// round-trip defects.
    #[pyo3(signature = (time_samples=5, space_samples=5, pushforward_threshold=1e-5, roundtrip_threshold=1e-6))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        time_samples: usize,
        space_samples: usize,
        pushforward_threshold: f64,
        roundtrip_threshold: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = rf::domain::space_time_grid(
            self.inner.window(),
            self.inner.probe_box(),
            time_samples,
            space_samples,
        );
        let rep = rf::rectify::verify_rectification(&self.inner, &grid).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("max_pushforward_residual", rep.max_pushforward_residual)?;
        d.set_item("max_roundtrip_residual", rep.max_roundtrip_residual)?;
        d.set_item("checked", rep.checked)?;
        d.set_item(
            "failures",
            rep.failures.iter().map(|(t, x, why)| (*t, x.clone(), why.clone())).collect::<Vec<_>>(),
        )?;
        d.set_item("passes", rep.passes(pushforward_threshold, roundtrip_threshold))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let w = self.inner.window();
        format!(
            "Rectification(dim={}, base_time={}, window=({}, {}))",
            self.inner.field().dim(),
            self.inner.base_time(),
            w.lo,
            w.hi
        )
    }
}

/// Construct the straightening map: probe the field over the window from the
/// base time, then wrap flow queries as a space-time diffeomorphism.
#[pyfunction]
#[pyo3(signature = (field, base_time, window, probe_box, tol=None))]
fn build_rectification(
    field: &PyVectorField,
    base_time: f64,
    window: (f64, f64),
    probe_box: Vec<(f64, f64)>,
    tol: Option<&PyTolerances>,
) -> PyResult<PyRectification> {
    let r = rf::rectify::build_rectification(
        &field.inner,
        base_time,
        interval(window)?,
        &boxed(probe_box)?,
        &tol_of(tol),
    )
    .map_err(to_py)?;
    Ok(PyRectification { inner: r })
}

/// Conjugate a symmetry of the trivial equation through the rectification,
/// yielding a symmetry of the original field. The element must fix the
/// trivial equation (space output independent of time), which is checked.
#[pyfunction]
fn conjugate_symmetry(r: &PyRectification, alpha: &PySpaceTimeMap) -> PyResult<PySpaceTimeMap> {
    rf::symmetry::conjugate_symmetry(&r.inner, &alpha.inner)
        .map(|m| PySpaceTimeMap { inner: m })
        .map_err(to_py)
}

/// Verify a candidate symmetry directly: transform solutions started at the
/// given initial conditions and measure how well the images satisfy the
/// equation.
#[pyfunction]
#[pyo3(signature = (map, field, base_time, initial_conditions, window, samples=201, threshold=1e-4, tol=None))]
#[allow(clippy::too_many_arguments)]
fn is_symmetry<'py>(
    py: Python<'py>,
    map: &PySpaceTimeMap,
    field: &PyVectorField,
    base_time: f64,
    initial_conditions: Vec<Vec<f64>>,
    window: (f64, f64),
    samples: usize,
    threshold: f64,
    tol: Option<&PyTolerances>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = rf::symmetry::SymmetryCheckConfig { samples, threshold, tol: tol_of(tol) };
    let rep = rf::symmetry::is_symmetry(
        &map.inner,
        &field.inner,
        base_time,
        &initial_conditions,
        interval(window)?,
        &config,
    )
    .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("verdict", rep.verdict)?;
    d.set_item("max_residual", rep.max_residual)?;
    d.set_item("tested_solutions", rep.tested_solutions)?;
    d.set_item("undefined_transforms", rep.undefined_transforms)?;
    d.set_item("notes", rep.notes.clone())?;
    Ok(d)
}

/// Check whether a map is a symmetry of the trivial equation x' = 0: its
/// space output must not depend on time. Returns the worst time-dependence
/// witness over the grid.
#[pyfunction]
#[pyo3(signature = (map, window, probe_box, time_samples=5, space_samples=5))]
fn is_trivial_symmetry_form<'py>(
    py: Python<'py>,
    map: &PySpaceTimeMap,
    window: (f64, f64),
    probe_box: Vec<(f64, f64)>,
    time_samples: usize,
    space_samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = rf::domain::space_time_grid(
        interval(window)?,
        &boxed(probe_box)?,
        time_samples,
        space_samples,
    );
    let check = rf::symmetry::is_trivial_symmetry_form(&map.inner, &grid).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("is_trivial", check.is_trivial)?;
    d.set_item("witness", check.witness)?;
    Ok(d)
}

/// Estimate sup |v_x| over window x region from the symbolic Jacobian and
/// stress it with difference quotients at shrinking radii.
#[pyfunction]
#[pyo3(signature = (field, window, region, time_samples=9, space_samples=9))]
fn estimate_lipschitz<'py>(
    py: Python<'py>,
    field: &PyVectorField,
    window: (f64, f64),
    region: Vec<(f64, f64)>,
    time_samples: usize,
    space_samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let config = rf::diagnostics::LipschitzConfig {
        time_samples,
        space_samples,
        ..Default::default()
    };
    let lip = rf::diagnostics::estimate_lipschitz(
        &field.inner,
        interval(window)?,
        &boxed(region)?,
        &config,
    )
    .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("overall", lip.overall)?;
    d.set_item("suspect_unbounded", lip.suspect_unbounded)?;
    d.set_item("times", lip.times.clone())?;
    d.set_item("slice_constants", lip.slice_constants.clone())?;
    d.set_item("worst_point", (lip.worst_point.0, lip.worst_point.1.clone()))?;
    d.set_item("skipped", lip.skipped.len())?;
    d.set_item(
        "quotients",
        lip.refinement.iter().map(|e| (e.radius, e.quotient)).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Integrate each initial condition across the window and record every
/// domain escape or blow-up.
#[pyfunction]
#[pyo3(signature = (field, base_time, window, initial_conditions, tol=None))]
fn probe_invariance<'py>(
    py: Python<'py>,
    field: &PyVectorField,
    base_time: f64,
    window: (f64, f64),
    initial_conditions: Vec<Vec<f64>>,
    tol: Option<&PyTolerances>,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = rf::diagnostics::probe_invariance(
        &field.inner,
        base_time,
        interval(window)?,
        &initial_conditions,
        &tol_of(tol),
    )
    .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("tested", rep.tested)?;
    d.set_item("invariant", rep.invariant)?;
    let escapes: Vec<Bound<'py, PyDict>> = rep
        .escapes
        .iter()
        .map(|e| {
            let r = PyDict::new(py);
            r.set_item("x0", e.x0.clone())?;
            r.set_item("forward", e.forward)?;
            r.set_item("t_event", e.t_event)?;
            r.set_item("kind", format!("{:?}", e.kind))?;
            Ok(r)
        })
        .collect::<PyResult<_>>()?;
    d.set_item("escapes", escapes)?;
    Ok(d)
}

/// Probe uniqueness at one point: difference-quotient sweep plus candidate
/// curves given as (label, [component expressions in t]) pairs. Two distinct
/// satisfied candidates through the point are a counterexample.
#[pyfunction]
#[pyo3(signature = (field, base_time, point, window, candidates=Vec::new(), radii=None, residual_tolerance=1e-9))]
#[allow(clippy::too_many_arguments)]
fn probe_uniqueness<'py>(
    py: Python<'py>,
    field: &PyVectorField,
    base_time: f64,
    point: Vec<f64>,
    window: (f64, f64),
    candidates: Vec<(String, Vec<String>)>,
    radii: Option<Vec<f64>>,
    residual_tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let dim = field.inner.dim();
    let candidates = candidates
        .into_iter()
        .map(|(label, comps)| {
            rf::diagnostics::CandidateCurve::new(label, parse_all(&comps, dim)?).map_err(to_py)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let radii = radii.unwrap_or_else(rf::diagnostics::default_radii);
    let rep = rf::diagnostics::probe_uniqueness(
        &field.inner,
        base_time,
        &point,
        interval(window)?,
        &radii,
        &candidates,
        residual_tolerance,
    )
    .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lipschitz_suspect", rep.lipschitz_suspect)?;
    d.set_item("counterexample", rep.counterexample)?;
    d.set_item("max_separation", rep.max_separation)?;
    let checks: Vec<Bound<'py, PyDict>> = rep
        .candidates
        .iter()
        .map(|c| {
            let r = PyDict::new(py);
            r.set_item("label", c.label.clone())?;
            r.set_item("through_point", c.through_point)?;
            r.set_item("max_residual", c.max_residual)?;
            r.set_item("satisfied", c.satisfied)?;
            Ok(r)
        })
        .collect::<PyResult<_>>()?;
    d.set_item("candidates", checks)?;
    d.set_item(
        "quotients",
        rep.radii.iter().map(|e| (e.radius, e.quotient)).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

#[pymodule]
fn rectiflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpression>()?;
    m.add_class::<PyTolerances>()?;
    m.add_class::<PyVectorField>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PySpaceTimeMap>()?;
    m.add_class::<PyWreathElement>()?;
    m.add_class::<PyRectification>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(flow, m)?)?;
    m.add_function(wrap_pyfunction!(flow_jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(build_rectification, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(is_symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(is_trivial_symmetry_form, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_lipschitz, m)?)?;
    m.add_function(wrap_pyfunction!(probe_invariance, m)?)?;
    m.add_function(wrap_pyfunction!(probe_uniqueness, m)?)?;
    Ok(())
}
