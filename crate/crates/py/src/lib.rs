//! Python bindings. Matrices cross the boundary as nested lists of `complex`,
//! row-major.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use grassmann_holonomy::dynamics::{self, HamiltonianSchedule, TimeGrid};
use grassmann_holonomy::{bundle, grassmann, linalg, selftest};
use grassmann_holonomy::{BasePoint, ChartTangent, ComplexMatrix, EmbeddedTangent, FrameTangent, GeomError, C64};

create_exception!(grholo_py, GeometryError, PyValueError);

type Rows = Vec<Vec<C64>>;

fn err(e: GeomError) -> PyErr {
    GeometryError::new_err(e.to_string())
}

fn to_matrix(rows: Rows) -> PyResult<ComplexMatrix> {
    linalg::from_rows(&rows).map_err(err)
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    linalg::to_rows(m)
}

#[pyclass(name = "Tolerances", from_py_object)]
#[derive(Clone, Copy)]
struct PyTolerances {
    inner: linalg::Tolerances,
}

#[pymethods]
impl PyTolerances {
    #[new]
    #[pyo3(signature = (structural=1e-10, ode=1e-9, comparison=1e-8))]
    fn new(structural: f64, ode: f64, comparison: f64) -> PyResult<Self> {
        Ok(Self {
            inner: linalg::Tolerances::new(structural, ode, comparison).map_err(err)?,
        })
    }

    #[getter]
    fn structural(&self) -> f64 {
        self.inner.structural
    }

    #[getter]
    fn ode(&self) -> f64 {
        self.inner.ode
    }

    #[getter]
    fn comparison(&self) -> f64 {
        self.inner.comparison
    }

    fn __repr__(&self) -> String {
        format!(
            "Tolerances(structural={:e}, ode={:e}, comparison={:e})",
            self.inner.structural, self.inner.ode, self.inner.comparison
        )
    }
}

fn tol(t: Option<PyTolerances>) -> linalg::Tolerances {
    t.map(|t| t.inner).unwrap_or_default()
}

/// A rank-`m` orthogonal projector on `C^n`.
#[pyclass(name = "Projector", from_py_object)]
#[derive(Clone)]
struct PyProjector {
    inner: grassmann::Projector,
}

#[pymethods]
impl PyProjector {
    #[new]
    #[pyo3(signature = (matrix, rank, tol=None))]
    fn new(matrix: Rows, rank: usize, tol: Option<PyTolerances>) -> PyResult<Self> {
        let inner = grassmann::Projector::new(to_matrix(matrix)?, rank, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn standard(n: usize, m: usize) -> Self {
        Self {
            inner: grassmann::Projector::standard(n, m),
        }
    }

    fn matrix(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn defect(&self) -> f64 {
        self.inner.defect()
    }

    fn distance(&self, other: &PyProjector) -> f64 {
        self.inner.distance(&other.inner)
    }

    /// `U P U*`.
    fn conjugate(&self, u: Rows) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.conjugate(&to_matrix(u)?),
        })
    }

    fn __repr__(&self) -> String {
        format!("Projector(dim={}, rank={})", self.inner.dim(), self.inner.rank())
    }
}

/// An isometry `φ: C^m → C^n`.
#[pyclass(name = "Frame", from_py_object)]
#[derive(Clone)]
struct PyFrame {
    inner: bundle::Frame,
}

#[pymethods]
impl PyFrame {
    #[new]
    #[pyo3(signature = (matrix, tol=None))]
    fn new(matrix: Rows, tol: Option<PyTolerances>) -> PyResult<Self> {
        let inner = bundle::Frame::new(to_matrix(matrix)?, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn standard(n: usize, m: usize) -> Self {
        Self {
            inner: bundle::Frame::standard(n, m),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (n, m, seed=0))]
    fn random(n: usize, m: usize, seed: u64) -> PyResult<Self> {
        if !(1 <= m && m <= n) {
            return Err(PyValueError::new_err(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
        }
        Ok(Self {
            inner: linalg::random_frame_with(&mut linalg::prng(seed), n, m),
        })
    }

    fn matrix(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn defect(&self) -> f64 {
        self.inner.defect()
    }

    fn projector(&self) -> PyProjector {
        PyProjector {
            inner: self.inner.projector(),
        }
    }

    /// `φ g`.
    fn act(&self, g: &PyGaugeElement) -> Self {
        Self {
            inner: self.inner.act(&g.inner),
        }
    }

    /// The `g` with `other = self · g`.
    #[pyo3(signature = (other, tol=None))]
    fn relative_to(&self, other: &PyFrame, tol: Option<PyTolerances>) -> PyResult<PyGaugeElement> {
        let inner = self.inner.relative_to(&other.inner, &self::tol(tol)).map_err(err)?;
        Ok(PyGaugeElement { inner })
    }

    fn __repr__(&self) -> String {
        let (n, m) = self.inner.shape();
        format!("Frame(n={n}, m={m})")
    }
}

/// An element of `U(m)` or of its Lie algebra.
#[pyclass(name = "GaugeElement", from_py_object)]
#[derive(Clone)]
struct PyGaugeElement {
    inner: bundle::GaugeElement,
}

#[pymethods]
impl PyGaugeElement {
    #[staticmethod]
    #[pyo3(signature = (matrix, tol=None))]
    fn unitary(matrix: Rows, tol: Option<PyTolerances>) -> PyResult<Self> {
        let inner = bundle::GaugeElement::unitary(to_matrix(matrix)?, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn identity(m: usize) -> Self {
        Self {
            inner: bundle::GaugeElement::identity(m),
        }
    }

    fn matrix(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    /// `arg det g`.
    fn phase(&self) -> f64 {
        self.inner.phase()
    }

    fn distance_from_identity(&self) -> f64 {
        self.inner.distance_from_identity()
    }

    fn __repr__(&self) -> String {
        format!("GaugeElement(dim={})", self.inner.dim())
    }
}

/// A time-dependent anti-Hermitian generator `H(t)`.
#[pyclass(name = "Schedule", from_py_object)]
#[derive(Clone)]
struct PySchedule {
    inner: HamiltonianSchedule,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn zero(n: usize) -> Self {
        Self {
            inner: HamiltonianSchedule::zero(n),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (h, tol=None))]
    fn constant(h: Rows, tol: Option<PyTolerances>) -> PyResult<Self> {
        let inner = HamiltonianSchedule::constant(to_matrix(h)?, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    /// `H(t) = e^{tK} A e^{−tK}`.
    #[staticmethod]
    #[pyo3(signature = (base, generator, tol=None))]
    fn rotating(base: Rows, generator: Rows, tol: Option<PyTolerances>) -> PyResult<Self> {
        let inner =
            HamiltonianSchedule::rotating(to_matrix(base)?, to_matrix(generator)?, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    /// Piecewise-linear between `values` at increasing `knots`.
    #[staticmethod]
    #[pyo3(signature = (knots, values, tol=None))]
    fn sampled(knots: Vec<f64>, values: Vec<Rows>, tol: Option<PyTolerances>) -> PyResult<Self> {
        let values = values.into_iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        let inner = HamiltonianSchedule::sampled(knots, values, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    /// The latitude loop on `Gr_m(C^{m+1})` at polar angle `theta`.
    /// Returns `(schedule, initial_frame, period)`.
    #[staticmethod]
    #[pyo3(signature = (theta, omega=1.0, rank=1))]
    fn latitude(theta: f64, omega: f64, rank: usize) -> PyResult<(Self, PyFrame, f64)> {
        let l = dynamics::LatitudeLoop::new(theta, omega, rank).map_err(err)?;
        Ok((Self { inner: l.schedule() }, PyFrame { inner: l.frame() }, l.period()))
    }

    fn at(&self, t: f64) -> Rows {
        to_rows(&self.inner.at(t))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

/// Outcome of `berry_maps`.
#[pyclass(name = "HolonomyResult", frozen)]
struct PyHolonomyResult {
    #[pyo3(get)]
    dynamical: PyGaugeElement,
    #[pyo3(get)]
    geometric: PyGaugeElement,
    #[pyo3(get)]
    fiber_gap: PyGaugeElement,
    #[pyo3(get)]
    closed: bool,
    #[pyo3(get)]
    closure_residual: f64,
    #[pyo3(get)]
    max_projector_defect: f64,
    #[pyo3(get)]
    max_isometry_defect: f64,
    #[pyo3(get)]
    max_horizontality_defect: f64,
}

#[pymethods]
impl PyHolonomyResult {
    fn berry_phase(&self) -> f64 {
        self.geometric.inner.phase()
    }
}

#[pyfunction]
#[pyo3(signature = (f, tol=None))]
fn isometrize(f: Rows, tol: Option<PyTolerances>) -> PyResult<PyFrame> {
    let inner = linalg::isometrize(&to_matrix(f)?, &self::tol(tol)).map_err(err)?;
    Ok(PyFrame { inner })
}

#[pyfunction]
fn mat_exp(a: Rows) -> PyResult<Rows> {
    Ok(to_rows(&linalg::mat_exp(&to_matrix(a)?).map_err(err)?))
}

/// Principal logarithm of a unitary, anti-Hermitian.
#[pyfunction]
fn unitary_log(g: Rows) -> PyResult<Rows> {
    Ok(to_rows(&linalg::unitary_log(&to_matrix(g)?).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (m, rank, tol=None))]
fn nearest_projector(m: Rows, rank: usize, tol: Option<PyTolerances>) -> PyResult<PyProjector> {
    let inner = linalg::nearest_projector(&to_matrix(m)?, rank, &self::tol(tol)).map_err(err)?;
    Ok(PyProjector { inner })
}

fn chart(base: &PyFrame, block: Rows) -> PyResult<ChartTangent> {
    ChartTangent::new(BasePoint::from_frame(&base.inner), to_matrix(block)?).map_err(err)
}

/// The graph of `f: X → X⊥` over the subspace spanned by `base`, where `f`
/// is given as an `(n − m) × m` block in the adapted coframe.
#[pyfunction]
fn proj_from_chart(base: &PyFrame, block: Rows) -> PyResult<PyProjector> {
    Ok(PyProjector {
        inner: grassmann::proj_from_chart(&chart(base, block)?),
    })
}

#[pyfunction]
#[pyo3(signature = (base, q, tol=None))]
fn chart_from_proj(base: &PyFrame, q: &PyProjector, tol: Option<PyTolerances>) -> PyResult<Rows> {
    let f = grassmann::chart_from_proj(&BasePoint::from_frame(&base.inner), &q.inner, &self::tol(tol)).map_err(err)?;
    Ok(to_rows(f.block()))
}

/// Ambient tangent vector at `π(base)` for a chart block.
#[pyfunction]
fn tangent_embed(base: &PyFrame, block: Rows) -> PyResult<Rows> {
    Ok(to_rows(grassmann::tangent_embed(&chart(base, block)?).matrix()))
}

#[pyfunction]
#[pyo3(signature = (u, p, tol=None))]
fn linear_hamiltonian(u: Rows, p: &PyProjector, tol: Option<PyTolerances>) -> PyResult<f64> {
    grassmann::linear_hamiltonian(&to_matrix(u)?, &p.inner, &self::tol(tol)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, x, y, tol=None))]
fn symplectic_form(p: &PyProjector, x: Rows, y: Rows, tol: Option<PyTolerances>) -> PyResult<f64> {
    let t = self::tol(tol);
    let x = EmbeddedTangent::new(&p.inner, to_matrix(x)?, &t).map_err(err)?;
    let y = EmbeddedTangent::new(&p.inner, to_matrix(y)?, &t).map_err(err)?;
    grassmann::symplectic_form(&p.inner, &x, &y, &t).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (u, p, tol=None))]
fn ham_field(u: Rows, p: &PyProjector, tol: Option<PyTolerances>) -> PyResult<Rows> {
    let x = grassmann::ham_field(&to_matrix(u)?, &p.inner, &self::tol(tol)).map_err(err)?;
    Ok(to_rows(x.matrix()))
}

fn frame_tangent(phi: &PyFrame, xi: Rows, tol: &linalg::Tolerances) -> PyResult<FrameTangent> {
    FrameTangent::new(phi.inner.clone(), to_matrix(xi)?, tol).map_err(err)
}

/// `𝒜(ξ)`, the anti-Hermitian part of `φ*ξ`.
#[pyfunction]
#[pyo3(signature = (phi, xi, tol=None))]
fn connection_a(phi: &PyFrame, xi: Rows, tol: Option<PyTolerances>) -> PyResult<Rows> {
    let xi = frame_tangent(phi, xi, &self::tol(tol))?;
    Ok(to_rows(bundle::connection_a(&xi).matrix()))
}

#[pyfunction]
#[pyo3(signature = (phi, block, tol=None))]
fn horizontal_lift(phi: &PyFrame, block: Rows, tol: Option<PyTolerances>) -> PyResult<Rows> {
    let xi = bundle::horizontal_lift(&phi.inner, &chart(phi, block)?, &self::tol(tol)).map_err(err)?;
    Ok(to_rows(xi.matrix()))
}

#[pyfunction]
#[pyo3(signature = (phi, u, v, tol=None))]
fn curvature_omega(phi: &PyFrame, u: Rows, v: Rows, tol: Option<PyTolerances>) -> PyResult<Rows> {
    let t = self::tol(tol);
    let u = frame_tangent(phi, u, &t)?;
    let v = frame_tangent(phi, v, &t)?;
    Ok(to_rows(bundle::curvature_omega(&u, &v, &t).map_err(err)?.matrix()))
}

/// Horizontal pairs `(u_i, v_i)` at `phi` with `Σ Ω(u_i, v_i) = w`.
#[pyfunction]
#[pyo3(signature = (w, phi, tol=None))]
fn curvature_generators(w: Rows, phi: &PyFrame, tol: Option<PyTolerances>) -> PyResult<Vec<(Rows, Rows)>> {
    let base = BasePoint::from_frame(&phi.inner);
    let pairs = bundle::curvature_generators(&to_matrix(w)?, &base, &self::tol(tol)).map_err(err)?;
    Ok(pairs
        .iter()
        .map(|(u, v)| (to_rows(u.matrix()), to_rows(v.matrix())))
        .collect())
}

/// Frame at `t1` of `φ̇ = H(t)φ` from `phi0` at `t0`.
#[pyfunction]
#[pyo3(signature = (schedule, phi0, t0, t1, steps, tol=None))]
fn integrate_frame(
    schedule: &PySchedule,
    phi0: &PyFrame,
    t0: f64,
    t1: f64,
    steps: usize,
    tol: Option<PyTolerances>,
) -> PyResult<PyFrame> {
    let grid = TimeGrid::new(t0, t1, steps).map_err(err)?;
    let path = dynamics::integrate_frame(&schedule.inner, &phi0.inner, &grid, &self::tol(tol)).map_err(err)?;
    Ok(PyFrame {
        inner: path.end().clone(),
    })
}

/// Schrödinger and horizontal lifts of the projector flow from `sigma`.
#[pyfunction]
#[pyo3(signature = (schedule, sigma, t0, t1, steps, tol=None))]
fn berry_maps(
    schedule: &PySchedule,
    sigma: &PyFrame,
    t0: f64,
    t1: f64,
    steps: usize,
    tol: Option<PyTolerances>,
) -> PyResult<PyHolonomyResult> {
    let grid = TimeGrid::new(t0, t1, steps).map_err(err)?;
    let p0 = sigma.inner.projector();
    let r = dynamics::berry_maps(&schedule.inner, &p0, &sigma.inner, &grid, &self::tol(tol)).map_err(err)?;
    Ok(PyHolonomyResult {
        dynamical: PyGaugeElement { inner: r.dynamical },
        geometric: PyGaugeElement { inner: r.geometric },
        fiber_gap: PyGaugeElement { inner: r.fiber_gap },
        closed: r.closed,
        closure_residual: r.closure_residual,
        max_projector_defect: r.max_projector_defect,
        max_isometry_defect: r.max_isometry_defect,
        max_horizontality_defect: r.max_horizontality_defect,
    })
}

/// Holonomy of the parallelogram loop built for `w` at scale `t` around
/// `π(sigma)`; approximately `exp(SYNTHESIS_CONSTANT · t² · w)`.
#[pyfunction]
#[pyo3(signature = (w, t, sigma, steps_per_leg=200, tol=None))]
fn synthesize_holonomy(
    w: Rows,
    t: f64,
    sigma: &PyFrame,
    steps_per_leg: usize,
    tol: Option<PyTolerances>,
) -> PyResult<PyGaugeElement> {
    let tl = self::tol(tol);
    let base = BasePoint::from_frame(&sigma.inner);
    let path = dynamics::synthesize_holonomy_step(&to_matrix(w)?, t, &base, steps_per_leg, &tl).map_err(err)?;
    let inner = dynamics::loop_holonomy(&path, &sigma.inner, &tl).map_err(err)?;
    Ok(PyGaugeElement { inner })
}

/// Runs the invariant suite; returns `(module, check, measured, bound, passed)`.
#[pyfunction]
#[pyo3(signature = (seed=0, tol=None))]
fn run_selftest(py: Python<'_>, seed: u64, tol: Option<PyTolerances>) -> Vec<(String, String, f64, f64, bool)> {
    let t = self::tol(tol);
    let rows = py.detach(|| selftest::run(&t, seed));
    rows.into_iter()
        .map(|r| (r.module.to_string(), r.name.to_string(), r.measured, r.bound, r.pass))
        .collect()
}

#[pymodule]
fn grholo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GeometryError", m.py().get_type::<GeometryError>())?;
    m.add("SYNTHESIS_CONSTANT", dynamics::SYNTHESIS_CONSTANT)?;
    m.add_class::<PyTolerances>()?;
    m.add_class::<PyProjector>()?;
    m.add_class::<PyFrame>()?;
    m.add_class::<PyGaugeElement>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyHolonomyResult>()?;
    m.add_function(wrap_pyfunction!(isometrize, m)?)?;
    m.add_function(wrap_pyfunction!(mat_exp, m)?)?;
    m.add_function(wrap_pyfunction!(unitary_log, m)?)?;
    m.add_function(wrap_pyfunction!(nearest_projector, m)?)?;
    m.add_function(wrap_pyfunction!(proj_from_chart, m)?)?;
    m.add_function(wrap_pyfunction!(chart_from_proj, m)?)?;
    m.add_function(wrap_pyfunction!(tangent_embed, m)?)?;
    m.add_function(wrap_pyfunction!(linear_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_form, m)?)?;
    m.add_function(wrap_pyfunction!(ham_field, m)?)?;
    m.add_function(wrap_pyfunction!(connection_a, m)?)?;
    m.add_function(wrap_pyfunction!(horizontal_lift, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_omega, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_generators, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_frame, m)?)?;
    m.add_function(wrap_pyfunction!(berry_maps, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_holonomy, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
