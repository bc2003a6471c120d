//! Python bindings for `betti_thermo`.

use betti_thermo::cech::{self, ComplexKind, Metric};
use betti_thermo::homology;
use betti_thermo::limits::{self, BoundaryMode, Process};
use betti_thermo::pointproc;
use betti_thermo::Error;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for betti_thermo::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_dict<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

fn parse_boundary(s: &str) -> PyResult<BoundaryMode> {
    match s {
        "plain" => Ok(BoundaryMode::Plain),
        "torus" => Ok(BoundaryMode::Torus),
        _ => Err(PyValueError::new_err(format!(
            "boundary must be 'plain' or 'torus', got {s:?}"
        ))),
    }
}

fn parse_process(s: &str) -> PyResult<Process> {
    match s {
        "binomial" => Ok(Process::Binomial),
        "poisson" => Ok(Process::Poisson),
        _ => Err(PyValueError::new_err(format!(
            "process must be 'binomial' or 'poisson', got {s:?}"
        ))),
    }
}

/// Axis-aligned box `[lower, upper)`.
#[pyclass(module = "betti_thermo", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Window(pointproc::Window);

#[pymethods]
impl Window {
    #[new]
    fn new(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        pointproc::Window::new(lower, upper).py().map(Self)
    }

    /// Cube of the given volume centred at the origin.
    #[staticmethod]
    fn centered_cube(dim: usize, volume: f64) -> PyResult<Self> {
        pointproc::Window::centered_cube(dim, volume).py().map(Self)
    }

    #[staticmethod]
    fn unit_cube(dim: usize) -> PyResult<Self> {
        pointproc::Window::unit_cube(dim).py().map(Self)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.0.lower().to_vec()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.0.upper().to_vec()
    }

    fn volume(&self) -> f64 {
        self.0.volume()
    }

    fn __repr__(&self) -> String {
        format!("Window(lower={:?}, upper={:?})", self.0.lower(), self.0.upper())
    }
}

#[pyclass(module = "betti_thermo", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PointCloud(pointproc::PointCloud);

#[pymethods]
impl PointCloud {
    /// Builds a cloud from a list of equal-length coordinate lists.
    #[new]
    fn new(points: Vec<Vec<f64>>) -> PyResult<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| PyValueError::new_err("use PointCloud.empty(dim) for an empty cloud"))?;
        pointproc::PointCloud::from_points(dim, &points).py().map(Self)
    }

    #[staticmethod]
    fn empty(dim: usize) -> Self {
        Self(pointproc::PointCloud::empty(dim))
    }

    /// Reads whitespace- or comma-separated coordinates, one point per line.
    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        pointproc::PointCloud::read_text(&path).py().map(Self)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.0.points().map(<[f64]>::to_vec).collect()
    }

    fn restrict(&self, window: &Window) -> Self {
        Self(self.0.restrict(&window.0))
    }

    fn __repr__(&self) -> String {
        format!("PointCloud(dim={}, len={})", self.0.dim(), self.0.len())
    }
}

/// Seed and stream index of a reproducible random substream.
#[pyclass(module = "betti_thermo", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct RngStream(pointproc::RngStream);

#[pymethods]
impl RngStream {
    #[new]
    #[pyo3(signature = (master_seed, stream_index = 0))]
    fn new(master_seed: u64, stream_index: u64) -> Self {
        Self(pointproc::RngStream::new(master_seed, stream_index))
    }

    fn child(&self, i: u64) -> Self {
        Self(self.0.child(i))
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.0.master_seed
    }

    #[getter]
    fn stream_index(&self) -> u64 {
        self.0.stream_index
    }

    fn __repr__(&self) -> String {
        format!("RngStream({}, {})", self.0.master_seed, self.0.stream_index)
    }
}

/// Piecewise-constant probability density on a grid of cells.
#[pyclass(module = "betti_thermo", frozen, skip_from_py_object)]
#[derive(Clone)]
struct DensityGrid(pointproc::DensityGrid);

#[pymethods]
impl DensityGrid {
    /// `values` are in row-major order (last axis fastest). With
    /// `normalize=True` they are rescaled to unit mass.
    #[new]
    #[pyo3(signature = (window, cells_per_axis, values, normalize = false))]
    fn new(window: &Window, cells_per_axis: Vec<usize>, values: Vec<f64>, normalize: bool) -> PyResult<Self> {
        let w = window.0.clone();
        if normalize {
            pointproc::DensityGrid::normalized(w, cells_per_axis, values)
                .py()
                .map(Self)
        } else {
            pointproc::DensityGrid::new(w, cells_per_axis, values).py().map(Self)
        }
    }

    #[staticmethod]
    fn uniform(window: &Window) -> PyResult<Self> {
        pointproc::DensityGrid::uniform(window.0.clone()).py().map(Self)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        pointproc::DensityGrid::load(&path).py().map(Self)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn sup_value(&self) -> f64 {
        self.0.sup_value()
    }

    fn value_at(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.0.dim() {
            return Err(PyValueError::new_err("point dimension does not match the density"));
        }
        Ok(self.0.value_at(&x))
    }
}

#[pyclass(module = "betti_thermo", frozen)]
struct SimplicialComplex(cech::SimplicialComplex);

#[pymethods]
impl SimplicialComplex {
    #[getter]
    fn max_dim(&self) -> usize {
        self.0.max_dim()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    fn simplex_count(&self, j: usize) -> usize {
        self.0.simplex_count(j)
    }

    fn simplex_counts(&self) -> Vec<usize> {
        (0..=self.0.max_dim()).map(|j| self.0.simplex_count(j)).collect()
    }

    /// The `j`-simplices as sorted vertex tuples.
    fn simplices(&self, j: usize) -> Vec<Vec<u32>> {
        self.0.simplices(j).map(<[u32]>::to_vec).collect()
    }

    fn vertex_simplex_count(&self, v: usize, j: usize) -> PyResult<usize> {
        if v >= self.0.vertex_count() {
            return Err(PyValueError::new_err(format!("vertex {v} out of range")));
        }
        Ok(cech::vertex_simplex_count(&self.0, v, j))
    }

    fn euler_characteristic(&self) -> i64 {
        self.0.euler_characteristic()
    }

    fn __contains__(&self, simplex: Vec<u32>) -> bool {
        self.0.contains(&simplex)
    }

    /// One simplex per line, vertices separated by spaces.
    fn dump(&self) -> PyResult<String> {
        let mut out = Vec::new();
        self.0
            .write_dump(&mut out)
            .map_err(|e| PyIOError::new_err(e.to_string()))?;
        String::from_utf8(out).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("SimplicialComplex(counts={:?})", self.simplex_counts())
    }
}

/// Piecewise-linear estimate of `s -> beta_k(1, s)`.
#[pyclass(module = "betti_thermo", frozen)]
struct LimitCurve(limits::LimitCurve);

#[pymethods]
impl LimitCurve {
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        limits::LimitCurve::load(&path).py().map(Self)
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.0.save(&path).py()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    #[getter]
    fn s_grid(&self) -> Vec<f64> {
        self.0.s_grid.clone()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    #[getter]
    fn stderrs(&self) -> Vec<f64> {
        self.0.stderrs.clone()
    }

    fn __call__(&self, s: f64) -> PyResult<f64> {
        self.0.eval(s).py()
    }

    /// `beta_k(lambda, r) = lambda * curve(lambda^(1/d) r)`.
    fn rate(&self, lambda: f64, r: f64) -> PyResult<f64> {
        self.0.rate(lambda, r).py()
    }
}

#[pyfunction]
fn sample_binomial(density: &DensityGrid, n: usize, stream: &RngStream) -> PyResult<PointCloud> {
    pointproc::sample_binomial(&density.0, n, stream.0).py().map(PointCloud)
}

#[pyfunction]
fn sample_poisson(lambda: f64, window: &Window, stream: &RngStream) -> PyResult<PointCloud> {
    pointproc::sample_poisson_homogeneous(lambda, &window.0, stream.0)
        .py()
        .map(PointCloud)
}

#[pyfunction]
fn poissonize(density: &DensityGrid, n: usize, stream: &RngStream) -> PyResult<PointCloud> {
    pointproc::poissonize(&density.0, n, stream.0).py().map(PointCloud)
}

#[pyfunction]
fn superpose(a: &PointCloud, b: &PointCloud) -> PyResult<PointCloud> {
    pointproc::superpose(&a.0, &b.0).py().map(PointCloud)
}

#[pyfunction]
fn scale_points(cloud: &PointCloud, theta: f64) -> PyResult<PointCloud> {
    pointproc::scale_points(&cloud.0, theta).py().map(PointCloud)
}

#[pyfunction]
fn min_enclosing_ball_radius(points: Vec<Vec<f64>>) -> PyResult<f64> {
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    cech::min_enclosing_ball_radius(&refs).py()
}

/// Čech (default) or Rips complex; `torus` wraps distances on that window.
#[pyfunction]
#[pyo3(signature = (cloud, r, max_dim, kind = "cech", torus = None))]
fn build_complex(
    py: Python<'_>,
    cloud: &PointCloud,
    r: f64,
    max_dim: usize,
    kind: &str,
    torus: Option<&Window>,
) -> PyResult<SimplicialComplex> {
    let kind = match kind {
        "cech" => ComplexKind::Cech,
        "rips" => ComplexKind::Rips,
        _ => {
            return Err(PyValueError::new_err(format!(
                "kind must be 'cech' or 'rips', got {kind:?}"
            )))
        }
    };
    let metric = torus.map_or(Metric::Euclidean, |w| Metric::Torus(w.0.clone()));
    let cloud = &cloud.0;
    py.detach(|| cech::build_complex(cloud, r, max_dim, kind, &metric))
        .py()
        .map(SimplicialComplex)
}

#[pyfunction]
fn build_cech(py: Python<'_>, cloud: &PointCloud, r: f64, max_dim: usize) -> PyResult<SimplicialComplex> {
    build_complex(py, cloud, r, max_dim, "cech", None)
}

#[pyfunction]
fn build_rips(py: Python<'_>, cloud: &PointCloud, r: f64, max_dim: usize) -> PyResult<SimplicialComplex> {
    build_complex(py, cloud, r, max_dim, "rips", None)
}

/// `[beta_0, ..., beta_max_k]` over GF(2).
#[pyfunction]
fn betti_numbers(complex: &SimplicialComplex, max_k: usize) -> PyResult<Vec<usize>> {
    homology::betti_numbers(&complex.0, max_k).py().map(|b| b.values)
}

#[pyfunction]
fn connected_components(cloud: &PointCloud, r: f64) -> PyResult<usize> {
    homology::connected_components(&cloud.0, r).py()
}

#[pyfunction]
fn betti_diff_bound_check(small: &SimplicialComplex, big: &SimplicialComplex, k: usize) -> PyResult<bool> {
    homology::betti_diff_bound_check(&small.0, &big.0, k).py()
}

fn rate_params(
    dim: usize,
    lambda: f64,
    r: f64,
    volume: f64,
    reps: usize,
    boundary: &str,
) -> PyResult<limits::RateParams> {
    Ok(limits::RateParams {
        dim,
        lambda,
        r,
        volume,
        reps,
        boundary: parse_boundary(boundary)?,
    })
}

/// Per-volume Betti number of a homogeneous Poisson process.
#[pyfunction]
#[pyo3(signature = (dim, lambda_, r, volume, k, reps, stream, boundary = "plain"))]
#[allow(clippy::too_many_arguments)]
fn estimate_betti_rate<'py>(
    py: Python<'py>,
    dim: usize,
    lambda_: f64,
    r: f64,
    volume: f64,
    k: usize,
    reps: usize,
    stream: &RngStream,
    boundary: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let p = rate_params(dim, lambda_, r, volume, reps, boundary)?;
    let s = stream.0;
    let rec = py.detach(|| limits::estimate_betti_rate(&p, k, s)).py()?;
    to_dict(py, &rec)
}

/// Per-volume `j`-simplex count of a homogeneous Poisson process.
#[pyfunction]
#[pyo3(signature = (dim, lambda_, r, volume, j, reps, stream, boundary = "plain"))]
#[allow(clippy::too_many_arguments)]
fn estimate_simplex_rate<'py>(
    py: Python<'py>,
    dim: usize,
    lambda_: f64,
    r: f64,
    volume: f64,
    j: usize,
    reps: usize,
    stream: &RngStream,
    boundary: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let p = rate_params(dim, lambda_, r, volume, reps, boundary)?;
    let s = stream.0;
    let rec = py.detach(|| limits::estimate_simplex_rate(&p, j, s)).py()?;
    to_dict(py, &rec)
}

/// `E[beta_k(C(X, r n^(-1/d)))] / n` for binomial or Poissonized samples.
#[pyfunction]
#[pyo3(signature = (density, n, r, k, reps, stream, process = "binomial"))]
#[allow(clippy::too_many_arguments)]
fn estimate_expectation<'py>(
    py: Python<'py>,
    density: &DensityGrid,
    n: usize,
    r: f64,
    k: usize,
    reps: usize,
    stream: &RngStream,
    process: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let process = parse_process(process)?;
    let p = limits::ExpectationParams { n, r, k, reps };
    let (d, s) = (&density.0, stream.0);
    let rec = py.detach(|| limits::estimate_expectation_for(d, &p, process, s)).py()?;
    to_dict(py, &rec)
}

#[pyfunction]
#[pyo3(signature = (dim, k, s_grid, volume, reps, stream, boundary = "torus"))]
#[allow(clippy::too_many_arguments)]
fn build_limit_curve(
    py: Python<'_>,
    dim: usize,
    k: usize,
    s_grid: Vec<f64>,
    volume: f64,
    reps: usize,
    stream: &RngStream,
    boundary: &str,
) -> PyResult<LimitCurve> {
    let boundary = parse_boundary(boundary)?;
    let s = stream.0;
    py.detach(|| limits::build_limit_curve(dim, k, &s_grid, volume, reps, s, boundary))
        .py()
        .map(LimitCurve)
}

/// `(value, stderr)` of the limit integral over a density, from a curve.
#[pyfunction]
fn thermodynamic_integral(density: &DensityGrid, r: f64, k: usize, curve: &LimitCurve) -> PyResult<(f64, f64)> {
    limits::thermodynamic_integral(&density.0, r, k, &curve.0)
        .py()
        .map(|e| (e.value, e.stderr))
}

#[pyfunction]
#[pyo3(signature = (dim, lambda_, theta, r, volume, k, reps, stream, boundary = "torus"))]
#[allow(clippy::too_many_arguments)]
fn scaling_check<'py>(
    py: Python<'py>,
    dim: usize,
    lambda_: f64,
    theta: f64,
    r: f64,
    volume: f64,
    k: usize,
    reps: usize,
    stream: &RngStream,
    boundary: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let p = limits::ScalingParams {
        dim,
        lambda: lambda_,
        theta,
        r,
        volume,
        k,
        reps,
        boundary: parse_boundary(boundary)?,
    };
    let s = stream.0;
    let report = py.detach(|| limits::scaling_check(&p, s)).py()?;
    to_dict(py, &report)
}

/// Convergence table of `E[beta_k]/n` against a given target value.
#[pyfunction]
#[pyo3(signature = (density, n_schedule, r, k, reps, stream, target, target_stderr = 0.0, process = "binomial"))]
#[allow(clippy::too_many_arguments)]
fn convergence_experiment<'py>(
    py: Python<'py>,
    density: &DensityGrid,
    n_schedule: Vec<usize>,
    r: f64,
    k: usize,
    reps: usize,
    stream: &RngStream,
    target: f64,
    target_stderr: f64,
    process: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let process = parse_process(process)?;
    let target = limits::Target {
        value: target,
        stderr: target_stderr,
    };
    let (d, s) = (&density.0, stream.0);
    let table = py
        .detach(|| limits::convergence_experiment(d, &n_schedule, r, k, reps, s, process, target))
        .py()?;
    to_dict(py, &table)
}

#[pyfunction]
fn poissonization_gap<'py>(
    py: Python<'py>,
    density: &DensityGrid,
    n_schedule: Vec<usize>,
    r: f64,
    k: usize,
    reps: usize,
    stream: &RngStream,
) -> PyResult<Bound<'py, PyAny>> {
    let (d, s) = (&density.0, stream.0);
    let table = py
        .detach(|| limits::poissonization_gap(d, &n_schedule, r, k, reps, s))
        .py()?;
    to_dict(py, &table)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn boundary_strip_check<'py>(
    py: Python<'py>,
    dim: usize,
    lambda_: f64,
    r: f64,
    volume: f64,
    sub_box_count: usize,
    k: usize,
    reps: usize,
    stream: &RngStream,
) -> PyResult<Bound<'py, PyAny>> {
    let p = limits::StripParams {
        dim,
        lambda: lambda_,
        r,
        volume,
        sub_box_count,
        k,
        reps,
    };
    let s = stream.0;
    let report = py.detach(|| limits::boundary_strip_check(&p, s)).py()?;
    to_dict(py, &report)
}

#[pymodule]
#[pyo3(name = "betti_thermo")]
fn betti_thermo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Window>()?;
    m.add_class::<PointCloud>()?;
    m.add_class::<RngStream>()?;
    m.add_class::<DensityGrid>()?;
    m.add_class::<SimplicialComplex>()?;
    m.add_class::<LimitCurve>()?;
    m.add_function(wrap_pyfunction!(sample_binomial, m)?)?;
    m.add_function(wrap_pyfunction!(sample_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(poissonize, m)?)?;
    m.add_function(wrap_pyfunction!(superpose, m)?)?;
    m.add_function(wrap_pyfunction!(scale_points, m)?)?;
    m.add_function(wrap_pyfunction!(min_enclosing_ball_radius, m)?)?;
    m.add_function(wrap_pyfunction!(build_complex, m)?)?;
    m.add_function(wrap_pyfunction!(build_cech, m)?)?;
    m.add_function(wrap_pyfunction!(build_rips, m)?)?;
    m.add_function(wrap_pyfunction!(betti_numbers, m)?)?;
    m.add_function(wrap_pyfunction!(connected_components, m)?)?;
    m.add_function(wrap_pyfunction!(betti_diff_bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_betti_rate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_simplex_rate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(build_limit_curve, m)?)?;
    m.add_function(wrap_pyfunction!(thermodynamic_integral, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_check, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(poissonization_gap, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_strip_check, m)?)?;
    Ok(())
}
