//! Python bindings. Fields cross the boundary as lists of `(m1, m2, m3)`
//! triples in x-fastest cell order.

use std::str::FromStr;

use llg_core::grid::{self, Grid as CoreGrid, VectorField as CoreField};
use llg_core::harness::{self, ConvergenceTable, Refinement};
use llg_core::manufactured::{self, ExactSolution, InitialProfile, ManufacturedForcing};
use llg_core::rotation;
use llg_core::schemes::{self, Forcing};
use llg_core::{Error, ForcingMode, ForcingTime, Scheme, SchemeConfig, SolverConfig, SolverMethod};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(
    llg,
    NumericalError,
    PyRuntimeError,
    "Blowup, solver or projection failure."
);

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse<T: FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

#[pyclass(frozen, skip_from_py_object, module = "llg")]
#[derive(Clone, Copy)]
struct Grid {
    inner: CoreGrid,
}

#[pymethods]
impl Grid {
    /// `Grid(nx)` is 1D; `Grid(nx, ny, nz)` is 3D on the unit cube.
    #[new]
    #[pyo3(signature = (nx, ny=None, nz=None))]
    fn new(nx: usize, ny: Option<usize>, nz: Option<usize>) -> PyResult<Self> {
        let inner = match (ny, nz) {
            (None, None) => CoreGrid::new_1d(nx),
            (Some(ny), Some(nz)) => CoreGrid::new_3d(nx, ny, nz),
            _ => {
                return Err(PyValueError::new_err(
                    "give either nx alone or nx, ny and nz",
                ))
            }
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn cube(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: CoreGrid::cube(n).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim().as_usize()
    }

    #[getter]
    fn cells(&self) -> (usize, usize, usize) {
        let c = self.inner.cells();
        (c[0], c[1], c[2])
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn num_cells(&self) -> usize {
        self.inner.num_cells()
    }

    fn centers(&self) -> Vec<[f64; 3]> {
        (0..self.inner.num_cells())
            .map(|i| self.inner.center(i))
            .collect()
    }

    fn __repr__(&self) -> String {
        let [x, y, z] = self.inner.cells();
        format!("Grid({x}, {y}, {z})")
    }
}

#[pyclass(frozen, skip_from_py_object, module = "llg")]
#[derive(Clone)]
struct VectorField {
    inner: CoreField,
}

#[pymethods]
impl VectorField {
    #[new]
    fn new(grid: &Grid, data: Vec<[f64; 3]>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreField::new(grid.inner, data).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn constant(grid: &Grid, value: [f64; 3]) -> Self {
        Self {
            inner: CoreField::constant(grid.inner, value),
        }
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid {
            inner: *self.inner.grid(),
        }
    }

    fn data(&self) -> Vec<[f64; 3]> {
        self.inner.data().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.num_cells()
    }

    fn __sub__(&self, other: &VectorField) -> PyResult<VectorField> {
        Ok(Self {
            inner: self.inner.sub(&other.inner).map_err(to_py)?,
        })
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.write_csv_file(&path).map_err(to_py)
    }
}

fn wrap(inner: CoreField) -> VectorField {
    VectorField { inner }
}

#[pyfunction]
fn laplacian(m: &VectorField) -> VectorField {
    wrap(grid::laplacian_neumann(&m.inner))
}

#[pyfunction]
fn norm_linf(e: &VectorField) -> f64 {
    grid::norm_linf(&e.inner)
}

#[pyfunction]
fn norm_l2(e: &VectorField) -> f64 {
    grid::norm_l2(&e.inner)
}

#[pyfunction]
fn norm_h1(e: &VectorField) -> f64 {
    grid::norm_h1(&e.inner)
}

#[pyfunction]
fn exchange_energy(m: &VectorField) -> f64 {
    grid::exchange_energy(&m.inner)
}

#[pyfunction]
fn max_unit_deviation(m: &VectorField) -> f64 {
    grid::max_unit_deviation(&m.inner)
}

/// Crank–Nicolson rotation of `m` about the axis `a` over `dt`.
#[pyfunction]
fn cn_rotate(m: [f64; 3], a: [f64; 3], dt: f64) -> [f64; 3] {
    rotation::cn_rotate(m, a, dt)
}

#[pyfunction]
fn cayley_matrix(a: [f64; 3], dt: f64) -> [[f64; 3]; 3] {
    rotation::cayley_matrix(a, dt)
}

#[pyfunction]
#[pyo3(signature = (profile, grid, t0=0.01))]
fn initial_profile(profile: &str, grid: &Grid, t0: f64) -> PyResult<VectorField> {
    let id: InitialProfile = parse(profile)?;
    manufactured::initial_profile(id, &grid.inner, t0)
        .map(wrap)
        .map_err(to_py)
}

fn exact_for(grid: &Grid) -> ExactSolution {
    ExactSolution::for_dim(grid.inner.dim())
}

/// The manufactured exact solution sampled at time `t`.
#[pyfunction]
fn exact_solution(grid: &Grid, t: f64) -> PyResult<VectorField> {
    exact_for(grid)
        .sample(&grid.inner, t)
        .map(wrap)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (grid, t, alpha=0.01))]
fn manufactured_forcing(grid: &Grid, t: f64, alpha: f64) -> VectorField {
    let sol = exact_for(grid);
    wrap(CoreField::from_fn(grid.inner, |x| sol.forcing(x, t, alpha)))
}

fn solver_config(solver: &str, rel_tol: Option<f64>) -> PyResult<SolverConfig> {
    let mut cfg = SolverConfig {
        method: parse::<SolverMethod>(solver)?,
        ..SolverConfig::default()
    };
    if let Some(tol) = rel_tol {
        cfg.rel_tol = tol;
    }
    Ok(cfg)
}

/// Integrates from `t0` to `t_end`. With `manufactured=True` the source
/// that makes the exact solution hold is applied. Returns the final field,
/// the step times and the per-step exchange energies.
#[pyfunction]
#[pyo3(signature = (
    m0, t0, t_end, k, scheme="proposed", alpha=0.01, manufactured=false,
    forcing="rotational", forcing_time="start", solver="auto", rel_tol=None
))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    m0: &VectorField,
    t0: f64,
    t_end: f64,
    k: f64,
    scheme: &str,
    alpha: f64,
    manufactured: bool,
    forcing: &str,
    forcing_time: &str,
    solver: &str,
    rel_tol: Option<f64>,
) -> PyResult<(VectorField, Vec<f64>, Vec<f64>)> {
    let mode: ForcingMode = if manufactured {
        parse(forcing)?
    } else {
        ForcingMode::None
    };
    let cfg = SchemeConfig {
        scheme: parse(scheme)?,
        alpha,
        k,
        forcing_mode: mode,
        forcing_time: parse::<ForcingTime>(forcing_time)?,
        solver: solver_config(solver, rel_tol)?,
    };
    let source = ManufacturedForcing {
        solution: ExactSolution::for_dim(m0.inner.grid().dim()),
        alpha,
    };
    let f: Option<&dyn Forcing> = manufactured.then_some(&source as &dyn Forcing);
    let m0 = m0.inner.clone();
    let (m, traj) = py
        .detach(|| schemes::evolve(&m0, t0, t_end, &cfg, f, &mut []))
        .map_err(to_py)?;
    let energies = traj.diagnostics.iter().map(|d| d.energy).collect();
    Ok((wrap(m), traj.times, energies))
}

fn table_to_dict<'py>(py: Python<'py>, table: &ConvergenceTable) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    let rows: Vec<(f64, f64, f64, f64, f64)> = table
        .rows
        .iter()
        .map(|r| (r.k, r.h, r.err_linf, r.err_l2, r.err_h1))
        .collect();
    out.set_item("rows", rows)?;
    let orders = PyDict::new(py);
    for o in &table.orders {
        let key = match o.parameter {
            Refinement::K => "k",
            Refinement::H => "h",
        };
        orders.set_item(key, (o.linf, o.l2, o.h1))?;
    }
    out.set_item("orders", orders)?;
    let mut buf = Vec::new();
    harness::write_table(table, &mut buf, false).map_err(to_py)?;
    out.set_item("csv", String::from_utf8_lossy(&buf).into_owned())?;
    Ok(out)
}

fn forcing_pair(forcing: &str, forcing_time: &str) -> PyResult<(ForcingMode, ForcingTime)> {
    Ok((parse(forcing)?, parse(forcing_time)?))
}

/// First-order study in k on a fixed 1D grid.
#[pyfunction]
#[pyo3(signature = (ks=None, cells=2000, alpha=0.01, t_end=0.1, forcing="direct", forcing_time="start"))]
fn temporal_study_1d<'py>(
    py: Python<'py>,
    ks: Option<Vec<f64>>,
    cells: usize,
    alpha: f64,
    t_end: f64,
    forcing: &str,
    forcing_time: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let (forcing_mode, forcing_time) = forcing_pair(forcing, forcing_time)?;
    let study = harness::TemporalStudy1d {
        cells,
        alpha,
        t_end,
        ks: ks.unwrap_or_else(|| harness::TEMPORAL_KS_1D.to_vec()),
        forcing_mode,
        forcing_time,
        ..Default::default()
    };
    let table = py
        .detach(|| harness::run_temporal_study_1d(&study))
        .map_err(to_py)?;
    table_to_dict(py, &table)
}

/// Second-order study in h with a fixed small step.
#[pyfunction]
#[pyo3(signature = (cells=None, k=1e-6, alpha=0.01, t_end=0.1, forcing="direct", forcing_time="start"))]
fn spatial_study_1d<'py>(
    py: Python<'py>,
    cells: Option<Vec<usize>>,
    k: f64,
    alpha: f64,
    t_end: f64,
    forcing: &str,
    forcing_time: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let (forcing_mode, forcing_time) = forcing_pair(forcing, forcing_time)?;
    let study = harness::SpatialStudy1d {
        k,
        alpha,
        t_end,
        cells: cells.unwrap_or_else(|| harness::SPATIAL_CELLS_1D.to_vec()),
        forcing_mode,
        forcing_time,
        ..Default::default()
    };
    let table = py
        .detach(|| harness::run_spatial_study_1d(&study))
        .map_err(to_py)?;
    table_to_dict(py, &table)
}

/// Coupled 3D study; `levels` are `(steps, cells per axis)` pairs.
#[pyfunction]
#[pyo3(signature = (levels=None, finest=false, alpha=0.01, t_end=0.1, forcing="direct", forcing_time="start"))]
fn coupled_study_3d<'py>(
    py: Python<'py>,
    levels: Option<Vec<(usize, usize)>>,
    finest: bool,
    alpha: f64,
    t_end: f64,
    forcing: &str,
    forcing_time: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let (forcing_mode, forcing_time) = forcing_pair(forcing, forcing_time)?;
    let mut study = harness::CoupledStudy3d::new(finest);
    if let Some(levels) = levels {
        study.levels = levels;
    }
    study.alpha = alpha;
    study.t_end = t_end;
    study.forcing_mode = forcing_mode;
    study.forcing_time = forcing_time;
    let table = py
        .detach(|| harness::run_coupled_study_3d(&study))
        .map_err(to_py)?;
    table_to_dict(py, &table)
}

/// Unforced runs; returns `(k, h, max_unit_deviation)` per level.
#[pyfunction]
#[pyo3(signature = (dim=1, scheme="proposed", levels=None, finest=false))]
fn norm_study(
    py: Python<'_>,
    dim: usize,
    scheme: &str,
    levels: Option<Vec<(f64, usize)>>,
    finest: bool,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let mut study = match dim {
        1 => harness::NormStudy::one_d(),
        3 => harness::NormStudy::three_d(finest),
        _ => return Err(PyValueError::new_err("dim must be 1 or 3")),
    };
    study.scheme = parse(scheme)?;
    if let Some(levels) = levels {
        study.levels = levels;
    }
    let table = py
        .detach(|| harness::run_norm_study(&study))
        .map_err(to_py)?;
    Ok(table
        .rows
        .iter()
        .map(|r| (r.k, r.h, r.max_unit_deviation))
        .collect())
}

/// Least-squares log-log slope and the consecutive pairwise slopes.
#[pyfunction]
fn estimate_order(parameters: Vec<f64>, errors: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
    let fit = harness::estimate_order(&parameters, &errors).map_err(to_py)?;
    Ok((fit.slope, fit.pairwise))
}

#[pymodule]
fn llg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<VectorField>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add(
        "SCHEMES",
        [
            Scheme::Proposed,
            Scheme::Scheme1Explicit,
            Scheme::Scheme3SemiImplicit,
            Scheme::Bdf1Projection,
        ]
        .map(Scheme::name),
    )?;
    m.add("PROFILES", InitialProfile::ALL.map(InitialProfile::name))?;
    m.add_function(wrap_pyfunction!(laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(norm_linf, m)?)?;
    m.add_function(wrap_pyfunction!(norm_l2, m)?)?;
    m.add_function(wrap_pyfunction!(norm_h1, m)?)?;
    m.add_function(wrap_pyfunction!(exchange_energy, m)?)?;
    m.add_function(wrap_pyfunction!(max_unit_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(cn_rotate, m)?)?;
    m.add_function(wrap_pyfunction!(cayley_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(initial_profile, m)?)?;
    m.add_function(wrap_pyfunction!(exact_solution, m)?)?;
    m.add_function(wrap_pyfunction!(manufactured_forcing, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_study_1d, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_study_1d, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_study_3d, m)?)?;
    m.add_function(wrap_pyfunction!(norm_study, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_order, m)?)?;
    Ok(())
}
