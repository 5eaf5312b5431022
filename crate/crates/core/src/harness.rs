//! Convergence and norm-preservation studies against the manufactured
//! solutions, order fitting, and CSV emission of the resulting tables.
//!
//! Rows of a study are independent runs and are computed in parallel; the
//! table is always assembled in refinement order.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, fmt_f64, Dim, Grid};
use crate::manufactured::{initial_profile, ExactSolution, InitialProfile, ManufacturedForcing};
use crate::schemes::{self, Forcing, ForcingMode, ForcingTime, Observer, Scheme, SchemeConfig};
use crate::solvers::SolverConfig;

/// Step sizes of the 1D temporal study.
pub const TEMPORAL_KS_1D: [f64; 7] = [2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4];

/// Cells per axis of the 1D spatial study.
pub const SPATIAL_CELLS_1D: [usize; 5] = [16, 24, 32, 48, 64];

/// `(steps to T, cells per axis)` of the 3D coupled study, `k ≈ h²`.
pub const COUPLED_LEVELS_3D: [(usize, usize); 5] =
    [(10, 10), (40, 20), (57, 24), (78, 28), (102, 32)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    K,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorColumn {
    Linf,
    L2,
    H1,
}

impl ErrorColumn {
    pub const ALL: [ErrorColumn; 3] = [Self::Linf, Self::L2, Self::H1];
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowDiagnostics {
    pub steps: usize,
    pub total_iterations: usize,
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub k: f64,
    pub h: f64,
    pub err_linf: f64,
    pub err_l2: f64,
    pub err_h1: f64,
    pub diagnostics: Option<RowDiagnostics>,
}

impl ConvergenceRow {
    pub fn error(&self, column: ErrorColumn) -> f64 {
        match column {
            ErrorColumn::Linf => self.err_linf,
            ErrorColumn::L2 => self.err_l2,
            ErrorColumn::H1 => self.err_h1,
        }
    }

    pub fn parameter(&self, p: Refinement) -> f64 {
        match p {
            Refinement::K => self.k,
            Refinement::H => self.h,
        }
    }
}

/// Fitted orders of the three error columns against one refinement parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderRow {
    pub parameter: Refinement,
    pub linf: f64,
    pub l2: f64,
    pub h1: f64,
}

impl OrderRow {
    pub fn get(&self, column: ErrorColumn) -> f64 {
        match column {
            ErrorColumn::Linf => self.linf,
            ErrorColumn::L2 => self.l2,
            ErrorColumn::H1 => self.h1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMetadata {
    pub scheme: Scheme,
    pub alpha: f64,
    pub t_end: f64,
    pub forcing_mode: ForcingMode,
    pub forcing_time: ForcingTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// Coarse to fine.
    pub rows: Vec<ConvergenceRow>,
    pub orders: Vec<OrderRow>,
    pub metadata: TableMetadata,
}

impl ConvergenceTable {
    pub fn order(&self, parameter: Refinement) -> Option<&OrderRow> {
        self.orders.iter().find(|o| o.parameter == parameter)
    }
}

/// Least-squares slope of `log(error)` against `log(parameter)`, plus the
/// slopes between consecutive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub pairwise: Vec<f64>,
}

pub fn estimate_order(parameters: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if parameters.len() != errors.len() {
        return Err(Error::InvalidOrderInput(format!(
            "{} parameters but {} errors",
            parameters.len(),
            errors.len()
        )));
    }
    if errors.len() < 2 {
        return Err(Error::InvalidOrderInput("need at least two rows".into()));
    }
    if let Some(v) = parameters
        .iter()
        .chain(errors)
        .find(|v| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::InvalidOrderInput(format!(
            "values must be positive and finite, got {v}"
        )));
    }
    let xs: Vec<f64> = parameters.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidOrderInput(
            "refinement parameter does not vary".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let pairwise = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(OrderFit {
        slope: sxy / sxx,
        pairwise,
    })
}

pub fn fit_orders(rows: &[ConvergenceRow], parameter: Refinement) -> Result<OrderRow> {
    let params: Vec<f64> = rows.iter().map(|r| r.parameter(parameter)).collect();
    let fit = |c: ErrorColumn| -> Result<f64> {
        let errs: Vec<f64> = rows.iter().map(|r| r.error(c)).collect();
        Ok(estimate_order(&params, &errs)?.slope)
    };
    Ok(OrderRow {
        parameter,
        linf: fit(ErrorColumn::Linf)?,
        l2: fit(ErrorColumn::L2)?,
        h1: fit(ErrorColumn::H1)?,
    })
}

/// Runs `m_e(·,0) → T` on `grid` with step `k` and measures the error at `T`.
pub fn accuracy_run(grid: &Grid, k: f64, cfg: &SchemeConfig, t_end: f64) -> Result<ConvergenceRow> {
    let exact = ExactSolution::for_dim(grid.dim());
    let forcing = ManufacturedForcing {
        solution: exact,
        alpha: cfg.alpha,
    };
    let cfg = SchemeConfig { k, ..cfg.clone() };
    let m0 = exact.sample(grid, 0.0)?;
    let (m, traj) = schemes::evolve(
        &m0,
        0.0,
        t_end,
        &cfg,
        Some(&forcing as &dyn Forcing),
        &mut [],
    )?;
    let err = m.sub(&exact.sample(grid, t_end)?)?;
    let diagnostics = RowDiagnostics {
        steps: traj.steps(),
        total_iterations: traj
            .diagnostics
            .iter()
            .filter_map(|d| d.solve.map(|s| s.iterations))
            .sum(),
        max_relative_residual: traj
            .diagnostics
            .iter()
            .filter_map(|d| d.solve.map(|s| s.final_relative_residual))
            .fold(0.0, f64::max),
    };
    Ok(ConvergenceRow {
        k: t_end / traj.steps().max(1) as f64,
        h: grid.h(),
        err_linf: grid::norm_linf(&err),
        err_l2: grid::norm_l2(&err),
        err_h1: grid::norm_h1(&err),
        diagnostics: Some(diagnostics),
    })
}

/// Runs independent rows in parallel and keeps the prefix that succeeded.
fn collect_rows<T, F>(levels: &[T], run: F) -> (Vec<ConvergenceRow>, Option<Error>)
where
    T: Sync,
    F: Fn(&T) -> Result<ConvergenceRow> + Sync + Send,
{
    let results: Vec<Result<ConvergenceRow>> = levels.par_iter().map(run).collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return (rows, Some(e)),
        }
    }
    (rows, None)
}

fn finish_table(
    rows: Vec<ConvergenceRow>,
    failure: Option<Error>,
    params: &[Refinement],
    metadata: TableMetadata,
) -> Result<ConvergenceTable> {
    let mut table = ConvergenceTable {
        rows,
        orders: Vec::new(),
        metadata,
    };
    if table.rows.len() >= 2 {
        for &p in params {
            table.orders.push(fit_orders(&table.rows, p)?);
        }
    }
    match failure {
        None => Ok(table),
        Some(source) => Err(Error::StudyAborted {
            partial: Box::new(table),
            source: Box::new(source),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalStudy1d {
    pub cells: usize,
    pub alpha: f64,
    pub t_end: f64,
    pub ks: Vec<f64>,
    pub forcing_mode: ForcingMode,
    pub forcing_time: ForcingTime,
    pub solver: SolverConfig,
}

impl Default for TemporalStudy1d {
    fn default() -> Self {
        Self {
            cells: 2000,
            alpha: 0.01,
            t_end: 0.1,
            ks: TEMPORAL_KS_1D.to_vec(),
            forcing_mode: ForcingMode::Direct,
            forcing_time: ForcingTime::Start,
            solver: SolverConfig::default(),
        }
    }
}

pub fn run_temporal_study_1d(study: &TemporalStudy1d) -> Result<ConvergenceTable> {
    let grid = Grid::new_1d(study.cells)?;
    let cfg = SchemeConfig {
        scheme: Scheme::Proposed,
        alpha: study.alpha,
        k: study.ks.first().copied().unwrap_or(1.0),
        forcing_mode: study.forcing_mode,
        forcing_time: study.forcing_time,
        solver: study.solver.clone(),
    };
    cfg.validate()?;
    let (rows, failure) = collect_rows(&study.ks, |&k| accuracy_run(&grid, k, &cfg, study.t_end));
    finish_table(rows, failure, &[Refinement::K], metadata(&cfg, study.t_end))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialStudy1d {
    pub k: f64,
    pub alpha: f64,
    pub t_end: f64,
    pub cells: Vec<usize>,
    pub forcing_mode: ForcingMode,
    pub forcing_time: ForcingTime,
    pub solver: SolverConfig,
}

impl Default for SpatialStudy1d {
    fn default() -> Self {
        Self {
            k: 1e-6,
            alpha: 0.01,
            t_end: 0.1,
            cells: SPATIAL_CELLS_1D.to_vec(),
            forcing_mode: ForcingMode::Direct,
            forcing_time: ForcingTime::Start,
            solver: SolverConfig::default(),
        }
    }
}

pub fn run_spatial_study_1d(study: &SpatialStudy1d) -> Result<ConvergenceTable> {
    let cfg = SchemeConfig {
        scheme: Scheme::Proposed,
        alpha: study.alpha,
        k: study.k,
        forcing_mode: study.forcing_mode,
        forcing_time: study.forcing_time,
        solver: study.solver.clone(),
    };
    cfg.validate()?;
    let (rows, failure) = collect_rows(&study.cells, |&n| {
        accuracy_run(&Grid::new_1d(n)?, study.k, &cfg, study.t_end)
    });
    finish_table(rows, failure, &[Refinement::H], metadata(&cfg, study.t_end))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledStudy3d {
    pub alpha: f64,
    pub t_end: f64,
    /// `(steps to T, cells per axis)` per row.
    pub levels: Vec<(usize, usize)>,
    pub forcing_mode: ForcingMode,
    pub forcing_time: ForcingTime,
    pub solver: SolverConfig,
}

impl CoupledStudy3d {
    /// Levels through 28³, or through 32³ with `include_finest`.
    pub fn new(include_finest: bool) -> Self {
        let n = if include_finest { 5 } else { 4 };
        Self {
            alpha: 0.01,
            t_end: 0.1,
            levels: COUPLED_LEVELS_3D[..n].to_vec(),
            forcing_mode: ForcingMode::Direct,
            forcing_time: ForcingTime::Start,
            solver: SolverConfig::default(),
        }
    }
}

impl Default for CoupledStudy3d {
    fn default() -> Self {
        Self::new(false)
    }
}

pub fn run_coupled_study_3d(study: &CoupledStudy3d) -> Result<ConvergenceTable> {
    if study.levels.iter().any(|&(steps, _)| steps == 0) {
        return Err(Error::InvalidConfig("step counts must be positive".into()));
    }
    let cfg = SchemeConfig {
        scheme: Scheme::Proposed,
        alpha: study.alpha,
        k: study.t_end / study.levels.first().map_or(1, |l| l.0) as f64,
        forcing_mode: study.forcing_mode,
        forcing_time: study.forcing_time,
        solver: study.solver.clone(),
    };
    cfg.validate()?;
    let (rows, failure) = collect_rows(&study.levels, |&(steps, n)| {
        accuracy_run(
            &Grid::cube(n)?,
            study.t_end / steps as f64,
            &cfg,
            study.t_end,
        )
    });
    finish_table(
        rows,
        failure,
        &[Refinement::K, Refinement::H],
        metadata(&cfg, study.t_end),
    )
}

fn metadata(cfg: &SchemeConfig, t_end: f64) -> TableMetadata {
    TableMetadata {
        scheme: cfg.scheme,
        alpha: cfg.alpha,
        t_end,
        forcing_mode: cfg.forcing_mode,
        forcing_time: cfg.forcing_time,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub k: f64,
    pub h: f64,
    pub max_unit_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTable {
    pub rows: Vec<NormRow>,
    pub metadata: TableMetadata,
}

/// Unforced runs from a named profile, tracking `max_i | |m_i| - 1 |`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStudy {
    pub dim: Dim,
    pub scheme: Scheme,
    pub alpha: f64,
    pub t_end: f64,
    /// `(k, cells per axis)` per row.
    pub levels: Vec<(f64, usize)>,
    pub profile: InitialProfile,
    pub profile_t0: f64,
    /// Sample the deviation every this many steps (the final step always counts).
    pub record_every: usize,
    pub solver: SolverConfig,
}

impl NormStudy {
    pub fn one_d() -> Self {
        Self {
            dim: Dim::One,
            scheme: Scheme::Proposed,
            alpha: 0.01,
            t_end: 0.1,
            levels: TEMPORAL_KS_1D.iter().map(|&k| (k, 2000)).collect(),
            profile: InitialProfile::Cosine1d,
            profile_t0: 0.01,
            record_every: 1,
            solver: SolverConfig::default(),
        }
    }

    pub fn three_d(include_finest: bool) -> Self {
        let t_end = 0.1;
        let n = if include_finest { 5 } else { 4 };
        Self {
            dim: Dim::Three,
            scheme: Scheme::Proposed,
            alpha: 0.01,
            t_end,
            levels: COUPLED_LEVELS_3D[..n]
                .iter()
                .map(|&(steps, cells)| (t_end / steps as f64, cells))
                .collect(),
            profile: InitialProfile::Xyz3d,
            profile_t0: 0.01,
            record_every: 1,
            solver: SolverConfig::default(),
        }
    }
}

struct DeviationTracker {
    every: usize,
    total: usize,
    max: f64,
}

impl Observer for DeviationTracker {
    fn observe(&mut self, step: usize, _t: f64, m: &grid::VectorField) {
        if step.is_multiple_of(self.every) || step == self.total {
            self.max = self.max.max(grid::max_unit_deviation(m));
        }
    }
}

pub fn run_norm_study(study: &NormStudy) -> Result<NormTable> {
    if study.profile.dim() != study.dim {
        return Err(Error::InvalidConfig(format!(
            "profile {} does not match a {:?} study",
            study.profile, study.dim
        )));
    }
    if study.record_every == 0 {
        return Err(Error::InvalidConfig(
            "record_every must be at least 1".into(),
        ));
    }
    let base = SchemeConfig {
        scheme: study.scheme,
        alpha: study.alpha,
        k: study.levels.first().map_or(1.0, |l| l.0),
        forcing_mode: ForcingMode::None,
        forcing_time: ForcingTime::Start,
        solver: study.solver.clone(),
    };
    base.validate()?;
    let results: Vec<Result<NormRow>> = study
        .levels
        .par_iter()
        .map(|&(k, cells)| {
            let grid = match study.dim {
                Dim::One => Grid::new_1d(cells)?,
                Dim::Three => Grid::cube(cells)?,
            };
            let m0 = initial_profile(study.profile, &grid, study.profile_t0)?;
            let cfg = SchemeConfig { k, ..base.clone() };
            let (steps, k_eff) = schemes::step_count(0.0, study.t_end, k)?;
            let mut tracker = DeviationTracker {
                every: study.record_every,
                total: steps,
                max: 0.0,
            };
            schemes::evolve(&m0, 0.0, study.t_end, &cfg, None, &mut [&mut tracker])?;
            Ok(NormRow {
                k: k_eff,
                h: grid.h(),
                max_unit_deviation: tracker.max,
            })
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(NormTable {
        rows,
        metadata: metadata(&base, study.t_end),
    })
}

/// Writes `k,h,err_linf,err_l2,err_h1`, one line per row, then the order
/// rows (`order,,…` against k first, `,order,…` against h second). With
/// `diagnostics`, two trailing columns carry solver iteration totals and the
/// worst relative residual.
pub fn write_table<W: Write>(table: &ConvergenceTable, mut w: W, diagnostics: bool) -> Result<()> {
    if table.rows.len() < 2 || table.orders.is_empty() {
        return Err(Error::InvalidOrderInput(
            "a convergence table needs at least two rows".into(),
        ));
    }
    let io = |source| Error::Io {
        path: "<table>".into(),
        source,
    };
    let extra = if diagnostics {
        ",iterations,max_residual"
    } else {
        ""
    };
    writeln!(w, "k,h,err_linf,err_l2,err_h1{extra}").map_err(io)?;
    for r in &table.rows {
        write!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.k),
            fmt_f64(r.h),
            fmt_f64(r.err_linf),
            fmt_f64(r.err_l2),
            fmt_f64(r.err_h1)
        )
        .map_err(io)?;
        if diagnostics {
            let d = r.diagnostics.unwrap_or_default();
            write!(
                w,
                ",{},{}",
                d.total_iterations,
                fmt_f64(d.max_relative_residual)
            )
            .map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    for (i, o) in table.orders.iter().enumerate() {
        let label = if i == 0 { "order," } else { ",order" };
        write!(
            w,
            "{label},{},{},{}",
            fmt_f64(o.linf),
            fmt_f64(o.l2),
            fmt_f64(o.h1)
        )
        .map_err(io)?;
        if diagnostics {
            write!(w, ",,").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    Ok(())
}

pub fn write_table_csv(table: &ConvergenceTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_table(table, &mut buf, false)?;
    write_file(path, &buf)
}

pub fn write_norm_table<W: Write>(table: &NormTable, mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,h,max_unit_deviation")?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(r.k),
            fmt_f64(r.h),
            fmt_f64(r.max_unit_deviation)
        )?;
    }
    Ok(())
}

pub fn write_norm_table_csv(table: &NormTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_norm_table(table, &mut buf).expect("writing to memory");
    write_file(path, &buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
