//! The two implicit solves used by the schemes:
//!
//! * Helmholtz smoothing `(I - kΔ_h) g = rhs`, symmetric positive definite.
//! * The semi-implicit BDF1 predictor
//!   `m̃ + k [m × Δ_h m̃ + α m × (m × Δ_h m̃)] = m + k f`, with the cross-product
//!   coefficients frozen at the previous step. Nonsymmetric.
//!
//! In 1D both are block-banded and solved directly; in 3D they are applied
//! matrix-free inside a Krylov iteration.

pub mod banded;
pub mod krylov;

use crate::error::{Error, Result};
use crate::grid::{self, Dim, Grid, VectorField};
use crate::vec3::{self, Vec3};

use banded::BandedMatrix;
use krylov::KrylovSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Direct banded in 1D, CG (Helmholtz) or GMRES (predictor) in 3D.
    #[default]
    Auto,
    DirectBanded,
    ConjugateGradient,
    Gmres,
    BiCgStab,
}

impl std::str::FromStr for SolverMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "direct" | "direct_banded" => Ok(Self::DirectBanded),
            "cg" | "conjugate_gradient" => Ok(Self::ConjugateGradient),
            "gmres" => Ok(Self::Gmres),
            "bicgstab" => Ok(Self::BiCgStab),
            _ => Err(format!("unknown solver method '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` means `min(10 · unknowns, 10000)`.
    pub max_iterations: Option<usize>,
    pub method: SolverMethod,
    /// GMRES restart length.
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_iterations: None,
            method: SolverMethod::Auto,
            restart: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "solver tolerances must be positive".into(),
            ));
        }
        if self.max_iterations == Some(0) || self.restart == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations and restart must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn max_iterations_for(&self, unknowns: usize) -> usize {
        self.max_iterations
            .unwrap_or_else(|| (10 * unknowns).min(10_000))
    }

    fn krylov(&self, unknowns: usize) -> KrylovSettings {
        KrylovSettings {
            rel_tol: self.rel_tol,
            max_iterations: self.max_iterations_for(unknowns),
            restart: self.restart,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

/// A square operator on flat vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Right preconditioner hook for GMRES. No preconditioner is used by default.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// `x ↦ x - kΔ_h x`
pub struct HelmholtzOperator<'a> {
    pub grid: &'a Grid,
    pub k: f64,
}

impl LinearOperator for HelmholtzOperator<'_> {
    fn dim(&self) -> usize {
        3 * self.grid.num_cells()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        grid::laplacian_into(x, self.grid, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - self.k * *yi;
        }
    }
}

/// `x ↦ x + k [m × Δ_h x + α m × (m × Δ_h x)]`, cellwise with frozen `m`.
pub struct PredictorOperator<'a> {
    pub grid: &'a Grid,
    pub m: &'a [Vec3],
    pub k: f64,
    pub alpha: f64,
}

impl LinearOperator for PredictorOperator<'_> {
    fn dim(&self) -> usize {
        3 * self.grid.num_cells()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        grid::laplacian_into(x, self.grid, y);
        for (i, m) in self.m.iter().enumerate() {
            let lap = [y[3 * i], y[3 * i + 1], y[3 * i + 2]];
            let mxl = vec3::cross(*m, lap);
            let t = vec3::axpy(mxl, self.alpha, vec3::cross(*m, mxl));
            for q in 0..3 {
                y[3 * i + q] = x[3 * i + q] + self.k * t[q];
            }
        }
    }
}

/// Forward Helmholtz operator applied to a field.
pub fn apply_helmholtz(g: &VectorField, k: f64) -> VectorField {
    let mut out = VectorField::zeros(*g.grid());
    HelmholtzOperator { grid: g.grid(), k }.apply(g.as_flat(), out.as_flat_mut());
    out
}

/// Forward predictor operator applied to `v` with coefficients frozen at `m_prev`.
pub fn apply_predictor(m_prev: &VectorField, v: &VectorField, k: f64, alpha: f64) -> VectorField {
    let mut out = VectorField::zeros(*v.grid());
    PredictorOperator {
        grid: m_prev.grid(),
        m: m_prev.data(),
        k,
        alpha,
    }
    .apply(v.as_flat(), out.as_flat_mut());
    out
}

fn check_report(report: SolveReport) -> Result<SolveReport> {
    if report.converged {
        Ok(report)
    } else {
        Err(Error::NotConverged { report })
    }
}

/// Solves `(I - kΔ_h) g = rhs`.
pub fn helmholtz_solve(
    rhs: &VectorField,
    k: f64,
    cfg: &SolverConfig,
) -> Result<(VectorField, SolveReport)> {
    cfg.validate()?;
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "Helmholtz k must be >= 0, got {k}"
        )));
    }
    let zero_report = SolveReport {
        iterations: 0,
        final_relative_residual: 0.0,
        converged: true,
    };
    if k == 0.0 {
        return Ok((rhs.clone(), zero_report));
    }
    if krylov::norm2(rhs.as_flat()) <= cfg.abs_tol {
        return Ok((VectorField::zeros(*rhs.grid()), zero_report));
    }
    let grid = rhs.grid();
    let op = HelmholtzOperator { grid, k };
    let method = match cfg.method {
        SolverMethod::Auto if grid.dim() == Dim::One => SolverMethod::DirectBanded,
        SolverMethod::Auto => SolverMethod::ConjugateGradient,
        m => m,
    };
    let mut g = rhs.clone();
    let report = match method {
        SolverMethod::DirectBanded => helmholtz_banded(rhs, k, cfg, &mut g)?,
        _ => run_krylov(&op, method, rhs.as_flat(), g.as_flat_mut(), cfg)?,
    };
    check_report(report).map(|r| (g, r))
}

fn helmholtz_banded(
    rhs: &VectorField,
    k: f64,
    cfg: &SolverConfig,
    g: &mut VectorField,
) -> Result<SolveReport> {
    let grid = rhs.grid();
    if grid.dim() != Dim::One {
        return Err(Error::InvalidConfig(
            "direct banded solve is 1D only".into(),
        ));
    }
    let n = grid.num_cells();
    let w = k / (grid.h() * grid.h());
    let mut a = BandedMatrix::zeros(n, 1, 1);
    for i in 0..n {
        a.add(i, i, 1.0);
        if i > 0 {
            a.add(i, i, w);
            a.add(i, i - 1, -w);
        }
        if i + 1 < n {
            a.add(i, i, w);
            a.add(i, i + 1, -w);
        }
    }
    let lu = a.factor()?;
    let mut col = vec![0.0; n];
    for q in 0..3 {
        for (c, v) in col.iter_mut().zip(rhs.data()) {
            *c = v[q];
        }
        lu.solve_in_place(&mut col);
        for (v, c) in g.data_mut().iter_mut().zip(&col) {
            v[q] = *c;
        }
    }
    let op = HelmholtzOperator { grid, k };
    Ok(direct_report(&op, rhs.as_flat(), g.as_flat(), cfg))
}

fn direct_report(op: &dyn LinearOperator, b: &[f64], x: &[f64], cfg: &SolverConfig) -> SolveReport {
    let mut r = vec![0.0; b.len()];
    let rel = krylov::residual(op, b, x, &mut r) / krylov::norm2(b);
    SolveReport {
        iterations: 1,
        final_relative_residual: rel,
        converged: rel <= cfg.rel_tol,
    }
}

fn run_krylov(
    op: &dyn LinearOperator,
    method: SolverMethod,
    b: &[f64],
    x: &mut [f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let s = cfg.krylov(op.dim());
    match method {
        SolverMethod::ConjugateGradient => krylov::conjugate_gradient(op, b, x, &s),
        SolverMethod::Gmres | SolverMethod::Auto => {
            krylov::gmres(op, &IdentityPreconditioner, b, x, &s)
        }
        SolverMethod::BiCgStab => krylov::bicgstab(op, b, x, &s),
        SolverMethod::DirectBanded => unreachable!("handled by the caller"),
    }
}

/// Solves the semi-implicit BDF1 predictor system. `f = None` means no source.
pub fn bdf1_predictor_solve(
    m_prev: &VectorField,
    f: Option<&VectorField>,
    k: f64,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<(VectorField, SolveReport)> {
    bdf1_predictor_solve_with(m_prev, f, k, alpha, cfg, &IdentityPreconditioner)
}

/// [`bdf1_predictor_solve`] with a caller-supplied GMRES preconditioner.
pub fn bdf1_predictor_solve_with(
    m_prev: &VectorField,
    f: Option<&VectorField>,
    k: f64,
    alpha: f64,
    cfg: &SolverConfig,
    precond: &dyn Preconditioner,
) -> Result<(VectorField, SolveReport)> {
    cfg.validate()?;
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "time step must be > 0, got {k}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "damping must be >= 0, got {alpha}"
        )));
    }
    let grid = m_prev.grid();
    let mut rhs = m_prev.clone();
    if let Some(f) = f {
        m_prev.check_same_grid(f)?;
        for (r, fv) in rhs.data_mut().iter_mut().zip(f.data()) {
            *r = vec3::axpy(*r, k, *fv);
        }
    }
    if krylov::norm2(rhs.as_flat()) <= cfg.abs_tol {
        let report = SolveReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
        };
        return Ok((VectorField::zeros(*grid), report));
    }
    let op = PredictorOperator {
        grid,
        m: m_prev.data(),
        k,
        alpha,
    };
    let method = match cfg.method {
        SolverMethod::Auto if grid.dim() == Dim::One => SolverMethod::DirectBanded,
        SolverMethod::Auto => SolverMethod::Gmres,
        SolverMethod::ConjugateGradient => {
            return Err(Error::InvalidConfig(
                "conjugate gradients cannot solve the nonsymmetric predictor system".into(),
            ))
        }
        m => m,
    };
    let mut x = m_prev.clone();
    let report = match method {
        SolverMethod::DirectBanded => predictor_banded(&op, m_prev, &rhs, &mut x, cfg)?,
        SolverMethod::Gmres => {
            let s = cfg.krylov(op.dim());
            krylov::gmres(&op, precond, rhs.as_flat(), x.as_flat_mut(), &s)?
        }
        _ => run_krylov(&op, method, rhs.as_flat(), x.as_flat_mut(), cfg)?,
    };
    check_report(report).map(|r| (x, r))
}

/// Assembles the 1D predictor as a banded matrix in cell-major ordering
/// `3·i + component`; neighbouring blocks sit at most 5 columns away.
pub fn assemble_predictor_1d(m_prev: &VectorField, k: f64, alpha: f64) -> Result<BandedMatrix> {
    let grid = m_prev.grid();
    if grid.dim() != Dim::One {
        return Err(Error::InvalidConfig(
            "direct banded solve is 1D only".into(),
        ));
    }
    let n = grid.num_cells();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut a = BandedMatrix::zeros(3 * n, 5, 5);
    for (i, m) in m_prev.data().iter().enumerate() {
        // M = [m]× + α [m]×², with [m]×² = m mᵀ - |m|² I
        let skew = [[0.0, -m[2], m[1]], [m[2], 0.0, -m[0]], [-m[1], m[0], 0.0]];
        let m2 = vec3::norm_sq(*m);
        let mut coef = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                let sq = m[r] * m[c] - if r == c { m2 } else { 0.0 };
                coef[r][c] = k * (skew[r][c] + alpha * sq);
            }
        }
        let mut neighbours = Vec::with_capacity(2);
        if i > 0 {
            neighbours.push(i - 1);
        }
        if i + 1 < n {
            neighbours.push(i + 1);
        }
        for r in 0..3 {
            a.add(3 * i + r, 3 * i + r, 1.0);
            for c in 0..3 {
                for &j in &neighbours {
                    a.add(3 * i + r, 3 * j + c, coef[r][c] * inv_h2);
                    a.add(3 * i + r, 3 * i + c, -coef[r][c] * inv_h2);
                }
            }
        }
    }
    Ok(a)
}

fn predictor_banded(
    op: &PredictorOperator<'_>,
    m_prev: &VectorField,
    rhs: &VectorField,
    x: &mut VectorField,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let lu = assemble_predictor_1d(m_prev, op.k, op.alpha)?.factor()?;
    let b = rhs.as_flat();
    let xf = x.as_flat_mut();
    xf.copy_from_slice(b);
    lu.solve_in_place(xf);
    let mut report = direct_report(op, b, xf, cfg);
    if !report.converged {
        // one round of iterative refinement
        let mut r = vec![0.0; b.len()];
        krylov::residual(op, b, xf, &mut r);
        lu.solve_in_place(&mut r);
        for (xi, di) in xf.iter_mut().zip(&r) {
            *xi += di;
        }
        report = direct_report(op, b, xf, cfg);
        report.iterations = 2;
    }
    if !xf.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteSolve {
            iterations: report.iterations,
        });
    }
    Ok(report)
}
