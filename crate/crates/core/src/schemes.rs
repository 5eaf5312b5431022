//! Time steppers for `m_t = -m × Δm - α m × (m × Δm) + f`.
//!
//! Every norm-preserving scheme ends with a per-cell Crank–Nicolson rotation
//! about a frozen axis; they differ only in how the axis is built:
//!
//! | scheme | axis |
//! |---|---|
//! | proposed | `b + α m_n × b`, `b = Δ_h m̃` from the BDF1 predictor |
//! | scheme 1 | `b + α m_n × b`, `b = Δ_h m_n` |
//! | scheme 3 | `b + α m_n × b`, `b = Δ_h (I - kΔ_h)⁻¹ m_n` |
//!
//! The BDF1 projection baseline skips the rotation and normalizes the
//! predictor instead.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{self, VectorField};
use crate::rotation;
use crate::solvers::{self, SolveReport, SolverConfig};
use crate::vec3::{self, Vec3};

/// Any component beyond this magnitude aborts a run.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Cells shorter than this cannot be projected onto the sphere.
pub const DEGENERATE_LENGTH: f64 = 1e-8;

/// A space-time source term.
pub trait Forcing: Sync {
    fn eval(&self, x: Vec3, t: f64) -> Vec3;
}

impl<F> Forcing for F
where
    F: Fn(Vec3, f64) -> Vec3 + Sync,
{
    fn eval(&self, x: Vec3, t: f64) -> Vec3 {
        self(x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Proposed,
    Scheme1Explicit,
    Scheme3SemiImplicit,
    Bdf1Projection,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Scheme1Explicit => "scheme1",
            Self::Scheme3SemiImplicit => "scheme3",
            Self::Bdf1Projection => "bdf1-projection",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "scheme1" => Ok(Self::Scheme1Explicit),
            "scheme3" => Ok(Self::Scheme3SemiImplicit),
            "bdf1-projection" | "bdf1" => Ok(Self::Bdf1Projection),
            _ => Err(format!(
                "unknown scheme '{s}' (expected proposed, scheme1, scheme3, bdf1-projection)"
            )),
        }
    }
}

/// Where the source enters the discrete equations.
///
/// `Direct` adds `k f` to the right-hand side of both stages.
/// `Rotational` adds it to the predictor but folds it into the corrector
/// axis as `m_n × f`, which keeps the corrector an exact rotation; for
/// tangential `f` on the unit sphere `-m × (m × f) = f`. The sampling time
/// is set separately by [`ForcingTime`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcingMode {
    None,
    Direct,
    #[default]
    Rotational,
}

impl ForcingMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Direct => "direct",
            Self::Rotational => "rotational",
        }
    }
}

impl fmt::Display for ForcingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForcingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "direct" => Ok(Self::Direct),
            "rotational" => Ok(Self::Rotational),
            _ => Err(format!(
                "unknown forcing mode '{s}' (expected none, direct, rotational)"
            )),
        }
    }
}

/// Time level at which the source is sampled during the step `t_n → t_{n+1}`.
///
/// `Start` is an explicit (forward Euler) source term and is what the
/// accuracy studies use; `End` is the backward-Euler placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcingTime {
    #[default]
    Start,
    End,
}

impl ForcingTime {
    pub fn name(self) -> &'static str {
        match self {
            Self::Start => "start",
            Self::End => "end",
        }
    }
}

impl fmt::Display for ForcingTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForcingTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "start" => Ok(Self::Start),
            "end" => Ok(Self::End),
            _ => Err(format!("unknown forcing time '{s}' (expected start, end)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub alpha: f64,
    pub k: f64,
    pub forcing_mode: ForcingMode,
    pub forcing_time: ForcingTime,
    pub solver: SolverConfig,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, alpha: f64, k: f64) -> Self {
        Self {
            scheme,
            alpha,
            k,
            forcing_mode: ForcingMode::None,
            forcing_time: ForcingTime::Start,
            solver: SolverConfig::default(),
        }
    }

    pub fn with_forcing(mut self, mode: ForcingMode) -> Self {
        self.forcing_mode = mode;
        self
    }

    pub fn with_forcing_time(mut self, time: ForcingTime) -> Self {
        self.forcing_time = time;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "time step must be > 0, got {}",
                self.k
            )));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "damping must be >= 0, got {}",
                self.alpha
            )));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub field: VectorField,
    /// Report of the implicit solve, for schemes that have one.
    pub report: Option<SolveReport>,
}

fn sample_forcing(
    m: &VectorField,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
    t_n: f64,
) -> Option<VectorField> {
    if cfg.forcing_mode == ForcingMode::None {
        return None;
    }
    let f = forcing?;
    let t = match cfg.forcing_time {
        ForcingTime::Start => t_n,
        ForcingTime::End => t_n + cfg.k,
    };
    Some(VectorField::from_fn(*m.grid(), |x| f.eval(x, t)))
}

/// Per-cell corrector: rotate `m` about `axis`, with the source placed
/// according to `mode`.
#[inline]
fn corrector(m: Vec3, axis: Vec3, f: Option<Vec3>, k: f64, mode: ForcingMode) -> Vec3 {
    match (f, mode) {
        (Some(f), ForcingMode::Rotational) => {
            rotation::cn_rotate(m, vec3::add(axis, vec3::cross(m, f)), k)
        }
        (Some(f), ForcingMode::Direct) => {
            let r = vec3::axpy(rotation::cn_rhs(m, axis, k), k, f);
            rotation::cn_solve(r, axis, k)
        }
        _ => rotation::cn_rotate(m, axis, k),
    }
}

/// Rotates every cell of `m_n` about `b + α m_n × b`.
fn rotate_all(
    m_n: &VectorField,
    b: &VectorField,
    f: Option<&VectorField>,
    cfg: &SchemeConfig,
) -> VectorField {
    let mut out = m_n.clone();
    for (i, m) in out.data_mut().iter_mut().enumerate() {
        let bi = b.data()[i];
        let axis = vec3::axpy(bi, cfg.alpha, vec3::cross(*m, bi));
        let fi = f.map(|f| f.data()[i]);
        *m = corrector(*m, axis, fi, cfg.k, cfg.forcing_mode);
    }
    out
}

fn expect_scheme(cfg: &SchemeConfig, scheme: Scheme) -> Result<()> {
    if cfg.scheme != scheme {
        return Err(Error::InvalidConfig(format!(
            "configured scheme is {}, not {}",
            cfg.scheme, scheme
        )));
    }
    Ok(())
}

/// BDF1 predictor followed by the Crank–Nicolson corrector.
pub fn step_proposed(
    m_n: &VectorField,
    t_n: f64,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<StepOutput> {
    expect_scheme(cfg, Scheme::Proposed)?;
    let f = sample_forcing(m_n, cfg, forcing, t_n);
    let (predicted, report) =
        solvers::bdf1_predictor_solve(m_n, f.as_ref(), cfg.k, cfg.alpha, &cfg.solver)?;
    let b = grid::laplacian_neumann(&predicted);
    Ok(StepOutput {
        field: rotate_all(m_n, &b, f.as_ref(), cfg),
        report: Some(report),
    })
}

/// Explicit Laplacian axis; conditionally stable.
pub fn step_scheme1(
    m_n: &VectorField,
    t_n: f64,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<StepOutput> {
    expect_scheme(cfg, Scheme::Scheme1Explicit)?;
    let f = sample_forcing(m_n, cfg, forcing, t_n);
    let b = grid::laplacian_neumann(m_n);
    Ok(StepOutput {
        field: rotate_all(m_n, &b, f.as_ref(), cfg),
        report: None,
    })
}

/// Axis from the Helmholtz-smoothed field `g = (I - kΔ_h)⁻¹ m_n`.
pub fn step_scheme3(
    m_n: &VectorField,
    t_n: f64,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<StepOutput> {
    expect_scheme(cfg, Scheme::Scheme3SemiImplicit)?;
    let f = sample_forcing(m_n, cfg, forcing, t_n);
    let (g, report) = solvers::helmholtz_solve(m_n, cfg.k, &cfg.solver)?;
    let b = grid::laplacian_neumann(&g);
    Ok(StepOutput {
        field: rotate_all(m_n, &b, f.as_ref(), cfg),
        report: Some(report),
    })
}

/// BDF1 predictor followed by pointwise normalization.
pub fn step_bdf1_projection(
    m_n: &VectorField,
    t_n: f64,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<StepOutput> {
    expect_scheme(cfg, Scheme::Bdf1Projection)?;
    let f = sample_forcing(m_n, cfg, forcing, t_n);
    let (mut predicted, report) =
        solvers::bdf1_predictor_solve(m_n, f.as_ref(), cfg.k, cfg.alpha, &cfg.solver)?;
    for (cell, m) in predicted.data_mut().iter_mut().enumerate() {
        let length = vec3::norm(*m);
        if !(length >= DEGENERATE_LENGTH) {
            return Err(Error::DegenerateProjection { cell, length });
        }
        *m = vec3::scale(1.0 / length, *m);
    }
    Ok(StepOutput {
        field: predicted,
        report: Some(report),
    })
}

/// Advances one step with whichever scheme `cfg` selects.
pub fn step(
    m_n: &VectorField,
    t_n: f64,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<StepOutput> {
    match cfg.scheme {
        Scheme::Proposed => step_proposed(m_n, t_n, cfg, forcing),
        Scheme::Scheme1Explicit => step_scheme1(m_n, t_n, cfg, forcing),
        Scheme::Scheme3SemiImplicit => step_scheme3(m_n, t_n, cfg, forcing),
        Scheme::Bdf1Projection => step_bdf1_projection(m_n, t_n, cfg, forcing),
    }
}

/// Receives every completed step with read-only access to the field.
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, m: &VectorField);
}

impl<F> Observer for F
where
    F: FnMut(usize, f64, &VectorField),
{
    fn observe(&mut self, step: usize, t: f64, m: &VectorField) {
        self(step, t, m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub energy: f64,
    pub max_unit_deviation: f64,
    pub solve: Option<SolveReport>,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    /// Time after each completed step.
    pub times: Vec<f64>,
    /// `(step, field)` pairs, only when snapshots were requested.
    pub snapshots: Vec<(usize, VectorField)>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.times.len()
    }

    /// Running maximum of the unit-length deviation over all steps.
    pub fn max_unit_deviation(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.max_unit_deviation)
            .fold(0.0, f64::max)
    }
}

/// Number of steps and the adjusted step size that lands exactly on `t_end`.
pub fn step_count(t0: f64, t_end: f64, k: f64) -> Result<(usize, f64)> {
    if !(t_end >= t0) {
        return Err(Error::InvalidConfig(format!(
            "final time {t_end} precedes start time {t0}"
        )));
    }
    let span = t_end - t0;
    if span == 0.0 {
        return Ok((0, k));
    }
    let n = ((span / k).round() as usize).max(1);
    Ok((n, span / n as f64))
}

fn check_blowup(m: &VectorField) -> Result<()> {
    for (cell, v) in m.data().iter().enumerate() {
        if v.iter().any(|c| !(c.abs() <= BLOWUP_THRESHOLD)) {
            return Err(Error::Blowup { cell });
        }
    }
    Ok(())
}

/// Integrates from `t0` to `t_end`.
pub fn evolve(
    m0: &VectorField,
    t0: f64,
    t_end: f64,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
    observers: &mut [&mut dyn Observer],
) -> Result<(VectorField, Trajectory)> {
    evolve_recording(m0, t0, t_end, cfg, forcing, observers, None)
}

/// [`evolve`], additionally storing the field every `snapshot_every` steps.
pub fn evolve_recording(
    m0: &VectorField,
    t0: f64,
    t_end: f64,
    cfg: &SchemeConfig,
    forcing: Option<&dyn Forcing>,
    observers: &mut [&mut dyn Observer],
    snapshot_every: Option<usize>,
) -> Result<(VectorField, Trajectory)> {
    cfg.validate()?;
    let (n_steps, k) = step_count(t0, t_end, cfg.k)?;
    let cfg = SchemeConfig { k, ..cfg.clone() };
    let mut traj = Trajectory::default();
    let mut m = m0.clone();
    for n in 0..n_steps {
        let t_n = t0 + n as f64 * k;
        let t_next = if n + 1 == n_steps {
            t_end
        } else {
            t0 + (n + 1) as f64 * k
        };
        let wrap = |source: Error| Error::StepFailed {
            step: n + 1,
            time: t_next,
            source: Box::new(source),
        };
        let out = step(&m, t_n, &cfg, forcing).map_err(wrap)?;
        check_blowup(&out.field).map_err(wrap)?;
        m = out.field;
        traj.times.push(t_next);
        traj.diagnostics.push(StepDiagnostics {
            energy: grid::exchange_energy(&m),
            max_unit_deviation: grid::max_unit_deviation(&m),
            solve: out.report,
        });
        if let Some(every) = snapshot_every {
            if every > 0 && (n + 1) % every == 0 {
                traj.snapshots.push((n + 1, m.clone()));
            }
        }
        for obs in observers.iter_mut() {
            obs.observe(n + 1, t_next, &m);
        }
    }
    Ok((m, traj))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::grid::Grid;
    use crate::manufactured::{initial_profile, InitialProfile};

    const ALL: [Scheme; 4] = [
        Scheme::Proposed,
        Scheme::Scheme1Explicit,
        Scheme::Scheme3SemiImplicit,
        Scheme::Bdf1Projection,
    ];

    fn random_unit_field(grid: Grid, seed: u64) -> VectorField {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        VectorField::from_fn(grid, |_| {
            let v: Vec3 = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            vec3::scale(1.0 / vec3::norm(v), v)
        })
    }

    #[test]
    fn constants_are_fixed_points() {
        for grid in [Grid::new_1d(16).unwrap(), Grid::cube(4).unwrap()] {
            let m = VectorField::constant(grid, [0.0, 0.6, 0.8]);
            for scheme in ALL {
                let cfg = SchemeConfig::new(scheme, 0.1, 1e-2);
                let out = step(&m, 0.0, &cfg, None).unwrap().field;
                let d = grid::norm_linf(&out.sub(&m).unwrap());
                assert!(d < 1e-14, "{scheme}: {d}");
            }
        }
    }

    #[test]
    fn wrong_scheme_is_rejected() {
        let m = VectorField::constant(Grid::new_1d(4).unwrap(), [0.0, 0.0, 1.0]);
        let cfg = SchemeConfig::new(Scheme::Scheme1Explicit, 0.0, 0.1);
        assert!(step_proposed(&m, 0.0, &cfg, None).is_err());
    }

    #[test]
    fn rotation_schemes_preserve_length() {
        let grid = Grid::new_1d(64).unwrap();
        let h2 = grid.h() * grid.h();
        let m0 = random_unit_field(grid, 11);
        for scheme in [
            Scheme::Proposed,
            Scheme::Scheme1Explicit,
            Scheme::Scheme3SemiImplicit,
        ] {
            let cfg = SchemeConfig::new(scheme, 0.05, 0.5 * h2);
            let (_, traj) = evolve(&m0, 0.0, 100.0 * 0.5 * h2, &cfg, None, &mut []).unwrap();
            assert_eq!(traj.steps(), 100);
            assert!(traj.max_unit_deviation() <= 1e-12, "{scheme}");
        }
    }

    #[test]
    fn projection_output_is_unit() {
        let grid = Grid::cube(5).unwrap();
        let m0 = random_unit_field(grid, 12);
        let cfg = SchemeConfig::new(Scheme::Bdf1Projection, 0.1, 1e-3);
        let out = step(&m0, 0.0, &cfg, None).unwrap().field;
        assert!(grid::max_unit_deviation(&out) <= 1e-15);
    }

    #[test]
    fn degenerate_projection_is_reported() {
        let grid = Grid::new_1d(4).unwrap();
        let m0 = VectorField::constant(grid, [0.0, 0.0, 1.0]);
        let cancel = |_x: Vec3, _t: f64| [0.0, 0.0, -1e4];
        let cfg =
            SchemeConfig::new(Scheme::Bdf1Projection, 0.0, 1e-4).with_forcing(ForcingMode::Direct);
        let err = step(&m0, 0.0, &cfg, Some(&cancel)).unwrap_err();
        assert!(matches!(err, Error::DegenerateProjection { .. }), "{err}");
    }

    #[test]
    fn forcing_none_never_calls_source() {
        let grid = Grid::new_1d(8).unwrap();
        let m0 = random_unit_field(grid, 13);
        let boom = |_x: Vec3, _t: f64| -> Vec3 { panic!("forcing evaluated") };
        for scheme in ALL {
            let cfg = SchemeConfig::new(scheme, 0.1, 1e-3);
            step(&m0, 0.0, &cfg, Some(&boom)).unwrap();
        }
    }

    #[test]
    fn zero_span_returns_initial_field() {
        let m0 = random_unit_field(Grid::new_1d(8).unwrap(), 14);
        let cfg = SchemeConfig::new(Scheme::Proposed, 0.1, 1e-3);
        let (m, traj) = evolve(&m0, 0.3, 0.3, &cfg, None, &mut []).unwrap();
        assert_eq!(m, m0);
        assert_eq!(traj.steps(), 0);
        assert!(evolve(&m0, 0.3, 0.2, &cfg, None, &mut []).is_err());
    }

    #[test]
    fn step_count_hits_final_time() {
        let (n, k) = step_count(0.0, 0.1, 0.1 / 57.0).unwrap();
        assert_eq!(n, 57);
        assert!((n as f64 * k - 0.1).abs() < 1e-15);
        assert_eq!(step_count(0.0, 0.1, 0.03).unwrap().0, 3);
    }

    #[test]
    fn observers_see_every_step() {
        let grid = Grid::new_1d(16).unwrap();
        let m0 = initial_profile(InitialProfile::Cosine1d, &grid, 0.3).unwrap();
        let cfg = SchemeConfig::new(Scheme::Proposed, 0.1, 0.01);
        let mut seen = Vec::new();
        let mut obs = |step: usize, t: f64, _m: &VectorField| seen.push((step, t));
        let (_, traj) =
            evolve_recording(&m0, 0.0, 0.1, &cfg, None, &mut [&mut obs], Some(5)).unwrap();
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[9], (10, 0.1));
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.diagnostics.len(), 10);
        assert_eq!(traj.snapshots.len(), 2);
    }

    #[test]
    fn deterministic() {
        let grid = Grid::cube(5).unwrap();
        let m0 = random_unit_field(grid, 15);
        let cfg = SchemeConfig::new(Scheme::Proposed, 0.2, 1e-2);
        let a = evolve(&m0, 0.0, 0.05, &cfg, None, &mut []).unwrap().0;
        let b = evolve(&m0, 0.0, 0.05, &cfg, None, &mut []).unwrap().0;
        assert_eq!(a, b);
    }
}
