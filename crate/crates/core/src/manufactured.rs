//! Closed-form exact solutions, their source terms, and the library of
//! initial magnetization profiles.
//!
//! Both exact solutions have the form `m = (cos φ sin t, sin φ sin t, cos t)`
//! for a spatial phase `φ(x)`, which makes them unit length everywhere:
//!
//! * 1D: `φ = cos(πx)`
//! * 3D: `φ = X·Y·Z` with `X = x²(1-x)²` and likewise for `Y`, `Z`
//!
//! For that family `Δm = ((-cos φ |∇φ|² - sin φ Δφ) sin t,
//! (-sin φ |∇φ|² + cos φ Δφ) sin t, 0)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Dim, Grid, VectorField};
use crate::schemes::Forcing;
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSolution {
    OneD,
    ThreeD,
}

/// `x²(1-x)²` and its first two derivatives.
fn bump(x: f64) -> (f64, f64, f64) {
    let v = x * x * (1.0 - x) * (1.0 - x);
    let d1 = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    let d2 = 2.0 - 12.0 * x + 12.0 * x * x;
    (v, d1, d2)
}

impl ExactSolution {
    pub fn for_dim(dim: Dim) -> Self {
        match dim {
            Dim::One => Self::OneD,
            Dim::Three => Self::ThreeD,
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            Self::OneD => Dim::One,
            Self::ThreeD => Dim::Three,
        }
    }

    /// Phase `φ`, its gradient and its Laplacian.
    fn phase(self, x: Vec3) -> (f64, Vec3, f64) {
        match self {
            Self::OneD => {
                let (s, c) = (PI * x[0]).sin_cos();
                (c, [-PI * s, 0.0, 0.0], -PI * PI * c)
            }
            Self::ThreeD => {
                let (bx, dx, ddx) = bump(x[0]);
                let (by, dy, ddy) = bump(x[1]);
                let (bz, dz, ddz) = bump(x[2]);
                let phi = bx * by * bz;
                let grad = [dx * by * bz, bx * dy * bz, bx * by * dz];
                let lap = ddx * by * bz + bx * ddy * bz + bx * by * ddz;
                (phi, grad, lap)
            }
        }
    }

    pub fn value(self, x: Vec3, t: f64) -> Vec3 {
        let (phi, _, _) = self.phase(x);
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = t.sin_cos();
        [cp * st, sp * st, ct]
    }

    pub fn time_derivative(self, x: Vec3, t: f64) -> Vec3 {
        let (phi, _, _) = self.phase(x);
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = t.sin_cos();
        [cp * ct, sp * ct, -st]
    }

    /// `∂m/∂x_axis`.
    pub fn gradient(self, x: Vec3, t: f64, axis: usize) -> Vec3 {
        let (phi, grad, _) = self.phase(x);
        let (sp, cp) = phi.sin_cos();
        let st = t.sin();
        [-sp * grad[axis] * st, cp * grad[axis] * st, 0.0]
    }

    pub fn laplacian(self, x: Vec3, t: f64) -> Vec3 {
        let (phi, grad, lap) = self.phase(x);
        let (sp, cp) = phi.sin_cos();
        let st = t.sin();
        let g2 = vec3::norm_sq(grad);
        [(-cp * g2 - sp * lap) * st, (-sp * g2 + cp * lap) * st, 0.0]
    }

    /// Source `∂_t m + m × Δm + α m × (m × Δm)` that makes `m` exact.
    pub fn forcing(self, x: Vec3, t: f64, alpha: f64) -> Vec3 {
        let m = self.value(x, t);
        let lap = self.laplacian(x, t);
        let mxl = vec3::cross(m, lap);
        let damp = vec3::cross(m, mxl);
        let dt = self.time_derivative(x, t);
        [
            dt[0] + mxl[0] + alpha * damp[0],
            dt[1] + mxl[1] + alpha * damp[1],
            dt[2] + mxl[2] + alpha * damp[2],
        ]
    }

    pub fn sample(self, grid: &Grid, t: f64) -> Result<VectorField> {
        check_dim(self.dim(), grid)?;
        Ok(VectorField::from_fn(*grid, |x| self.value(x, t)))
    }
}

/// The manufactured source of an [`ExactSolution`] at fixed damping.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedForcing {
    pub solution: ExactSolution,
    pub alpha: f64,
}

impl Forcing for ManufacturedForcing {
    fn eval(&self, x: Vec3, t: f64) -> Vec3 {
        self.solution.forcing(x, t, self.alpha)
    }
}

/// Named initial magnetizations. Every profile is unit length pointwise;
/// `t0` enters as the time argument of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialProfile {
    /// `(cos(cos πx) sin t0, sin(cos πx) sin t0, cos t0)` on a 1D grid.
    Cosine1d,
    /// The same 1D formula sampled on a 3D grid (constant in y and z).
    CosineX3d,
    /// `(cos(XYZ) sin t0, sin(XYZ) sin t0, cos t0)`.
    Xyz3d,
    /// Phase `cos(πx) cos(πy) cos(πz)`.
    CosProduct3d,
    /// `(cos ψ sin θ, sin ψ sin θ, cos θ)`, `ψ = cos(cos(cos πx))`, `θ = πx + t0`.
    Traveling3d,
}

impl InitialProfile {
    pub const ALL: [InitialProfile; 5] = [
        Self::Cosine1d,
        Self::CosineX3d,
        Self::Xyz3d,
        Self::CosProduct3d,
        Self::Traveling3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cosine1d => "cosine1d",
            Self::CosineX3d => "cosine-x3d",
            Self::Xyz3d => "xyz3d",
            Self::CosProduct3d => "cosprod3d",
            Self::Traveling3d => "traveling3d",
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            Self::Cosine1d => Dim::One,
            _ => Dim::Three,
        }
    }

    pub fn value(self, x: Vec3, t0: f64) -> Vec3 {
        let spherical = |phi: f64, theta: f64| {
            let (sp, cp) = phi.sin_cos();
            let (st, ct) = theta.sin_cos();
            [cp * st, sp * st, ct]
        };
        match self {
            Self::Cosine1d | Self::CosineX3d => spherical((PI * x[0]).cos(), t0),
            Self::Xyz3d => ExactSolution::ThreeD.value(x, t0),
            Self::CosProduct3d => spherical(
                (PI * x[0]).cos() * (PI * x[1]).cos() * (PI * x[2]).cos(),
                t0,
            ),
            Self::Traveling3d => spherical((PI * x[0]).cos().cos().cos(), PI * x[0] + t0),
        }
    }
}

impl fmt::Display for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitialProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
                format!(
                    "unknown profile '{s}' (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

fn check_dim(dim: Dim, grid: &Grid) -> Result<()> {
    if grid.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim:?} grid"),
            got: format!("{:?} grid", grid.dim()),
        });
    }
    Ok(())
}

/// Samples a named profile at the cell centers of `grid`.
pub fn initial_profile(id: InitialProfile, grid: &Grid, t0: f64) -> Result<VectorField> {
    check_dim(id.dim(), grid)?;
    Ok(VectorField::from_fn(*grid, |x| id.value(x, t0)))
}
