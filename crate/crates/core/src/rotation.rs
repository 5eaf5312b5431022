//! Crank–Nicolson step for the linear precession `m_t = -m × a` with a
//! frozen axis `a`.
//!
//! The midpoint rule `(m' - m)/dt = -((m' + m)/2) × a` is the Cayley map of
//! the skew matrix `Λ x = x × a`, so it is an exact rotation: `|m'| = |m|`.
//! Every scheme in this crate funnels its corrector through [`cn_solve`].

use crate::vec3::{self, Vec3};

pub type Mat3 = [[f64; 3]; 3];

/// One pointwise rotation problem. `beta` is always `dt / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationInput {
    pub m: Vec3,
    pub a: Vec3,
    pub dt: f64,
}

impl RotationInput {
    pub fn new(m: Vec3, a: Vec3, dt: f64) -> Self {
        debug_assert!(dt > 0.0);
        Self { m, a, dt }
    }

    pub fn beta(&self) -> f64 {
        0.5 * self.dt
    }

    /// Determinant of the midpoint system, `1 + β²|a|² ≥ 1`.
    pub fn determinant(&self) -> f64 {
        let b = self.beta();
        1.0 + b * b * vec3::norm_sq(self.a)
    }

    pub fn solve(&self) -> Vec3 {
        cn_rotate(self.m, self.a, self.dt)
    }
}

/// Solves `y + β (y × a) = r` in closed form.
///
/// Crossing the equation with `a` and dotting it with `a` eliminates `y × a`
/// and `y · a`, leaving `y = (r - β r×a + β² (r·a) a) / S` with
/// `S = 1 + β²|a|²`.
#[inline]
pub fn cn_solve(r: Vec3, a: Vec3, dt: f64) -> Vec3 {
    let beta = 0.5 * dt;
    let s = 1.0 + beta * beta * vec3::norm_sq(a);
    debug_assert!(s >= 1.0);
    let rxa = vec3::cross(r, a);
    let ra = vec3::dot(r, a);
    let inv = 1.0 / s;
    [
        (r[0] - beta * rxa[0] + beta * beta * ra * a[0]) * inv,
        (r[1] - beta * rxa[1] + beta * beta * ra * a[1]) * inv,
        (r[2] - beta * rxa[2] + beta * beta * ra * a[2]) * inv,
    ]
}

/// Midpoint right-hand side `m - β (m × a)`.
#[inline]
pub fn cn_rhs(m: Vec3, a: Vec3, dt: f64) -> Vec3 {
    vec3::axpy(m, -0.5 * dt, vec3::cross(m, a))
}

/// Unique solution of `(m' - m)/dt = -((m' + m)/2) × a`.
///
/// Same map as `cn_solve(cn_rhs(m, a, dt), a, dt)`, written as the increment
/// `m' = m + (2β/S)(β (m×a)×a - m×a)`. Both terms of the increment stay
/// bounded by `|m|` however large `β|a|` is, which keeps the length error at
/// a few ulps.
#[inline]
pub fn cn_rotate(m: Vec3, a: Vec3, dt: f64) -> Vec3 {
    let beta = 0.5 * dt;
    let s = 1.0 + beta * beta * vec3::norm_sq(a);
    let u = vec3::cross(m, a);
    let w = vec3::cross(u, a);
    let c = 2.0 * beta / s;
    [
        m[0] + c * (beta * w[0] - u[0]),
        m[1] + c * (beta * w[1] - u[1]),
        m[2] + c * (beta * w[2] - u[2]),
    ]
}

/// The Cayley matrix `(I + βΛ)⁻¹(I - βΛ)` with `Λ x = x × a`, assembled
/// entrywise: `(I - 2βΛ + β²(2aaᵀ - |a|² I)) / S`.
pub fn cayley_matrix(a: Vec3, dt: f64) -> Mat3 {
    let b = 0.5 * dt;
    let b2 = b * b;
    let a2 = vec3::norm_sq(a);
    let s = 1.0 + b2 * a2;
    // Λ = [[0, a3, -a2], [-a3, 0, a1], [a2, -a1, 0]]
    let lambda = [[0.0, a[2], -a[1]], [-a[2], 0.0, a[0]], [a[1], -a[0], 0.0]];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 - b2 * a2 } else { 0.0 };
            out[i][j] = (id - 2.0 * b * lambda[i][j] + 2.0 * b2 * a[i] * a[j]) / s;
        }
    }
    out
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [vec3::dot(m[0], v), vec3::dot(m[1], v), vec3::dot(m[2], v)]
}
