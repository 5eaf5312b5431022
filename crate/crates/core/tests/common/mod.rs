//! Independent reference constructions shared by the integration tests.
#![allow(dead_code)]

use llg_core::grid::{Grid, VectorField};
use llg_core::manufactured::ExactSolution;
use llg_core::solvers::{self, SolverConfig};
use llg_core::vec3::{self, Vec3};
use nalgebra::{DMatrix, DVector, Matrix3};
use rand::rngs::StdRng;
use rand::Rng;

/// Neumann Laplacian as a dense cell-by-cell matrix, built from the stencil
/// definition without touching the library's operator.
pub fn dense_laplacian(g: &Grid) -> DMatrix<f64> {
    let n = g.num_cells();
    let cells = g.cells();
    let spacing = g.spacing();
    let mut l = DMatrix::zeros(n, n);
    for idx in 0..n {
        let c = g.coords(idx);
        for axis in 0..3 {
            let w = 1.0 / (spacing[axis] * spacing[axis]);
            for dir in [-1i64, 1] {
                let j = c[axis] as i64 + dir;
                if j < 0 || j >= cells[axis] as i64 {
                    continue; // mirrored ghost equals the cell itself
                }
                let mut nb = c;
                nb[axis] = j as usize;
                let nb_idx = g.index(nb[0], nb[1], nb[2]);
                l[(idx, nb_idx)] += w;
                l[(idx, idx)] -= w;
            }
        }
    }
    l
}

pub fn skew(m: Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -m[2], m[1], m[2], 0.0, -m[0], -m[1], m[0], 0.0)
}

/// `I + k (m × L· + α m × (m × L·))`, unknowns ordered `3·cell + component`.
pub fn dense_predictor(m: &VectorField, k: f64, alpha: f64) -> DMatrix<f64> {
    let g = m.grid();
    let n = g.num_cells();
    let l = dense_laplacian(g);
    let mut a = DMatrix::identity(3 * n, 3 * n);
    for i in 0..n {
        let s = skew(m.data()[i]);
        let block = s + alpha * s * s;
        for j in 0..n {
            if l[(i, j)] == 0.0 {
                continue;
            }
            for p in 0..3 {
                for q in 0..3 {
                    a[(3 * i + p, 3 * j + q)] += k * l[(i, j)] * block[(p, q)];
                }
            }
        }
    }
    a
}

pub fn flat(v: &VectorField) -> DVector<f64> {
    DVector::from_column_slice(v.as_flat())
}

pub fn random_unit_field(g: Grid, rng: &mut StdRng) -> VectorField {
    VectorField::from_fn(g, |_| loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = vec3::norm(v);
        if n > 0.1 {
            break vec3::scale(1.0 / n, v);
        }
    })
}

pub fn random_field(g: Grid, rng: &mut StdRng) -> VectorField {
    VectorField::from_fn(g, |_| {
        [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]
    })
}

pub fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Solves the predictor system with the library and with a dense LU
/// factorisation. Returns the relative difference and the library
/// solution's relative residual against the dense operator.
pub fn predictor_vs_dense(
    m: &VectorField,
    f: Option<&VectorField>,
    k: f64,
    alpha: f64,
    cfg: &SolverConfig,
) -> (f64, f64) {
    let (x, report) = solvers::bdf1_predictor_solve(m, f, k, alpha, cfg).unwrap();
    assert!(report.converged);
    let a = dense_predictor(m, k, alpha);
    let mut b = flat(m);
    if let Some(f) = f {
        b += k * flat(f);
    }
    let oracle = a.clone().lu().solve(&b).unwrap();
    let got = flat(&x);
    let residual = (&b - &a * &got).norm() / b.norm();
    (rel_diff(&got, &oracle), residual)
}

/// Sixth-order central second difference of `f` along `axis`.
pub fn fd6_second(f: impl Fn(Vec3) -> Vec3, x: Vec3, axis: usize, h: f64) -> Vec3 {
    const W: [(f64, f64); 4] = [
        (0.0, -49.0 / 18.0),
        (1.0, 3.0 / 2.0),
        (2.0, -3.0 / 20.0),
        (3.0, 1.0 / 90.0),
    ];
    let mut out = [0.0; 3];
    for (s, w) in W {
        let shifts: &[f64] = if s == 0.0 { &[0.0] } else { &[s, -s] };
        for &d in shifts {
            let mut p = x;
            p[axis] += d * h;
            out = vec3::axpy(out, w / (h * h), f(p));
        }
    }
    out
}

pub fn fd6_laplacian(sol: ExactSolution, x: Vec3, t: f64, h: f64) -> Vec3 {
    let axes = match sol {
        ExactSolution::OneD => 1,
        ExactSolution::ThreeD => 3,
    };
    (0..axes).fold([0.0; 3], |acc, axis| {
        vec3::add(acc, fd6_second(|p| sol.value(p, t), x, axis, h))
    })
}

pub fn random_point(rng: &mut StdRng, sol: ExactSolution) -> Vec3 {
    match sol {
        ExactSolution::OneD => [rng.gen_range(0.0..1.0), 0.0, 0.0],
        ExactSolution::ThreeD => [
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        ],
    }
}
