//! Uniform cell-centered grids on the unit interval or unit cube, vector
//! fields living on them, and the discrete operators shared by every scheme:
//! the Neumann Laplacian, the error norms and the exchange energy.
//!
//! The homogeneous Neumann condition is imposed with mirror ghost cells: the
//! ghost value outside a boundary face equals the adjacent interior value, so
//! the flux through every boundary face is zero.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Three => 3,
        }
    }
}

/// Uniform cell-centered mesh of `(0,1)^dim`.
///
/// Inactive axes of a 1D grid carry a single cell of width one, which keeps
/// cell volumes and strides uniform across dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: Dim,
    cells: [usize; 3],
    spacing: [f64; 3],
}

impl Grid {
    pub fn new_1d(nx: usize) -> Result<Self> {
        Self::build(Dim::One, [nx, 1, 1])
    }

    pub fn new_3d(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Self::build(Dim::Three, [nx, ny, nz])
    }

    /// `n` cells along every axis of a cube.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new_3d(n, n, n)
    }

    fn build(dim: Dim, cells: [usize; 3]) -> Result<Self> {
        for &n in &cells[..dim.as_usize()] {
            if n < 2 {
                return Err(Error::InvalidGrid(format!(
                    "need at least 2 cells per axis, got {n}"
                )));
            }
        }
        let spacing = cells.map(|n| 1.0 / n as f64);
        Ok(Self {
            dim,
            cells,
            spacing,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// Spacing along x; the refinement parameter reported in tables.
    pub fn h(&self) -> f64 {
        self.spacing[0]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Active axes (those that carry a stencil).
    pub fn axes(&self) -> std::ops::Range<usize> {
        0..self.dim.as_usize()
    }

    /// Flat index stride of each axis, x fastest.
    pub fn strides(&self) -> [usize; 3] {
        [1, self.cells[0], self.cells[0] * self.cells[1]]
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.cells[0] * (j + self.cells[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.cells;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Physical position of a cell center. Inactive axes report 0.
    pub fn center(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in self.axes() {
            x[a] = (c[a] as f64 + 0.5) * self.spacing[a];
        }
        x
    }

    /// `(axis, stride, 1/h²)` for every active axis.
    pub(crate) fn neighbour_lists(&self) -> Vec<(usize, usize, f64)> {
        let strides = self.strides();
        self.axes()
            .map(|a| (a, strides[a], 1.0 / (self.spacing[a] * self.spacing[a])))
            .collect()
    }
}

/// One 3-vector per cell, lexicographic order with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    data: Vec<Vec3>,
}

impl VectorField {
    pub fn new(grid: Grid, data: Vec<Vec3>) -> Result<Self> {
        if data.len() != grid.num_cells() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} cells", grid.num_cells()),
                got: format!("{} cells", data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !vec3::is_finite(*v)) {
            return Err(Error::InvalidConfig(format!(
                "non-finite value at cell {i}"
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, [0.0; 3])
    }

    pub fn constant(grid: Grid, value: Vec3) -> Self {
        Self {
            grid,
            data: vec![value; grid.num_cells()],
        }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
        let data = (0..grid.num_cells()).map(|i| f(grid.center(i))).collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Vec3] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Vec3] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Vec3> {
        self.data
    }

    pub fn as_flat(&self) -> &[f64] {
        self.data.as_flattened()
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        self.data.as_flattened_mut()
    }

    pub fn num_cells(&self) -> usize {
        self.data.len()
    }

    /// Pointwise difference `self - other`.
    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.check_same_grid(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| vec3::sub(*a, *b))
            .collect();
        Ok(VectorField {
            grid: self.grid,
            data,
        })
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            data: self.data.iter().map(|v| vec3::scale(s, *v)).collect(),
        }
    }

    pub(crate) fn check_same_grid(&self, other: &VectorField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.grid.cells),
                got: format!("{:?}", other.grid.cells),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| vec3::is_finite(*v))
    }

    /// Writes the field as CSV: `x[,y,z],m1,m2,m3`, one row per cell.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match self.grid.dim {
            Dim::One => writeln!(w, "x,m1,m2,m3")?,
            Dim::Three => writeln!(w, "x,y,z,m1,m2,m3")?,
        }
        for (i, m) in self.data.iter().enumerate() {
            let x = self.grid.center(i);
            for a in self.grid.axes() {
                write!(w, "{},", fmt_f64(x[a]))?;
            }
            writeln!(w, "{},{},{}", fmt_f64(m[0]), fmt_f64(m[1]), fmt_f64(m[2]))?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io_err)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Second-order Neumann Laplacian, componentwise.
pub fn laplacian_neumann(f: &VectorField) -> VectorField {
    let mut out = VectorField::zeros(f.grid);
    laplacian_into(f.as_flat(), &f.grid, out.as_flat_mut());
    out
}

/// Flat-slice form of [`laplacian_neumann`], used inside the Krylov loops.
pub(crate) fn laplacian_into(f: &[f64], grid: &Grid, out: &mut [f64]) {
    let cells = grid.cells();
    let stencil = grid.neighbour_lists();
    let n = grid.num_cells();
    debug_assert_eq!(f.len(), 3 * n);
    debug_assert_eq!(out.len(), 3 * n);
    for idx in 0..n {
        let c = grid.coords(idx);
        let mut acc = [0.0; 3];
        for &(axis, stride, inv_h2) in &stencil {
            if c[axis] > 0 {
                let nb = idx - stride;
                for q in 0..3 {
                    acc[q] += (f[3 * nb + q] - f[3 * idx + q]) * inv_h2;
                }
            }
            if c[axis] + 1 < cells[axis] {
                let nb = idx + stride;
                for q in 0..3 {
                    acc[q] += (f[3 * nb + q] - f[3 * idx + q]) * inv_h2;
                }
            }
        }
        out[3 * idx..3 * idx + 3].copy_from_slice(&acc);
    }
}

/// Max over cells of the Euclidean length of each 3-vector.
pub fn norm_linf(e: &VectorField) -> f64 {
    e.data.iter().map(|v| vec3::norm(*v)).fold(0.0, f64::max)
}

/// Mesh-weighted discrete L2 norm.
pub fn norm_l2(e: &VectorField) -> f64 {
    let sum: f64 = e.data.iter().map(|v| vec3::norm_sq(*v)).sum();
    (e.grid.cell_volume() * sum).sqrt()
}

/// Discrete H1 norm: L2 part plus the forward-difference gradient part.
pub fn norm_h1(e: &VectorField) -> f64 {
    let l2 = norm_l2(e);
    (l2 * l2 + gradient_sq(e)).sqrt()
}

/// Discrete `∫|∇m|²` over the domain.
pub fn exchange_energy(m: &VectorField) -> f64 {
    gradient_sq(m)
}

fn gradient_sq(f: &VectorField) -> f64 {
    let grid = &f.grid;
    let cells = grid.cells();
    let vol = grid.cell_volume();
    let mut total = 0.0;
    for (axis, stride, inv_h2) in grid.neighbour_lists() {
        let mut sum = 0.0;
        for idx in 0..grid.num_cells() {
            if grid.coords(idx)[axis] + 1 < cells[axis] {
                sum += vec3::norm_sq(vec3::sub(f.data[idx + stride], f.data[idx]));
            }
        }
        total += sum * inv_h2 * vol;
    }
    total
}

/// Max over cells of `| |m_i| - 1 |`.
pub fn max_unit_deviation(m: &VectorField) -> f64 {
    m.data
        .iter()
        .map(|v| (vec3::norm(*v) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Mesh-weighted inner product `<u, v>`.
pub fn inner(u: &VectorField, v: &VectorField) -> f64 {
    let s: f64 = u
        .data
        .iter()
        .zip(&v.data)
        .map(|(a, b)| vec3::dot(*a, *b))
        .sum();
    s * u.grid.cell_volume()
}
