//! Uniform cell-centred grids on `(-R, R)^D` and the cell-average fields
//! that live on them.
//!
//! The flat storage of a `D`-dimensional field is row-major with the
//! x-index running fastest, so cell `(i, j)` of a 2D grid sits at
//! `j * N + i`.

use crate::error::{Error, Result};
use crate::reference;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<const D: usize> {
    half_width: f64,
    cells: usize,
    spacing: f64,
}

pub type Grid1D = Grid<1>;
pub type Grid2D = Grid<2>;

pub fn build_grid_1d(half_width: f64, cells: usize) -> Result<Grid1D> {
    Grid::new(half_width, cells)
}

pub fn build_grid_2d(half_width: f64, cells: usize) -> Result<Grid2D> {
    Grid::new(half_width, cells)
}

impl<const D: usize> Grid<D> {
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if cells == 0 {
            return Err(Error::InvalidArgument("cell count must be at least 1".into()));
        }
        Ok(Self {
            half_width,
            cells,
            spacing: 2.0 * half_width / cells as f64,
        })
    }

    pub const fn dim(&self) -> usize {
        D
    }

    /// Half-width `R` of the domain.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of cells, `N^D`.
    pub fn len(&self) -> usize {
        self.cells.pow(D as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(D as i32)
    }

    /// Centre of cell `i` along one axis.
    ///
    /// Evaluated as `R (2i + 1 - N) / N` so that mirrored cells have centres
    /// that are exact negatives of each other.
    pub fn axis_center(&self, i: usize) -> f64 {
        let n = self.cells as f64;
        self.half_width * (2.0 * i as f64 + 1.0 - n) / n
    }

    /// Position of the face between cells `i` and `i + 1` along one axis.
    pub fn axis_face(&self, i: usize) -> f64 {
        let n = self.cells as f64;
        self.half_width * (2.0 * (i as f64 + 1.0) - n) / n
    }

    pub fn axis_centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.axis_center(i)).collect()
    }

    /// Per-axis indices of a flat cell index.
    pub fn unravel(&self, mut idx: usize) -> [usize; D] {
        let mut out = [0; D];
        for slot in out.iter_mut() {
            *slot = idx % self.cells;
            idx /= self.cells;
        }
        out
    }

    pub fn ravel(&self, index: [usize; D]) -> usize {
        index.iter().rev().fold(0, |acc, &i| acc * self.cells + i)
    }

    pub fn center(&self, idx: usize) -> [f64; D] {
        self.unravel(idx).map(|i| self.axis_center(i))
    }
}

/// How to fill a field with initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    /// Unit-mass constant `(2R)^{-D}`.
    Uniform,
    /// The alpha = 1 heat kernel evaluated at time `t0`.
    HeatKernelAt(f64),
    /// Standard normal density, the alpha = 2 Fokker-Planck equilibrium.
    Gaussian,
}

/// Cell averages of a density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<const D: usize> {
    grid: Grid<D>,
    values: Vec<f64>,
}

pub type Field1D = Field<1>;
pub type Field2D = Field<2>;

impl<const D: usize> Field<D> {
    pub fn new(grid: Grid<D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDatum(format!("non-finite value in cell {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid<D>) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Midpoint-rule cell averages of `profile`.
    pub fn from_fn<F>(grid: Grid<D>, profile: F) -> Result<Self>
    where
        F: Fn([f64; D]) -> f64,
    {
        let values = (0..grid.len()).map(|idx| profile(grid.center(idx))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Total mass `sum(values) * dx^D`, accumulated in index order.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Aggregate onto the grid with half as many cells per axis by averaging
    /// each block of `2^D` children.
    pub fn coarsen(&self) -> Result<Self> {
        let n = self.grid.cells();
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen a grid with an odd cell count {n}"
            )));
        }
        let coarse = Grid::<D>::new(self.grid.half_width(), n / 2)?;
        let weight = 1.0 / (1 << D) as f64;
        let mut values = vec![0.0; coarse.len()];
        for (idx, v) in self.values.iter().enumerate() {
            let parent = coarse.ravel(self.grid.unravel(idx).map(|i| i / 2));
            values[parent] += weight * v;
        }
        Ok(Self { grid: coarse, values })
    }
}

pub fn init_field<const D: usize>(grid: Grid<D>, datum: &Datum) -> Result<Field<D>> {
    match *datum {
        Datum::Uniform => {
            let value = (2.0 * grid.half_width()).powi(D as i32).recip();
            Field::new(grid, vec![value; grid.len()])
        }
        Datum::HeatKernelAt(t0) => {
            if !(t0 > 0.0) {
                return Err(Error::InvalidDatum(format!(
                    "heat kernel needs a positive time, got {t0}"
                )));
            }
            Field::from_fn(grid, |x| {
                reference::heat_kernel_alpha1(D, t0, norm(&x)).unwrap_or(f64::NAN)
            })
        }
        Datum::Gaussian => Field::from_fn(grid, |x| reference::gaussian_steady(D, norm(&x))),
    }
}

pub(crate) fn norm<const D: usize>(x: &[f64; D]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}
