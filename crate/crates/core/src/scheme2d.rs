//! The 2D scheme on `(-R, R)^2` by Lie splitting into row and column
//! sub-problems, plus an unsplit small-grid oracle.
//!
//! During an x-sweep each row evolves on its own. The diffusive coupling to
//! the row itself is implicit through `K[|i - k|, 0]`; the contribution of
//! all other rows is evaluated from the state at the start of the sweep and
//! moved to the right-hand side, so one factorisation serves every row.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::analysis::Monitor;
use crate::convolution::FftConvolver;
use crate::error::{Error, Result};
use crate::evolve::{self, RunOutcome, Stepper};
use crate::kernels::{kernel_table_2d, KernelTable2D};
use crate::linalg::{matvec, Factorized};
use crate::mesh::{build_grid_1d, Field2D, Grid2D};
use crate::scheme1d::{advection_matrix, advection_velocities, neumann_laplacian};

/// Largest grid accepted by [`assemble_full_2d`].
pub const FULL_SYSTEM_LIMIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Line operator `Id + dt (A_ad + L D_row)` shared by every line of a sweep.
#[derive(Debug)]
pub struct RowSystem {
    pub axis: Axis,
    pub dt: f64,
    /// `K[|i - k|, 0]`.
    pub d_row: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// `A_ad + L D_row`.
    pub transport: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
    factor: Factorized,
}

pub fn assemble_row_system(
    grid: &Grid2D,
    alpha: f64,
    beta: f64,
    table: &KernelTable2D,
    dt: f64,
    axis: Axis,
) -> Result<RowSystem> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    check_table(grid, alpha, table)?;
    let n = grid.cells();
    // The quadratic potential separates, so the velocity along either axis
    // is the 1D velocity of that coordinate.
    let line = build_grid_1d(grid.half_width(), n)?;
    let velocity = advection_velocities(&line, beta)?;
    let a_ad = advection_matrix(&velocity, grid.spacing());
    let l = neumann_laplacian(n, grid.spacing());
    let kernel = table.line();
    let d_row = DMatrix::from_fn(n, n, |i, k| kernel[i.abs_diff(k)]);
    let transport = a_ad + &l * &d_row;
    let matrix = DMatrix::identity(n, n) + dt * &transport;
    let factor = Factorized::new(matrix.clone())?;
    Ok(RowSystem {
        axis,
        dt,
        d_row,
        l,
        transport,
        matrix,
        factor,
    })
}

fn check_table(grid: &Grid2D, alpha: f64, table: &KernelTable2D) -> Result<()> {
    if table.cells() != grid.cells() {
        return Err(Error::GridMismatch(format!(
            "kernel table for {} cells per axis, grid has {}",
            table.cells(),
            grid.cells()
        )));
    }
    if table.alpha() != alpha {
        return Err(Error::InvalidArgument(format!(
            "kernel table built for alpha = {}, scheme asks for {alpha}",
            table.alpha()
        )));
    }
    Ok(())
}

fn line_indices(n: usize, axis: Axis, line: usize) -> impl Iterator<Item = usize> {
    (0..n).map(move |p| match axis {
        Axis::X => line * n + p,
        Axis::Y => p * n + line,
    })
}

/// Solves every line along `system.axis`, coupling to the other lines
/// through the potential of `state`.
pub fn sweep(state: &Field2D, system: &RowSystem, convolver: &FftConvolver) -> Result<Field2D> {
    let n = state.grid().cells();
    if convolver.cells() != n || system.d_row.nrows() != n {
        return Err(Error::GridMismatch("sweep operators do not match the grid".into()));
    }
    let potential = convolver.potential(state.values());
    let rho = state.values();
    let lines: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|line| {
            let idx: Vec<usize> = line_indices(n, system.axis, line).collect();
            let u: Vec<f64> = idx.iter().map(|&k| rho[k]).collect();
            let own = matvec(&system.d_row, &u);
            let frozen: Vec<f64> = idx.iter().zip(&own).map(|(&k, o)| potential[k] - o).collect();
            let correction = matvec(&system.l, &frozen);
            let mut rhs: Vec<f64> = u.iter().zip(&correction).map(|(u, c)| u - system.dt * c).collect();
            system
                .factor
                .solve_in_place(&mut rhs)
                .map_err(|e| Error::SolverFailure(format!("line {line}: {e}")))?;
            Ok(rhs)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; n * n];
    for (line, values) in lines.iter().enumerate() {
        for (k, v) in line_indices(n, system.axis, line).zip(values) {
            out[k] = *v;
        }
    }
    Field2D::new(*state.grid(), out).map_err(|e| Error::SolverFailure(e.to_string()))
}

/// An x-sweep followed by a y-sweep.
pub fn split_step(
    state: &Field2D,
    x_system: &RowSystem,
    y_system: &RowSystem,
    convolver: &FftConvolver,
) -> Result<Field2D> {
    let half = sweep(state, x_system, convolver)?;
    sweep(&half, y_system, convolver)
}

/// Parameters of a 2D simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig2D {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
}

#[derive(Debug)]
pub struct Scheme2D {
    pub grid: Grid2D,
    pub config: SchemeConfig2D,
    pub x_system: RowSystem,
    pub y_system: RowSystem,
    pub convolver: FftConvolver,
}

impl Scheme2D {
    pub fn new(grid: &Grid2D, config: SchemeConfig2D) -> Result<Self> {
        let table = kernel_table_2d(grid, config.alpha)?;
        Self::with_table(grid, config, &table)
    }

    pub fn with_table(grid: &Grid2D, config: SchemeConfig2D, table: &KernelTable2D) -> Result<Self> {
        let SchemeConfig2D { alpha, beta, dt } = config;
        Ok(Self {
            grid: *grid,
            config,
            x_system: assemble_row_system(grid, alpha, beta, table, dt, Axis::X)?,
            y_system: assemble_row_system(grid, alpha, beta, table, dt, Axis::Y)?,
            convolver: FftConvolver::new(table),
        })
    }
}

impl Stepper<2> for Scheme2D {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn step(&self, state: &Field2D) -> Result<Field2D> {
        split_step(state, &self.x_system, &self.y_system, &self.convolver)
    }
}

/// Dense `N^2 x N^2` operator of the unsplit scheme. Test oracle only.
#[derive(Debug)]
pub struct FullSystem2D {
    pub grid: Grid2D,
    pub dt: f64,
    pub a: DMatrix<f64>,
    factor: Factorized,
}

pub fn assemble_full_2d(grid: &Grid2D, alpha: f64, beta: f64, table: &KernelTable2D, dt: f64) -> Result<FullSystem2D> {
    let n = grid.cells();
    if n > FULL_SYSTEM_LIMIT {
        return Err(Error::SizeGuard {
            cells: n,
            limit: FULL_SYSTEM_LIMIT,
        });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    check_table(grid, alpha, table)?;
    let line = build_grid_1d(grid.half_width(), n)?;
    let a_ad = advection_matrix(&advection_velocities(&line, beta)?, grid.spacing());
    let l = neumann_laplacian(n, grid.spacing());
    let size = n * n;
    let kernel = |p: usize, q: usize| {
        let (i, j) = (p % n, p / n);
        let (k, m) = (q % n, q / n);
        table.value(i.abs_diff(k), j.abs_diff(m))
    };
    let mut a = DMatrix::zeros(size, size);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            // Tridiagonal factors act along one axis at a time.
            for t in i.saturating_sub(1)..(i + 2).min(n) {
                let src = j * n + t;
                a[(row, src)] += a_ad[(i, t)];
                let lx = l[(i, t)];
                for col in 0..size {
                    a[(row, col)] += lx * kernel(src, col);
                }
            }
            for t in j.saturating_sub(1)..(j + 2).min(n) {
                let src = t * n + i;
                a[(row, src)] += a_ad[(j, t)];
                let ly = l[(j, t)];
                for col in 0..size {
                    a[(row, col)] += ly * kernel(src, col);
                }
            }
        }
    }
    let factor = Factorized::new(DMatrix::identity(size, size) + dt * &a)?;
    Ok(FullSystem2D {
        grid: *grid,
        dt,
        a,
        factor,
    })
}

impl FullSystem2D {
    /// Unsplit implicit Euler step `(Id + dt A)^{-1} rho`.
    pub fn implicit_step(&self, state: &Field2D) -> Result<Field2D> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch("state does not match the full system".into()));
        }
        let mut values = state.values().to_vec();
        self.factor.solve_in_place(&mut values)?;
        Field2D::new(self.grid, values)
    }
}

impl Stepper<2> for FullSystem2D {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, state: &Field2D) -> Result<Field2D> {
        self.implicit_step(state)
    }
}

pub fn run_2d(
    state: Field2D,
    config: SchemeConfig2D,
    t_final: f64,
    monitor: &Monitor<2>,
    snapshots: &[f64],
) -> Result<RunOutcome<2>> {
    let scheme = Scheme2D::new(state.grid(), config)?;
    evolve::run(&scheme, state, t_final, monitor, snapshots)
}

pub fn run_to_steady_2d(
    state: Field2D,
    config: SchemeConfig2D,
    tol: f64,
    t_max: f64,
    monitor: &Monitor<2>,
) -> Result<RunOutcome<2>> {
    let scheme = Scheme2D::new(state.grid(), config)?;
    evolve::run_to_steady(&scheme, state, tol, t_max, monitor, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid_2d, init_field, Datum};

    fn setup(n: usize, alpha: f64, beta: f64, dt: f64) -> (Grid2D, KernelTable2D, Scheme2D) {
        let g = build_grid_2d(2.0, n).unwrap();
        let table = kernel_table_2d(&g, alpha).unwrap();
        let scheme = Scheme2D::with_table(&g, SchemeConfig2D { alpha, beta, dt }, &table).unwrap();
        (g, table, scheme)
    }

    #[test]
    fn row_systems_agree_and_conserve() {
        let (_, _, s) = setup(6, 1.0, 1.0, 0.1);
        assert_eq!(s.x_system.matrix, s.y_system.matrix);
        let scale = s.x_system.transport.amax();
        for c in 0..6 {
            assert!(s.x_system.transport.column(c).sum().abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sweep_conserves_mass_and_zero() {
        let (g, _, s) = setup(8, 1.3, 1.0, 0.1);
        let f = init_field(g, &Datum::Gaussian).unwrap();
        let next = s.step(&f).unwrap();
        assert!((next.mass() - f.mass()).abs() <= 1e-10 * f.mass());
        let zero = s.step(&Field2D::zeros(g)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_system_guard_and_columns() {
        let g = build_grid_2d(1.0, 33).unwrap();
        let fake = kernel_table_2d(&build_grid_2d(1.0, 2).unwrap(), 1.0).unwrap();
        assert!(matches!(
            assemble_full_2d(&g, 1.0, 1.0, &fake, 0.1),
            Err(Error::SizeGuard { cells: 33, .. })
        ));
        let g = build_grid_2d(1.0, 4).unwrap();
        let table = kernel_table_2d(&g, 1.0).unwrap();
        let full = assemble_full_2d(&g, 1.0, 1.0, &table, 0.1).unwrap();
        let scale = full.a.amax();
        for c in 0..16 {
            assert!(full.a.column(c).sum().abs() <= 1e-12 * scale);
        }
    }
}
