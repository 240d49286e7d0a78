//! The 1D finite-volume scheme on `(-R, R)` with no-flux boundaries.
//!
//! Cell averages evolve by `d rho / dt + A rho = 0` with `A = A_ad + L D`:
//! `A_ad` differences the upwind advective fluxes, `D` maps cell averages to
//! the discrete Riesz potential and `L` differences its gradient.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::analysis::Monitor;
use crate::error::{Error, Result};
use crate::evolve::{self, RunOutcome, Stepper};
use crate::kernels::{kernel_table_1d, regularize_alpha_1d, KernelTable1D};
use crate::linalg::{matvec, Factorized};
use crate::mesh::{Field1D, Grid1D};

/// Numerical advective flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxOrder {
    /// Donor-cell upwind; the scheme is linear.
    #[default]
    First,
    /// Upwind applied to minmod-limited reconstructions.
    Second,
}

impl TryFrom<u32> for FluxOrder {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        match order {
            1 => Ok(FluxOrder::First),
            2 => Ok(FluxOrder::Second),
            _ => Err(Error::InvalidArgument(format!(
                "flux order must be 1 or 2, got {order}"
            ))),
        }
    }
}

/// Discrete velocity `v_{i+1/2} = -(xi_{i+1} - xi_i) / dx` of the potential
/// `xi = beta |x|^2 / 2`, at the `N - 1` interior faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity1D {
    pub beta: f64,
    /// `faces[i]` sits between cells `i` and `i + 1`.
    pub faces: Vec<f64>,
    /// `xi_i` at cell centres.
    pub potential: Vec<f64>,
}

impl Velocity1D {
    pub fn max_speed(&self) -> f64 {
        self.faces.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn advection_velocities(grid: &Grid1D, beta: f64) -> Result<Velocity1D> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be non-negative, got {beta}")));
    }
    let n = grid.cells();
    let potential = (0..n).map(|i| 0.5 * beta * grid.axis_center(i).powi(2)).collect();
    // The potential difference over dx equals beta times the face position;
    // evaluating it that way keeps exact odd symmetry.
    let faces = (0..n.saturating_sub(1))
        .map(|i| {
            let v = -beta * grid.axis_face(i);
            if v == 0.0 {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(Velocity1D { beta, faces, potential })
}

pub fn upwind_flux(rho_left: f64, rho_right: f64, v: f64) -> f64 {
    rho_left * v.max(0.0) + rho_right * v.min(0.0)
}

pub fn minmod(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Minmod-limited east and west interface values of every cell; the two
/// boundary cells keep a zero slope.
pub fn reconstruct_states(values: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut east = values.to_vec();
    let mut west = values.to_vec();
    for i in 1..n.saturating_sub(1) {
        let back = (values[i] - values[i - 1]) / dx;
        let fwd = (values[i + 1] - values[i]) / dx;
        let centred = (values[i + 1] - values[i - 1]) / (2.0 * dx);
        let half_jump = 0.5 * dx * minmod(back, centred, fwd);
        east[i] = values[i] + half_jump;
        west[i] = values[i] - half_jump;
    }
    (east, west)
}

/// Discrete Neumann Laplacian `L = -(1/dx^2) tridiag(1, -2, 1)` whose first
/// and last rows are `-(1/dx^2) (-1, 1)` and `-(1/dx^2) (1, -1)`.
pub fn neumann_laplacian(n: usize, dx: f64) -> DMatrix<f64> {
    let s = -1.0 / (dx * dx);
    let mut l = DMatrix::zeros(n, n);
    if n == 1 {
        return l;
    }
    for i in 0..n {
        if i > 0 {
            l[(i, i - 1)] = s;
            l[(i, i)] -= s;
        }
        if i + 1 < n {
            l[(i, i + 1)] = s;
            l[(i, i)] -= s;
        }
    }
    l
}

/// Tridiagonal matrix whose action differences the upwind fluxes,
/// `(A_ad rho)_i = (F_{i+1/2} - F_{i-1/2}) / dx` with both end fluxes zero.
pub fn advection_matrix(velocity: &Velocity1D, dx: f64) -> DMatrix<f64> {
    let n = velocity.potential.len();
    let mut a = DMatrix::zeros(n, n);
    for (f, &v) in velocity.faces.iter().enumerate() {
        let (plus, minus) = (v.max(0.0) / dx, v.min(0.0) / dx);
        // F = rho_f v+ + rho_{f+1} v-, leaving cell f and entering cell f+1.
        a[(f, f)] += plus;
        a[(f, f + 1)] += minus;
        a[(f + 1, f)] -= plus;
        a[(f + 1, f + 1)] -= minus;
    }
    a
}

/// Assembled operators for one `(grid, alpha, beta, dt)`.
#[derive(Debug)]
pub struct SchemeMatrices1D {
    pub grid: Grid1D,
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub a_ad: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// Full kernel matrix `D[i][k] = K[|i - k|]`.
    pub d: DMatrix<f64>,
    /// `A_ad + L D`, assembled from the shift-free kernel.
    pub a: DMatrix<f64>,
    /// `L D` alone, used by the IMEX step.
    pub a_dif: DMatrix<f64>,
    stepper: Factorized,
    diffusion_stepper: OnceLock<Result<Factorized>>,
}

pub fn assemble_matrices(
    grid: &Grid1D,
    alpha: f64,
    beta: f64,
    table: &KernelTable1D,
    dt: f64,
) -> Result<SchemeMatrices1D> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let n = grid.cells();
    if table.len() != n {
        return Err(Error::GridMismatch(format!(
            "kernel table of {} entries for {n} cells",
            table.len()
        )));
    }
    if table.alpha() != alpha {
        return Err(Error::InvalidArgument(format!(
            "kernel table built for alpha = {}, scheme asks for {alpha}",
            table.alpha()
        )));
    }
    let dx = grid.spacing();
    let velocity = advection_velocities(grid, beta)?;
    let a_ad = advection_matrix(&velocity, dx);
    let l = neumann_laplacian(n, dx);
    let reduced = table.reduced();
    let d = DMatrix::from_fn(n, n, |i, k| table.value(i.abs_diff(k)));
    let d_reduced = DMatrix::from_fn(n, n, |i, k| reduced[i.abs_diff(k)]);
    let a_dif = &l * &d_reduced;
    let a = &a_ad + &a_dif;
    let stepper = Factorized::new(DMatrix::identity(n, n) + dt * &a)?;
    Ok(SchemeMatrices1D {
        grid: *grid,
        alpha,
        beta,
        dt,
        a_ad,
        l,
        d,
        a,
        a_dif,
        stepper,
        diffusion_stepper: OnceLock::new(),
    })
}

impl SchemeMatrices1D {
    fn diffusion_stepper(&self) -> Result<&Factorized> {
        self.diffusion_stepper
            .get_or_init(|| {
                let n = self.grid.cells();
                Factorized::new(DMatrix::identity(n, n) + self.dt * &self.a_dif)
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

fn check_state(state: &Field1D, matrices: &SchemeMatrices1D) -> Result<()> {
    if state.grid() != &matrices.grid {
        return Err(Error::GridMismatch(format!(
            "state on {:?}, matrices on {:?}",
            state.grid(),
            matrices.grid
        )));
    }
    Ok(())
}

/// `rho_new = (Id + dt A)^{-1} rho_old`.
pub fn implicit_step(state: &Field1D, matrices: &SchemeMatrices1D) -> Result<Field1D> {
    check_state(state, matrices)?;
    let mut values = state.values().to_vec();
    matrices.stepper.solve_in_place(&mut values)?;
    Field1D::new(matrices.grid, values).map_err(|e| Error::SolverFailure(e.to_string()))
}

/// Flux-difference form of the minmod advection, `(F_{i+1/2} - F_{i-1/2}) / dx`.
pub fn minmod_advection(values: &[f64], velocity: &Velocity1D, dx: f64) -> Vec<f64> {
    let n = values.len();
    let (east, west) = reconstruct_states(values, dx);
    let mut out = vec![0.0; n];
    for (f, &v) in velocity.faces.iter().enumerate() {
        let flux = upwind_flux(east[f], west[f + 1], v) / dx;
        out[f] += flux;
        out[f + 1] -= flux;
    }
    out
}

/// Courant number `max |v| dt / dx`.
pub fn cfl_number(velocity: &Velocity1D, dt: f64, dx: f64) -> f64 {
    velocity.max_speed() * dt / dx
}

/// Minmod advection applied explicitly, diffusion implicitly:
/// `(Id + dt L D) rho_new = rho_old - dt adv(rho_old)`.
pub fn imex_minmod_step(
    state: &Field1D,
    matrices: &SchemeMatrices1D,
    velocity: &Velocity1D,
    dt: f64,
) -> Result<Field1D> {
    check_state(state, matrices)?;
    if dt != matrices.dt {
        return Err(Error::InvalidArgument(format!(
            "step dt = {dt} differs from the factorised dt = {}",
            matrices.dt
        )));
    }
    let dx = matrices.grid.spacing();
    let adv = minmod_advection(state.values(), velocity, dx);
    let mut values: Vec<f64> = state.values().iter().zip(&adv).map(|(r, a)| r - dt * a).collect();
    matrices.diffusion_stepper()?.solve_in_place(&mut values)?;
    Field1D::new(matrices.grid, values).map_err(|e| Error::SolverFailure(e.to_string()))
}

/// Explicit Euler update `rho - dt A rho` of the linear scheme.
pub fn explicit_step(state: &Field1D, matrices: &SchemeMatrices1D) -> Result<Field1D> {
    check_state(state, matrices)?;
    let ar = matvec(&matrices.a, state.values());
    let values = state
        .values()
        .iter()
        .zip(&ar)
        .map(|(r, a)| r - matrices.dt * a)
        .collect();
    Field1D::new(matrices.grid, values)
}

/// Parameters of a 1D simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig1D {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub flux_order: FluxOrder,
}

/// A ready-to-step 1D scheme.
#[derive(Debug)]
pub struct Scheme1D {
    pub config: SchemeConfig1D,
    pub velocity: Velocity1D,
    pub matrices: SchemeMatrices1D,
}

impl Scheme1D {
    /// Builds the kernel table and matrices. `alpha = 1` is regularised.
    pub fn new(grid: &Grid1D, config: SchemeConfig1D) -> Result<Self> {
        let alpha = regularize_alpha_1d(config.alpha);
        let table = kernel_table_1d(grid, alpha)?;
        Self::with_table(grid, SchemeConfig1D { alpha, ..config }, &table)
    }

    pub fn with_table(grid: &Grid1D, config: SchemeConfig1D, table: &KernelTable1D) -> Result<Self> {
        let velocity = advection_velocities(grid, config.beta)?;
        let matrices = assemble_matrices(grid, config.alpha, config.beta, table, config.dt)?;
        if config.flux_order == FluxOrder::Second {
            let cfl = cfl_number(&velocity, config.dt, grid.spacing());
            if cfl > 1.0 {
                log::warn!("explicit minmod advection with CFL number {cfl:.3} > 1");
            }
        }
        Ok(Self {
            config,
            velocity,
            matrices,
        })
    }
}

impl Stepper<1> for Scheme1D {
    fn grid(&self) -> &Grid1D {
        &self.matrices.grid
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn step(&self, state: &Field1D) -> Result<Field1D> {
        match self.config.flux_order {
            FluxOrder::First => implicit_step(state, &self.matrices),
            FluxOrder::Second => imex_minmod_step(state, &self.matrices, &self.velocity, self.config.dt),
        }
    }
}

pub fn run(
    state: Field1D,
    config: SchemeConfig1D,
    t_final: f64,
    monitor: &Monitor<1>,
    snapshots: &[f64],
) -> Result<RunOutcome<1>> {
    let scheme = Scheme1D::new(state.grid(), config)?;
    evolve::run(&scheme, state, t_final, monitor, snapshots)
}

pub fn run_to_steady(
    state: Field1D,
    config: SchemeConfig1D,
    tol: f64,
    t_max: f64,
    monitor: &Monitor<1>,
) -> Result<RunOutcome<1>> {
    let scheme = Scheme1D::new(state.grid(), config)?;
    evolve::run_to_steady(&scheme, state, tol, t_max, monitor, &[])
}
