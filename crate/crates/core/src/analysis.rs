//! Error norms, order-of-accuracy and decay-rate fits, relative entropies,
//! tail exponents and Riesz-potential flatness.

use crate::error::{Error, Result};
use crate::kernels::{KernelTable1D, KernelTable2D};
use crate::mesh::{norm, Field, Grid};

/// What a field is compared against.
pub enum Reference<'a, const D: usize> {
    Field(&'a Field<D>),
    Function(&'a dyn Fn([f64; D]) -> f64),
}

impl<const D: usize> Reference<'_, D> {
    fn sample(&self, grid: &Grid<D>) -> Result<Vec<f64>> {
        match self {
            Reference::Field(f) => {
                if f.grid() != grid {
                    return Err(Error::GridMismatch(format!(
                        "reference on {:?}, field on {:?}",
                        f.grid(),
                        grid
                    )));
                }
                Ok(f.values().to_vec())
            }
            Reference::Function(g) => Ok((0..grid.len()).map(|i| g(grid.center(i))).collect()),
        }
    }
}

/// Axis-aligned box `[lo, hi]` applied to every coordinate of a cell centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubBox {
    pub lo: f64,
    pub hi: f64,
}

impl SubBox {
    pub fn centered(half: f64) -> Self {
        Self { lo: -half, hi: half }
    }

    fn contains<const D: usize>(&self, x: &[f64; D]) -> bool {
        x.iter().all(|&c| self.lo <= c && c <= self.hi)
    }
}

/// `(sum |rho - ref|^p dx^D)^{1/p}` over the cells whose centres lie in `window`.
pub fn lp_distance<const D: usize>(
    field: &Field<D>,
    reference: &Reference<'_, D>,
    p: f64,
    window: Option<SubBox>,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    let grid = field.grid();
    let target = reference.sample(grid)?;
    let mut acc = 0.0;
    for (idx, (&u, &v)) in field.values().iter().zip(&target).enumerate() {
        if window.is_some_and(|w| !w.contains(&grid.center(idx))) {
            continue;
        }
        let d = (u - v).abs();
        acc += if p == 1.0 { d } else { d.powf(p) };
    }
    acc *= grid.cell_volume();
    Ok(if p == 1.0 { acc } else { acc.powf(1.0 / p) })
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs at least two points, got {}",
            xs.len().min(ys.len())
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFit {
    /// Least-squares slope of `log(error)` against `log(spacing)`.
    pub slope: f64,
    /// Observed order between consecutive meshes.
    pub pair_orders: Vec<f64>,
}

/// Observed order of accuracy. A zero error yields an infinite order.
pub fn convergence_order(errors: &[f64], spacings: &[f64]) -> Result<ConvergenceFit> {
    if errors.len() != spacings.len() {
        return Err(Error::InvalidArgument("errors and spacings differ in length".into()));
    }
    if errors.len() < 2 {
        return Err(Error::InsufficientData("convergence order needs two meshes".into()));
    }
    if errors.iter().chain(spacings).any(|&v| !(v >= 0.0)) || spacings.contains(&0.0) {
        return Err(Error::InvalidArgument(
            "errors and spacings must be non-negative".into(),
        ));
    }
    let pair_orders = errors
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(e, h)| {
            if e[1] == 0.0 {
                f64::INFINITY
            } else {
                (e[0] / e[1]).ln() / (h[0] / h[1]).ln()
            }
        })
        .collect();
    if errors.contains(&0.0) {
        return Ok(ConvergenceFit {
            slope: f64::INFINITY,
            pair_orders,
        });
    }
    let lx: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly)?;
    Ok(ConvergenceFit { slope, pair_orders })
}

/// Convex entropy generator `Phi` with `Phi(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entropy {
    /// `(x - 1)^2`
    Quadratic,
    /// `x (ln x - 1) + 1`
    Boltzmann,
}

impl Entropy {
    pub fn phi(self, x: f64) -> f64 {
        match self {
            Entropy::Quadratic => (x - 1.0) * (x - 1.0),
            Entropy::Boltzmann => {
                if x == 0.0 {
                    1.0
                } else {
                    x * (x.ln() - 1.0) + 1.0
                }
            }
        }
    }
}

/// `sum Phi(rho / rho_inf) rho_inf dx^D`.
pub fn relative_entropy<const D: usize>(field: &Field<D>, steady: &Reference<'_, D>, phi: Entropy) -> Result<f64> {
    let grid = field.grid();
    let target = steady.sample(grid)?;
    let mut acc = 0.0;
    for (idx, (&rho, &inf)) in field.values().iter().zip(&target).enumerate() {
        if !(inf > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "steady state must be positive, cell {idx} has {inf}"
            )));
        }
        if rho < 0.0 {
            return Err(Error::InvalidState(format!("negative density {rho} in cell {idx}")));
        }
        acc += phi.phi(rho / inf) * inf;
    }
    Ok(acc * grid.cell_volume())
}

/// Slope of `ln(value)` against time over `t0 <= t <= t1`.
pub fn decay_rate_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("non-positive value {v} at t = {t}")));
        }
        xs.push(t);
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] holds {} samples",
            window.0,
            window.1,
            xs.len()
        )));
    }
    Ok(linear_fit(&xs, &ys)?.0)
}

/// Power-law exponent of the density over radii in `[r0, r1]`.
///
/// In 1D every cell in the window is used; in 2D cells are binned by radius
/// into shells one cell wide and the shell means are fitted.
pub fn tail_exponent_fit<const D: usize>(field: &Field<D>, window: (f64, f64)) -> Result<f64> {
    let grid = field.grid();
    let (r0, r1) = window;
    if !(0.0 < r0 && r0 < r1) {
        return Err(Error::InvalidArgument(format!("bad radius window [{r0}, {r1}]")));
    }
    if D > 1 && r1 > grid.half_width() {
        return Err(Error::InvalidArgument(format!(
            "window edge {r1} leaves the inscribed disc of radius {}",
            grid.half_width()
        )));
    }
    let width = grid.spacing();
    let bins = ((r1 - r0) / width).ceil() as usize;
    let mut sum_r = vec![0.0; bins.max(1)];
    let mut sum_rho = vec![0.0; bins.max(1)];
    let mut count = vec![0usize; bins.max(1)];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, &rho) in field.values().iter().enumerate() {
        let r = norm(&grid.center(idx));
        if r < r0 || r > r1 {
            continue;
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "non-positive density {rho} at radius {r}"
            )));
        }
        if D == 1 {
            xs.push(r.ln());
            ys.push(rho.ln());
        } else {
            let b = (((r - r0) / width) as usize).min(bins.max(1) - 1);
            sum_r[b] += r;
            sum_rho[b] += rho;
            count[b] += 1;
        }
    }
    if D > 1 {
        for b in 0..count.len() {
            if count[b] > 0 {
                let n = count[b] as f64;
                xs.push((sum_r[b] / n).ln());
                ys.push((sum_rho[b] / n).ln());
            }
        }
    }
    Ok(linear_fit(&xs, &ys)?.0)
}

/// Kernel tables that can evaluate the discrete Riesz potential of a field.
pub trait RieszPotential<const D: usize> {
    fn riesz_potential(&self, field: &Field<D>) -> Result<Vec<f64>>;
}

impl RieszPotential<1> for KernelTable1D {
    fn riesz_potential(&self, field: &Field<1>) -> Result<Vec<f64>> {
        if self.len() != field.grid().cells() {
            return Err(Error::GridMismatch("kernel table size differs from grid".into()));
        }
        Ok(self.potential(field.values()))
    }
}

impl RieszPotential<2> for KernelTable2D {
    fn riesz_potential(&self, field: &Field<2>) -> Result<Vec<f64>> {
        if self.cells() != field.grid().cells() {
            return Err(Error::GridMismatch("kernel table size differs from grid".into()));
        }
        Ok(self.potential(field.values()))
    }
}

/// Fraction of the domain treated as interior by [`riesz_flatness`].
pub const FLATNESS_INTERIOR: f64 = 0.8;

/// `(max - min) / mean` of the discrete Riesz potential over interior cells.
pub fn riesz_flatness<const D: usize, T: RieszPotential<D>>(field: &Field<D>, table: &T) -> Result<f64> {
    let potential = table.riesz_potential(field)?;
    let grid = field.grid();
    let window = SubBox::centered(FLATNESS_INTERIOR * grid.half_width());
    let interior: Vec<f64> = potential
        .iter()
        .enumerate()
        .filter(|(idx, _)| window.contains(&grid.center(*idx)))
        .map(|(_, &v)| v)
        .collect();
    if interior.is_empty() {
        return Err(Error::Degenerate("no interior cells".into()));
    }
    let mean = interior.iter().sum::<f64>() / interior.len() as f64;
    if mean == 0.0 {
        return Err(Error::Degenerate("potential has zero mean".into()));
    }
    let (lo, hi) = interior
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok((hi - lo) / mean.abs())
}

/// One sample of a time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub ent_quad: f64,
    pub ent_boltz: f64,
    pub residual: f64,
}

/// Time series of run diagnostics. Quantities without a reference are NaN.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub rows: Vec<DiagnosticRow>,
}

impl Diagnostics {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, pick: impl Fn(&DiagnosticRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(pick).collect()
    }

    /// Largest relative deviation of the mass from its first sample.
    pub fn mass_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        self.rows
            .iter()
            .map(|r| (r.mass - first.mass).abs() / first.mass.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// What to measure along a run.
#[derive(Debug, Clone, Default)]
pub struct Monitor<const D: usize> {
    /// Target of the L1 and L2 columns.
    pub reference: Option<Field<D>>,
    /// Equilibrium for the entropy columns; must be positive.
    pub steady: Option<Field<D>>,
    /// Record every `stride` steps (0 or 1 records every step).
    pub stride: usize,
}

impl<const D: usize> Monitor<D> {
    pub fn row(&self, t: f64, field: &Field<D>, residual: f64) -> Result<DiagnosticRow> {
        let (l1, l2) = match &self.reference {
            Some(r) => (
                lp_distance(field, &Reference::Field(r), 1.0, None)?,
                lp_distance(field, &Reference::Field(r), 2.0, None)?,
            ),
            None => (f64::NAN, f64::NAN),
        };
        let (ent_quad, ent_boltz) = match &self.steady {
            Some(s) => {
                let clipped = clip_negative(field);
                (
                    relative_entropy(&clipped, &Reference::Field(s), Entropy::Quadratic)?,
                    relative_entropy(&clipped, &Reference::Field(s), Entropy::Boltzmann)?,
                )
            }
            None => (f64::NAN, f64::NAN),
        };
        Ok(DiagnosticRow {
            t,
            mass: field.mass(),
            l1,
            l2,
            ent_quad,
            ent_boltz,
            residual,
        })
    }
}

/// Round-off sized negative values are zeroed before entropies are taken.
fn clip_negative<const D: usize>(field: &Field<D>) -> Field<D> {
    let mut out = field.clone();
    for v in out.values_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_table_1d, kernel_table_2d};
    use crate::mesh::{build_grid_1d, build_grid_2d, init_field, Datum};
    use crate::reference::{gaussian_steady, lfp_steady_1d, tail_law};
    use approx::assert_relative_eq;

    #[test]
    fn distance_basics() {
        let g = build_grid_1d(1.0, 10).unwrap();
        let one = Field::from_fn(g, |_| 1.0).unwrap();
        let zero = Field::zeros(g);
        assert_eq!(lp_distance(&one, &Reference::Field(&one), 1.0, None).unwrap(), 0.0);
        assert_relative_eq!(
            lp_distance(&one, &Reference::Field(&zero), 1.0, None).unwrap(),
            2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            lp_distance(&one, &Reference::Function(&|_| 0.0), 2.0, None).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            lp_distance(&one, &Reference::Field(&zero), 1.0, Some(SubBox::centered(0.4))).unwrap(),
            0.8,
            max_relative = 1e-14
        );
        let other = Field::zeros(build_grid_1d(1.0, 5).unwrap());
        assert!(matches!(
            lp_distance(&one, &Reference::Field(&other), 1.0, None),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn convergence_orders() {
        let fit = convergence_order(&[0.1, 0.05, 0.025], &[1.0, 0.5, 0.25]).unwrap();
        assert_relative_eq!(fit.slope, 1.0, max_relative = 1e-12);
        let fit = convergence_order(&[0.1, 0.025], &[0.2, 0.1]).unwrap();
        assert_relative_eq!(fit.pair_orders[0], 2.0, max_relative = 1e-12);
        assert!(matches!(
            convergence_order(&[0.1], &[1.0]),
            Err(Error::InsufficientData(_))
        ));
        let fit = convergence_order(&[0.1, 0.0], &[1.0, 0.5]).unwrap();
        assert!(fit.slope.is_infinite() && fit.pair_orders[0].is_infinite());
        assert!(convergence_order(&[0.1, -0.1], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn entropies_vanish_at_equilibrium() {
        let g = build_grid_1d(10.0, 200).unwrap();
        let steady = Field::from_fn(g, |x| lfp_steady_1d(x[0])).unwrap();
        for phi in [Entropy::Quadratic, Entropy::Boltzmann] {
            assert_eq!(relative_entropy(&steady, &Reference::Field(&steady), phi).unwrap(), 0.0);
        }
        let uniform = init_field(g, &Datum::Uniform).unwrap();
        let mut bad = uniform.clone();
        bad.values_mut()[3] = -1.0;
        assert!(matches!(
            relative_entropy(&bad, &Reference::Field(&steady), Entropy::Quadratic),
            Err(Error::InvalidState(_))
        ));
        let zero = Field::zeros(g);
        assert!(relative_entropy(&uniform, &Reference::Field(&zero), Entropy::Quadratic).is_err());
        // Zero density contributes Phi(0) = 1 per unit of steady mass.
        let e = relative_entropy(&zero, &Reference::Field(&steady), Entropy::Boltzmann).unwrap();
        assert_relative_eq!(e, steady.mass(), max_relative = 1e-14);
    }

    #[test]
    fn decay_fits() {
        let t: Vec<f64> = (0..60).map(|k| 0.1 * k as f64).collect();
        let one: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let two: Vec<f64> = t.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let flat = vec![0.5; t.len()];
        assert_relative_eq!(
            decay_rate_fit(&t, &one, (1.0, 5.0)).unwrap(),
            -1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            decay_rate_fit(&t, &two, (0.0, 6.0)).unwrap(),
            -2.0,
            max_relative = 1e-12
        );
        assert!(decay_rate_fit(&t, &flat, (1.0, 5.0)).unwrap().abs() < 1e-14);
        assert!(decay_rate_fit(&t, &one, (10.0, 20.0)).is_err());
    }

    #[test]
    fn tail_fits() {
        let g = build_grid_1d(25.0, 500).unwrap();
        let law = Field::from_fn(g, |x| tail_law(1.0, 1, x[0])).unwrap();
        assert_relative_eq!(
            tail_exponent_fit(&law, (5.0, 20.0)).unwrap(),
            -2.0,
            max_relative = 1e-10
        );
        let g = build_grid_1d(50.0, 1000).unwrap();
        let cauchy = Field::from_fn(g, |x| lfp_steady_1d(x[0])).unwrap();
        assert!((tail_exponent_fit(&cauchy, (10.0, 40.0)).unwrap() + 2.0).abs() < 0.05);
        let gauss = Field::from_fn(g, |x| gaussian_steady(1, x[0])).unwrap();
        assert!(tail_exponent_fit(&gauss, (5.0, 8.0)).unwrap() < -10.0);
        let g2 = build_grid_2d(20.0, 200).unwrap();
        let law2 = Field::from_fn(g2, |x| tail_law(0.5, 2, norm(&x))).unwrap();
        assert!((tail_exponent_fit(&law2, (4.0, 16.0)).unwrap() + 2.5).abs() < 0.02);
        let zero = Field::zeros(g);
        assert!(tail_exponent_fit(&zero, (5.0, 8.0)).is_err());
    }

    #[test]
    fn flatness_of_point_mass_is_large() {
        let g = build_grid_1d(5.0, 51).unwrap();
        let table = kernel_table_1d(&g, 1.5).unwrap();
        let mut point = Field::zeros(g);
        point.values_mut()[25] = 1.0;
        let potential = table.riesz_potential(&point).unwrap();
        assert!(potential.iter().all(|&v| v > 0.0));
        assert!(riesz_flatness(&point, &table).unwrap() > 0.5);

        let g2 = build_grid_2d(2.0, 5).unwrap();
        let t2 = kernel_table_2d(&g2, 1.0).unwrap();
        let mut p2 = Field::zeros(g2);
        p2.values_mut()[12] = 1.0;
        assert!(riesz_flatness(&p2, &t2).unwrap() > 0.5);
        assert!(matches!(
            riesz_flatness(&Field::zeros(g2), &t2),
            Err(Error::Degenerate(_))
        ));
    }
}
