//! Riesz-kernel cell integrals and their offset-indexed tables.
//!
//! The diffusive flux of the scheme is the discrete gradient of the Riesz
//! potential `C(d, alpha - 2) * int rho(y) |x - y|^{2 - alpha - d} dy`. On a
//! uniform grid the integral of the kernel over cell `k` seen from the centre
//! of cell `i` depends only on the offset `|i - k|`, so a table of `N`
//! (1D) or `N x N` (2D) entries describes the whole dense operator.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Grid1D, Grid2D};
use crate::quadrature::{adaptive_gauss, GaussLegendre};

/// Shift applied to alpha = 1 in one dimension, where the Riesz constant has a pole.
pub const ALPHA_ONE_EPSILON: f64 = 1e-11;

/// Default relative accuracy of 2D cell integrals.
pub const CELL_TOLERANCE_2D: f64 = 1e-10;

/// Bumped whenever the 2D quadrature changes, invalidating cached tables.
pub const QUADRATURE_VERSION: u32 = 1;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(pi x)` with argument reduction, exact zero at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    let r = if r > 0.5 {
        1.0 - r
    } else if r < -0.5 {
        -1.0 - r
    } else {
        r
    };
    (PI * r).sin()
}

/// The Gamma function (Lanczos, g = 7, with reflection below 1/2).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        let s = sin_pi(x);
        let g = gamma_fn(1.0 - x)?;
        return Ok(PI / (s * g));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // Split the power to keep t^(z + 1/2) finite for large arguments.
    let half = t.powf(0.5 * (z + 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-t).exp()) * acc)
}

/// `C(d, g) = 2^g Gamma((d + g) / 2) / (pi^{d/2} |Gamma(-g / 2)|)`.
pub fn riesz_constant(dim: usize, exponent: f64) -> Result<f64> {
    let undefined = || Error::ConstantUndefined { dim, exponent };
    let num = gamma_fn(0.5 * (dim as f64 + exponent)).map_err(|_| undefined())?;
    let den = gamma_fn(-0.5 * exponent).map_err(|_| undefined())?;
    let c = exponent.exp2() * num / (PI.powf(0.5 * dim as f64) * den.abs());
    if c.is_finite() && c > 0.0 {
        Ok(c)
    } else {
        Err(undefined())
    }
}

fn check_alpha_1d(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "1D kernel needs alpha in (1, 2), got {alpha}"
        )))
    }
}

fn check_alpha_2d(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "2D kernel needs alpha in (0, 2), got {alpha}"
        )))
    }
}

/// Maps the requested 1D order onto the scheme's range: exactly 1 becomes
/// `1 + ALPHA_ONE_EPSILON`.
pub fn regularize_alpha_1d(alpha: f64) -> f64 {
    if alpha == 1.0 {
        1.0 + ALPHA_ONE_EPSILON
    } else {
        alpha
    }
}

/// Odd antiderivative of `|u|^{1 - alpha}`: `sign(u) |u|^p / p` with `p = 2 - alpha`.
fn power_antiderivative(u: f64, p: f64) -> f64 {
    u.signum() * u.abs().powf(p) / p
}

/// Antiderivative with its linear part `u / p` removed:
/// `u (|u|^{p - 1} - 1) / p`. Evaluated through `expm1` so that it stays
/// accurate when `p` is close to 1.
fn reduced_antiderivative(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * ((p - 1.0) * u.abs().ln()).exp_m1() / p
    }
}

/// `C(1, alpha - 2) * int_a^b |x - y|^{1 - alpha} dy`, exact.
///
/// The antiderivative is odd and continuous through the singularity, so the
/// three cases `x <= a`, `x >= b` and `a < x < b` all reduce to the
/// difference of its values at the shifted endpoints.
pub fn cell_kernel_1d(alpha: f64, x: f64, a: f64, b: f64) -> Result<f64> {
    check_alpha_1d(alpha)?;
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty cell [{a}, {b}]")));
    }
    let c = riesz_constant(1, alpha - 2.0)?;
    let p = 2.0 - alpha;
    Ok(c * (power_antiderivative(b - x, p) - power_antiderivative(a - x, p)))
}

/// 1D kernel table `K[m] = shift + reduced[m]`.
///
/// `shift = C dx / (2 - alpha)` is common to every entry and is annihilated
/// by the discrete Laplacian, so the scheme assembles from `reduced` alone.
/// Near alpha = 1 the shift grows like `1 / (pi * eps)` while `reduced`
/// stays of order one.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable1D {
    alpha: f64,
    spacing: f64,
    shift: f64,
    reduced: Vec<f64>,
}

pub fn kernel_table_1d(grid: &Grid1D, alpha: f64) -> Result<KernelTable1D> {
    check_alpha_1d(alpha)?;
    let c = riesz_constant(1, alpha - 2.0)?;
    let p = 2.0 - alpha;
    let h = grid.spacing();
    let reduced = (0..grid.cells())
        .into_par_iter()
        .map(|m| {
            let a = (m as f64 - 0.5) * h;
            let b = (m as f64 + 0.5) * h;
            c * (reduced_antiderivative(b, p) - reduced_antiderivative(a, p))
        })
        .collect();
    Ok(KernelTable1D {
        alpha,
        spacing: h,
        shift: c * h / p,
        reduced,
    })
}

impl KernelTable1D {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.reduced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reduced.is_empty()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn reduced(&self) -> &[f64] {
        &self.reduced
    }

    /// Full kernel entry `I_k(x_i)` for `|i - k| = m`.
    pub fn value(&self, offset: usize) -> f64 {
        self.shift + self.reduced[offset]
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.value(m)).collect()
    }

    /// Dense symmetric Toeplitz matrix `D[i][k] = K[|i - k|]`, row-major.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                d[i * n + k] = self.value(i.abs_diff(k));
            }
        }
        d
    }

    /// Discrete Riesz potential `I(x_i) = sum_k rho_k K[|i - k|]`.
    pub fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(rho.len(), n, "field does not match kernel table");
        (0..n)
            .map(|i| (0..n).map(|k| rho[k] * self.value(i.abs_diff(k))).sum())
            .collect()
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn square(cx: f64, cy: f64, half: f64) -> Self {
        Self::new(cx - half, cx + half, cy - half, cy + half)
    }

    fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn contains_origin(&self) -> bool {
        self.x0 <= 0.0 && 0.0 <= self.x1 && self.y0 <= 0.0 && 0.0 <= self.y1
    }

    fn quadrants(&self) -> [Rect; 4] {
        let (cx, cy) = self.center();
        [
            Rect::new(self.x0, cx, self.y0, cy),
            Rect::new(cx, self.x1, self.y0, cy),
            Rect::new(self.x0, cx, cy, self.y1),
            Rect::new(cx, self.x1, cy, self.y1),
        ]
    }
}

struct Quadrature2D {
    alpha: f64,
    tol: f64,
    low: GaussLegendre,
    high: GaussLegendre,
}

const MAX_DEPTH_2D: u32 = 40;

impl Quadrature2D {
    fn new(alpha: f64, tol: f64) -> Self {
        Self {
            alpha,
            tol,
            low: GaussLegendre::new(8),
            high: GaussLegendre::new(12),
        }
    }

    fn tensor(&self, rule: &GaussLegendre, r: &Rect) -> f64 {
        let half_alpha = -0.5 * self.alpha;
        let mut sum = 0.0;
        for (y, wy) in rule.mapped(r.y0, r.y1) {
            let mut row = 0.0;
            for (x, wx) in rule.mapped(r.x0, r.x1) {
                row += wx * (x * x + y * y).powf(half_alpha);
            }
            sum += wy * row;
        }
        sum
    }

    /// `int_0^X int_0^Y |z|^{-alpha}`, via polar coordinates about the corner.
    /// The radial integral is exact, leaving two smooth angular integrals.
    fn corner(&self, x: f64, y: f64) -> Result<f64> {
        if x <= 0.0 || y <= 0.0 {
            return Ok(0.0);
        }
        let s = 2.0 - self.alpha;
        let sec_pow = |theta: f64| theta.cos().powf(-s);
        let phi_x = y.atan2(x);
        let phi_y = x.atan2(y);
        let ax = adaptive_gauss(&sec_pow, 0.0, phi_x, 0.1 * self.tol, 30);
        let ay = adaptive_gauss(&sec_pow, 0.0, phi_y, 0.1 * self.tol, 30);
        let value = (x.powf(s) * ax.value + y.powf(s) * ay.value) / s;
        let error = (x.powf(s) * ax.error + y.powf(s) * ay.error) / s;
        if error > self.tol * value {
            return Err(Error::QuadratureFailure {
                requested: self.tol,
                achieved: error / value,
            });
        }
        Ok(value)
    }

    fn singular(&self, r: &Rect) -> Result<f64> {
        Ok(self.corner(r.x1, r.y1)?
            + self.corner(-r.x0, r.y1)?
            + self.corner(r.x1, -r.y0)?
            + self.corner(-r.x0, -r.y0)?)
    }

    fn regular(&self, r: &Rect, depth: u32) -> Result<f64> {
        let (cx, cy) = r.center();
        let far = cx.hypot(cy) > 2.0 * r.diameter();
        if far {
            let coarse = self.tensor(&self.low, r);
            let fine = self.tensor(&self.high, r);
            let achieved = (fine - coarse).abs() / fine;
            if achieved <= self.tol {
                return Ok(fine);
            }
            if depth == 0 {
                return Err(Error::QuadratureFailure {
                    requested: self.tol,
                    achieved,
                });
            }
        } else if depth == 0 {
            return Err(Error::QuadratureFailure {
                requested: self.tol,
                achieved: f64::INFINITY,
            });
        }
        let mut total = 0.0;
        for q in r.quadrants() {
            total += self.regular(&q, depth - 1)?;
        }
        Ok(total)
    }

    /// `int_r |z|^{-alpha} dz` for a rectangle in coordinates centred on the
    /// evaluation point.
    fn integrate(&self, r: &Rect) -> Result<f64> {
        if r.contains_origin() {
            self.singular(r)
        } else {
            self.regular(r, MAX_DEPTH_2D)
        }
    }
}

/// `C(2, alpha - 2) * int_cell |point - z|^{-alpha} dz` to relative accuracy `rel_tol`.
pub fn cell_kernel_2d(alpha: f64, point: [f64; 2], cell: Rect, rel_tol: f64) -> Result<f64> {
    check_alpha_2d(alpha)?;
    if !(cell.x0 < cell.x1 && cell.y0 < cell.y1) {
        return Err(Error::InvalidArgument(format!("degenerate cell {cell:?}")));
    }
    let c = riesz_constant(2, alpha - 2.0)?;
    let shifted = Rect::new(
        cell.x0 - point[0],
        cell.x1 - point[0],
        cell.y0 - point[1],
        cell.y1 - point[1],
    );
    Ok(c * Quadrature2D::new(alpha, rel_tol).integrate(&shifted)?)
}

/// 2D kernel table, `K[m, n]` for x-offset `m` and y-offset `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable2D {
    alpha: f64,
    cells: usize,
    offsets: Vec<f64>,
}

pub fn kernel_table_2d(grid: &Grid2D, alpha: f64) -> Result<KernelTable2D> {
    kernel_table_2d_with_tolerance(grid, alpha, CELL_TOLERANCE_2D)
}

pub fn kernel_table_2d_with_tolerance(grid: &Grid2D, alpha: f64, rel_tol: f64) -> Result<KernelTable2D> {
    check_alpha_2d(alpha)?;
    let n = grid.cells();
    let c = riesz_constant(2, alpha - 2.0)?;
    // Integrate on cells of unit width and rescale: the kernel is homogeneous
    // of degree -alpha, so each entry scales with h^{2 - alpha}.
    let scale = c * grid.spacing().powf(2.0 - alpha);
    let quad = Quadrature2D::new(alpha, rel_tol);
    let lower: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|m| {
            (0..=m)
                .map(|k| {
                    let r = Rect::square(m as f64, k as f64, 0.5);
                    quad.integrate(&r).map(|v| scale * v)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut offsets = vec![0.0; n * n];
    for (m, row) in lower.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            offsets[k * n + m] = v;
            offsets[m * n + k] = v;
        }
    }
    Ok(KernelTable2D {
        alpha,
        cells: n,
        offsets,
    })
}

impl KernelTable2D {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// `K[m, n]`.
    pub fn value(&self, m: usize, n: usize) -> f64 {
        self.offsets[n * self.cells + m]
    }

    /// Row-major offsets, x-offset fastest.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Kernel restricted to one grid line, `K[m, 0]`.
    pub fn line(&self) -> &[f64] {
        &self.offsets[..self.cells]
    }

    /// Discrete Riesz potential by direct summation, `O(N^4)`.
    pub fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let n = self.cells;
        assert_eq!(rho.len(), n * n, "field does not match kernel table");
        (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx % n, idx / n);
                let mut acc = 0.0;
                for l in 0..n {
                    let dj = j.abs_diff(l);
                    for k in 0..n {
                        acc += rho[l * n + k] * self.value(i.abs_diff(k), dj);
                    }
                }
                acc
            })
            .collect()
    }
}

/// On-disk store of kernel tables, keyed by dimension, order, domain and
/// quadrature version.
#[derive(Debug, Clone)]
pub struct KernelCache {
    dir: PathBuf,
}

impl KernelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn path(&self, dim: usize, alpha: f64, half_width: f64, cells: usize) -> PathBuf {
        self.dir.join(format!(
            "kernel-d{dim}-a{:016x}-r{:016x}-n{cells}-q{QUADRATURE_VERSION}.bin",
            alpha.to_bits(),
            half_width.to_bits()
        ))
    }

    pub fn table_1d(&self, grid: &Grid1D, alpha: f64) -> std::io::Result<KernelTable1D> {
        let path = self.path(1, alpha, grid.half_width(), grid.cells());
        if let Some(mut data) = read_f64s(&path, grid.cells() + 1)? {
            let shift = data.remove(0);
            return Ok(KernelTable1D {
                alpha,
                spacing: grid.spacing(),
                shift,
                reduced: data,
            });
        }
        let table = kernel_table_1d(grid, alpha).map_err(std::io::Error::other)?;
        let mut data = vec![table.shift];
        data.extend_from_slice(&table.reduced);
        write_f64s(&path, &data)?;
        Ok(table)
    }

    pub fn table_2d(&self, grid: &Grid2D, alpha: f64) -> std::io::Result<KernelTable2D> {
        let path = self.path(2, alpha, grid.half_width(), grid.cells());
        let n = grid.cells();
        if let Some(offsets) = read_f64s(&path, n * n)? {
            return Ok(KernelTable2D {
                alpha,
                cells: n,
                offsets,
            });
        }
        let table = kernel_table_2d(grid, alpha).map_err(std::io::Error::other)?;
        write_f64s(&path, &table.offsets)?;
        Ok(table)
    }
}

fn read_f64s(path: &Path, expected: usize) -> std::io::Result<Option<Vec<f64>>> {
    let mut file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.len() != expected * 8 {
        return Ok(None);
    }
    Ok(Some(
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    ))
}

fn write_f64s(path: &Path, data: &[f64]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)?;
    for v in data {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
