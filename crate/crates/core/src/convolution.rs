//! Discrete Riesz potential on a 2D grid by FFT.
//!
//! The kernel is even in both offsets, so the `N x N` Toeplitz-block-Toeplitz
//! product embeds in a `2N x 2N` circulant whose spectrum is computed once.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::kernels::KernelTable2D;

pub struct FftConvolver {
    cells: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex64>,
}

impl std::fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver").field("cells", &self.cells).finish()
    }
}

impl FftConvolver {
    pub fn new(table: &KernelTable2D) -> Self {
        let n = table.cells();
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let wrap = |k: usize| -> Option<usize> {
            match k.cmp(&n) {
                std::cmp::Ordering::Less => Some(k),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(m - k),
            }
        };
        let mut grid = vec![Complex64::new(0.0, 0.0); m * m];
        for q in 0..m {
            for p in 0..m {
                if let (Some(a), Some(b)) = (wrap(p), wrap(q)) {
                    grid[q * m + p] = Complex64::new(table.value(a, b), 0.0);
                }
            }
        }
        let mut conv = Self {
            cells: n,
            forward,
            inverse,
            spectrum: Vec::new(),
        };
        conv.transform(&mut grid, false);
        conv.spectrum = grid;
        conv
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// 2D transform of an `m x m` row-major array: rows first, then columns.
    /// Each line is transformed independently, so the result does not depend
    /// on how rayon schedules the lines.
    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let m = 2 * self.cells;
        let plan = if inverse { &self.inverse } else { &self.forward };
        data.par_chunks_mut(m).for_each(|row| plan.process(row));
        let mut columns = transpose(data, m);
        columns.par_chunks_mut(m).for_each(|col| plan.process(col));
        data.copy_from_slice(&transpose(&columns, m));
    }

    /// `I_{ij} = sum_{kl} rho_{kl} K[|i - k|, |j - l|]`.
    pub fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let n = self.cells;
        let m = 2 * n;
        assert_eq!(rho.len(), n * n, "field does not match convolver");
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for j in 0..n {
            for i in 0..n {
                data[j * m + i] = Complex64::new(rho[j * n + i], 0.0);
            }
        }
        self.transform(&mut data, false);
        data.par_iter_mut()
            .zip(self.spectrum.par_iter())
            .for_each(|(d, s)| *d *= s);
        self.transform(&mut data, true);
        let scale = 1.0 / (m * m) as f64;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                out[j * n + i] = data[j * m + i].re * scale;
            }
        }
        out
    }
}

fn transpose(data: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for r in 0..m {
        for c in 0..m {
            out[c * m + r] = data[r * m + c];
        }
    }
    out
}
