//! Dense LU factorisation shared by the 1D scheme, the 2D row systems and
//! the unsplit 2D oracle.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// `(Id + dt A)` factorised once and reused for every step.
#[derive(Debug, Clone)]
pub struct Factorized {
    lu: LU<f64, Dyn, Dyn>,
}

impl Factorized {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        assert!(matrix.is_square());
        let lu = matrix.lu();
        let diag = lu.u().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
            (lo.min(d.abs()), hi.max(d.abs()))
        });
        let ratio = lo / hi;
        if !(ratio.is_finite() && ratio > 1e3 * f64::EPSILON) {
            return Err(Error::SingularSystem {
                condition: if ratio.is_finite() { ratio } else { 0.0 },
            });
        }
        Ok(Self { lu })
    }

    pub fn dim(&self) -> usize {
        self.lu.l().nrows()
    }

    /// Solves in place; the right-hand side is overwritten with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        let mut b = DVector::from_column_slice(rhs);
        if !self.lu.solve_mut(&mut b) {
            return Err(Error::SolverFailure("LU solve reported a zero pivot".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("non-finite solution".into()));
        }
        rhs.copy_from_slice(b.as_slice());
        Ok(())
    }
}

/// Dense matrix-vector product `y = A x` with row-wise accumulation.
pub fn matvec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut y = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = a.column(j);
        for (yi, aij) in y.iter_mut().zip(col.iter()) {
            *yi += aij * xj;
        }
    }
    y
}
