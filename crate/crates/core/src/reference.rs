//! Closed-form solutions and asymptotic laws used to validate the schemes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::tanh_sinh;

/// Normalising constant of the alpha = 1 heat kernel in `d` dimensions.
fn heat_constant(dim: usize) -> f64 {
    match dim {
        1 => 1.0 / PI,
        2 => 0.5 / PI,
        _ => panic!("heat kernel implemented for d = 1, 2 only"),
    }
}

/// Self-similar solution of the alpha = 1 fractional heat equation,
/// `C(d) t / (t^2 + |x|^2)^{(d+1)/2}`. `r` is `|x|`.
pub fn heat_kernel_alpha1(dim: usize, t: f64, r: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("heat kernel needs t > 0, got {t}")));
    }
    let e = 0.5 * (dim as f64 + 1.0);
    Ok(heat_constant(dim) * t / (t * t + r * r).powf(e))
}

/// Whole-line solution of the alpha = 1 Levy-Fokker-Planck equation.
pub fn lfp_exact_1d(t: f64, x: f64) -> f64 {
    // With s = 1 - e^{-t}: e^t (e^t - 1) / ((1+x^2) e^{2t} - 2e^t + 1) = s / (s^2 + x^2).
    let s = -(-t).exp_m1();
    s / (PI * (s * s + x * x))
}

pub fn lfp_steady_1d(x: f64) -> f64 {
    1.0 / (PI * (1.0 + x * x))
}

/// Whole-plane solution of the alpha = 1 Levy-Fokker-Planck equation.
pub fn lfp_exact_2d(t: f64, x: f64, y: f64) -> f64 {
    let s = -(-t).exp_m1();
    s / (2.0 * PI * (s * s + x * x + y * y).powf(1.5))
}

pub fn lfp_steady_2d(x: f64, y: f64) -> f64 {
    1.0 / (2.0 * PI * (1.0 + x * x + y * y).powf(1.5))
}

/// Equilibrium of the classical Fokker-Planck equation, `(2 pi)^{-d/2} e^{-r^2/2}`.
pub fn gaussian_steady(dim: usize, r: f64) -> f64 {
    (2.0 * PI).powf(-0.5 * dim as f64) * (-0.5 * r * r).exp()
}

/// `min(1, |x|^{-alpha - d})`.
pub fn tail_law(alpha: f64, dim: usize, r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        1.0
    } else {
        r.powf(-alpha - dim as f64)
    }
}

/// Principal value of `int_{-R}^{R} (R - y)^{a} (R + y)^{-a} / (y - x) dy`
/// with `a = 1 - alpha / 2`, computed by subtracting the pole.
pub fn boundary_principal_value(alpha: f64, half_width: f64, x: f64) -> Result<f64> {
    let r = half_width;
    if !(x.abs() < r) {
        return Err(Error::OutOfDomain { x, half_width: r });
    }
    let a = 1.0 - 0.5 * alpha;
    let weight = |dr: f64, dl: f64| dr.powf(a) / dl.powf(a);
    let wx = weight(r - x, r + x);
    // Slope of w for nodes very close to the pole: w'(x) = -2aR w / (R^2 - x^2).
    let slope = -2.0 * a * r * wx / ((r - x) * (r + x));
    let near = 1e-7 * r;
    let left = tanh_sinh(
        |y, d_left, d_pole| {
            if d_pole < near {
                slope
            } else {
                (weight(r - y, d_left) - wx) / (y - x)
            }
        },
        -r,
        x,
        1e-13,
    );
    let right = tanh_sinh(
        |y, d_pole, d_right| {
            if d_pole < near {
                slope
            } else {
                (weight(d_right, r + y) - wx) / (y - x)
            }
        },
        x,
        r,
        1e-13,
    );
    Ok(left.value + right.value + wx * ((r - x) / (r + x)).ln())
}

/// Explicit steady profile of the bounded-domain fractional heat equation
/// for `1 < alpha < 2`, with caller-supplied constants `A` and `C`.
pub fn boundary_steady_profile(alpha: f64, half_width: f64, x: f64, a_const: f64, c_const: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (1, 2), got {alpha}")));
    }
    let r = half_width;
    let pv = boundary_principal_value(alpha, r, x)?;
    let first = (0.5 * PI * (alpha - 1.0)).cos().powi(2) * c_const * (r + x).powf(0.5 * alpha - 1.0)
        / (PI * PI * (r - x).powf(1.0 - 0.5 * alpha))
        * pv;
    let second = a_const * (PI * (alpha - 1.0)).sin() / (2.0 * PI * (r + x).powf(2.0 - alpha));
    Ok(first + second)
}
