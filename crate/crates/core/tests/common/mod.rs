//! Quadrature used by the oracle tests, written independently of the crate.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

pub fn gl_integrate(rule: &[(f64, f64)], f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// `int_0^len g(u) du` for `g` integrably singular at `u = 0`, on panels
/// graded geometrically towards the origin.
pub fn graded(g: &impl Fn(f64) -> f64, len: f64) -> f64 {
    let rule = gauss_legendre(20);
    let mut total = 0.0;
    let mut hi = len;
    for _ in 0..600 {
        let lo = 0.5 * hi;
        total += gl_integrate(&rule, g, lo, hi);
        hi = lo;
    }
    total
}

/// `int` of `f(x, y)` over a rectangle, split into `2^level` panels per axis.
pub fn tensor_2d(f: &impl Fn(f64, f64) -> f64, x: (f64, f64), y: (f64, f64), level: u32) -> f64 {
    let rule = gauss_legendre(10);
    let k = 1usize << level;
    let hx = (x.1 - x.0) / k as f64;
    let hy = (y.1 - y.0) / k as f64;
    let mut total = 0.0;
    for a in 0..k {
        let (x0, x1) = (x.0 + a as f64 * hx, x.0 + (a + 1) as f64 * hx);
        for b in 0..k {
            let (y0, y1) = (y.0 + b as f64 * hy, y.0 + (b + 1) as f64 * hy);
            total += gl_integrate(&rule, &|yy| gl_integrate(&rule, &|xx| f(xx, yy), x0, x1), y0, y1);
        }
    }
    total
}

/// Composite Simpson rule on an even number of panels.
pub fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `int_a^b |x - y|^{1 - alpha} dy`.
pub fn cell_integral_1d(alpha: f64, x: f64, a: f64, b: f64) -> f64 {
    let g = |u: f64| u.powf(1.0 - alpha);
    if x <= a || x >= b {
        let (lo, hi) = if x <= a { (a - x, b - x) } else { (x - b, x - a) };
        if lo == 0.0 {
            return graded(&g, hi);
        }
        let rule = gauss_legendre(20);
        let panels = 16;
        let h = (hi - lo) / panels as f64;
        (0..panels)
            .map(|k| gl_integrate(&rule, &g, lo + k as f64 * h, lo + (k + 1) as f64 * h))
            .sum()
    } else {
        graded(&g, x - a) + graded(&g, b - x)
    }
}

/// `int |point - z|^{-alpha} dz` over `[x0, x1] x [y0, y1]`, at two
/// resolutions; returns `(coarse, fine)`.
///
/// A cell containing the point is split into the four rectangles having it
/// as a corner, and each of those into two triangles integrated in polar
/// coordinates about the point (radial part exact).
pub fn cell_integral_2d(alpha: f64, point: [f64; 2], x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let (px, py) = (point[0], point[1]);
    let inside = x.0 <= px && px <= x.1 && y.0 <= py && py <= y.1;
    if inside {
        let s = 2.0 - alpha;
        // int over the right triangle with legs a (along theta = 0) and b.
        let triangle = |a: f64, b: f64, n: usize| {
            if a <= 0.0 || b <= 0.0 {
                return 0.0;
            }
            let rule = gauss_legendre(n);
            let top = b.atan2(a);
            gl_integrate(&rule, &|t: f64| (a / t.cos()).powf(s) / s, 0.0, top)
        };
        let corner = |a: f64, b: f64, n: usize| triangle(a, b, n) + triangle(b, a, n);
        let total = |n: usize| {
            corner(x.1 - px, y.1 - py, n)
                + corner(px - x.0, y.1 - py, n)
                + corner(x.1 - px, py - y.0, n)
                + corner(px - x.0, py - y.0, n)
        };
        (total(30), total(60))
    } else {
        let f = |a: f64, b: f64| ((a - px).powi(2) + (b - py).powi(2)).powf(-0.5 * alpha);
        (tensor_2d(&f, x, y, 3), tensor_2d(&f, x, y, 4))
    }
}

/// `int_{-R}^{R} ((R - y)/(R + y))^a / (y - x) dy` with `|y - x| < eps`
/// excised.
pub fn excised_weighted_integral(a: f64, r: f64, x: f64, eps: f64) -> f64 {
    let w = |dr: f64, dl: f64| (dr / dl).powf(a);
    // Left piece [-R, x - eps]: graded towards both ends.
    let left_len = x - eps + r;
    let half = 0.5 * left_len;
    let from_wall = graded(&|u: f64| w(2.0 * r - u, u) / (-r + u - x), half);
    let from_hole = graded(&|u: f64| w(r - x + eps + u, r + x - eps - u) / (-eps - u), half);
    // Right piece [x + eps, R].
    let right_len = r - x - eps;
    let half_r = 0.5 * right_len;
    let near_hole = graded(&|u: f64| w(r - x - eps - u, r + x + eps + u) / (eps + u), half_r);
    let near_wall = graded(&|u: f64| w(u, 2.0 * r - u) / (r - u - x), half_r);
    from_wall + from_hole + near_hole + near_wall
}
