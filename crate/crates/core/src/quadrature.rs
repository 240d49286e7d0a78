//! Gauss-Legendre and double-exponential quadrature rules.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi's initial guess, refined by Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive bisection driven by a low/high Gauss-Legendre pair.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, max_depth: u32) -> Estimate {
    thread_local! {
        static RULES: (GaussLegendre, GaussLegendre) = (GaussLegendre::new(12), GaussLegendre::new(20));
    }
    RULES.with(|(low, high)| {
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            low: &GaussLegendre,
            high: &GaussLegendre,
            a: f64,
            b: f64,
            abs_tol: f64,
            depth: u32,
        ) -> Estimate {
            let coarse = low.integrate(f, a, b);
            let fine = high.integrate(f, a, b);
            let err = (fine - coarse).abs();
            if err <= abs_tol || depth == 0 {
                return Estimate {
                    value: fine,
                    error: err,
                };
            }
            let m = 0.5 * (a + b);
            let l = rec(f, low, high, a, m, 0.5 * abs_tol, depth - 1);
            let r = rec(f, low, high, m, b, 0.5 * abs_tol, depth - 1);
            Estimate {
                value: l.value + r.value,
                error: l.error + r.error,
            }
        }
        let first = high.integrate(f, a, b);
        let abs_tol = rel_tol * first.abs().max(f64::MIN_POSITIVE);
        rec(f, low, high, a, b, abs_tol, max_depth)
    })
}

/// Tanh-sinh quadrature on `[a, b]`, robust to integrable endpoint
/// singularities. The integrand is called with `(x, distance_to_a, distance_to_b)`
/// so that endpoint-relative quantities can be formed without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Estimate {
    let half = 0.5 * (b - a);
    let mut h = 1.0;
    let term = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        // Distance of the node from the nearer endpoint, in units of `half`.
        let gap = (-u.abs()).exp() / cu;
        let weight = 0.5 * PI * t.cosh() / (cu * cu);
        if gap == 0.0 || !weight.is_finite() {
            return 0.0;
        }
        let (da, db) = if t < 0.0 {
            (half * gap, half * (2.0 - gap))
        } else {
            (half * (2.0 - gap), half * gap)
        };
        let x = if t < 0.0 { a + da } else { b - db };
        weight * f(x, da, db)
    };
    let t_max = 6.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += term(t) + term(-t);
        k += 1;
    }
    let mut estimate = half * h * sum;
    let mut error = f64::INFINITY;
    for _ in 0..8 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            add += term(t) + term(-t);
            k += 2;
        }
        sum += add;
        let next = half * h * sum;
        error = (next - estimate).abs();
        estimate = next;
        if error <= rel_tol * estimate.abs() {
            break;
        }
    }
    Estimate { value: estimate, error }
}
