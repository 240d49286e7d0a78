//! Invariants of the schemes and analysis routines under random inputs.

use proptest::prelude::*;

use fracfv::analysis::{convergence_order, relative_entropy, Entropy, Reference};
use fracfv::evolve::Stepper;
use fracfv::scheme1d::{reconstruct_states, FluxOrder, Scheme1D, SchemeConfig1D};
use fracfv::scheme2d::{Scheme2D, SchemeConfig2D};
use fracfv::{build_grid_1d, build_grid_2d, Field, Field1D, Field2D};

fn positive_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..2.0, n)
}

fn scheme_1d(alpha: f64, beta: f64, n: usize, dt: f64, order: FluxOrder) -> Scheme1D {
    let grid = build_grid_1d(3.0, n).unwrap();
    Scheme1D::new(
        &grid,
        SchemeConfig1D {
            alpha,
            beta,
            dt,
            flux_order: order,
        },
    )
    .unwrap()
}

fn evolve<const D: usize, S: Stepper<D>>(s: &S, mut f: Field<D>, steps: usize) -> Field<D> {
    for _ in 0..steps {
        f = s.step(&f).unwrap();
    }
    f
}

fn rel_drift<const D: usize>(a: &Field<D>, b: &Field<D>) -> f64 {
    (a.mass() - b.mass()).abs() / a.mass().abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_d_steps_conserve_mass(
        alpha in 1.05f64..1.95,
        beta in 0.0f64..2.0,
        values in (4usize..40).prop_flat_map(positive_values),
        dt in 0.005f64..0.5,
        second in any::<bool>(),
    ) {
        let order = if second { FluxOrder::Second } else { FluxOrder::First };
        let s = scheme_1d(alpha, beta, values.len(), dt, order);
        let f0 = Field1D::new(*s.grid(), values).unwrap();
        let f = evolve(&s, f0.clone(), 20);
        prop_assert!(rel_drift(&f0, &f) <= 1e-12);
    }

    #[test]
    fn two_d_split_steps_conserve_mass(
        alpha in 0.2f64..1.9,
        beta in 0.0f64..2.0,
        n in 3usize..10,
        dt in 0.01f64..0.5,
        seed in prop::collection::vec(0.01f64..2.0, 100),
    ) {
        let grid = build_grid_2d(2.0, n).unwrap();
        let s = Scheme2D::new(&grid, SchemeConfig2D { alpha, beta, dt }).unwrap();
        let f0 = Field2D::new(grid, seed[..n * n].to_vec()).unwrap();
        let f = evolve(&s, f0.clone(), 10);
        prop_assert!(rel_drift(&f0, &f) <= 1e-12);
    }

    #[test]
    fn linear_schemes_are_linear(
        alpha in 1.05f64..1.95,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        u in positive_values(12),
        v in positive_values(12),
    ) {
        let s = scheme_1d(alpha, 1.0, 12, 0.1, FluxOrder::First);
        let g = *s.grid();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = s.step(&Field1D::new(g, combo).unwrap()).unwrap();
        let su = s.step(&Field1D::new(g, u.clone()).unwrap()).unwrap();
        let sv = s.step(&Field1D::new(g, v.clone()).unwrap()).unwrap();
        for i in 0..12 {
            let rhs = a * su.values()[i] + b * sv.values()[i];
            prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        let grid = build_grid_2d(2.0, 4).unwrap();
        let s2 = Scheme2D::new(&grid, SchemeConfig2D { alpha: alpha - 0.5, beta: 0.5, dt: 0.1 }).unwrap();
        let u2: Vec<f64> = (0..16).map(|k| u[k % 12] + 0.1 * k as f64).collect();
        let v2: Vec<f64> = (0..16).map(|k| v[(k * 5) % 12]).collect();
        let combo2: Vec<f64> = u2.iter().zip(&v2).map(|(x, y)| a * x + b * y).collect();
        let lhs = s2.step(&Field2D::new(grid, combo2).unwrap()).unwrap();
        let su = s2.step(&Field2D::new(grid, u2).unwrap()).unwrap();
        let sv = s2.step(&Field2D::new(grid, v2).unwrap()).unwrap();
        for i in 0..16 {
            let rhs = a * su.values()[i] + b * sv.values()[i];
            prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn even_data_stay_even(
        alpha in 1.05f64..1.95,
        beta in 0.0f64..2.0,
        half in prop::collection::vec(0.01f64..2.0, 3..15),
        second in any::<bool>(),
    ) {
        let mut values = half.clone();
        values.extend(half.iter().rev());
        let n = values.len();
        let order = if second { FluxOrder::Second } else { FluxOrder::First };
        let s = scheme_1d(alpha, beta, n, 0.05, order);
        let f = evolve(&s, Field1D::new(*s.grid(), values).unwrap(), 5);
        let v = f.values();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..n / 2 {
            prop_assert!((v[i] - v[n - 1 - i]).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn two_d_symmetric_data_stay_symmetric(
        alpha in 0.2f64..1.9,
        n in 2usize..6,
        seed in prop::collection::vec(0.01f64..2.0, 25),
    ) {
        // Build data invariant under x -> -x, y -> -y and x <-> y.
        let m = 2 * n;
        let grid = build_grid_2d(2.0, m).unwrap();
        let fold = |i: usize| if i < n { n - 1 - i } else { i - n };
        let values: Vec<f64> = (0..m * m)
            .map(|idx| {
                let (i, j) = (fold(idx % m), fold(idx / m));
                let (lo, hi) = (i.min(j), i.max(j));
                seed[lo * 5 + hi]
            })
            .collect();
        let s = Scheme2D::new(&grid, SchemeConfig2D { alpha, beta: 1.0, dt: 0.1 }).unwrap();
        let f = evolve(&s, Field2D::new(grid, values).unwrap(), 3);
        let v = f.values();
        let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for j in 0..m {
            for i in 0..m {
                let here = v[j * m + i];
                prop_assert!((here - v[j * m + (m - 1 - i)]).abs() <= 1e-11 * scale);
                prop_assert!((here - v[(m - 1 - j) * m + i]).abs() <= 1e-11 * scale);
            }
        }
    }

    #[test]
    fn reconstruction_respects_neighbour_bounds(
        values in prop::collection::vec(-5.0f64..5.0, 3..40),
        dx in 0.01f64..1.0,
    ) {
        let (east, west) = reconstruct_states(&values, dx);
        let n = values.len();
        for i in 0..n {
            let lo_i = i.saturating_sub(1);
            let hi_i = (i + 1).min(n - 1);
            let lo = values[lo_i..=hi_i].iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values[lo_i..=hi_i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            prop_assert!(east[i] >= lo - tol && east[i] <= hi + tol);
            prop_assert!(west[i] >= lo - tol && west[i] <= hi + tol);
            prop_assert!((0.5 * (east[i] + west[i]) - values[i]).abs() <= tol);
        }
    }

    #[test]
    fn convergence_order_is_scale_invariant(
        errors in prop::collection::vec(1e-8f64..1.0, 2..6),
        h0 in 0.01f64..1.0,
        c in 1e-3f64..1e3,
        s in 1e-3f64..1e3,
    ) {
        let spacings: Vec<f64> = (0..errors.len()).map(|k| h0 / f64::powi(2.0, k as i32)).collect();
        let base = convergence_order(&errors, &spacings).unwrap();
        let scaled_e: Vec<f64> = errors.iter().map(|e| c * e).collect();
        let scaled_h: Vec<f64> = spacings.iter().map(|h| s * h).collect();
        let other = convergence_order(&scaled_e, &scaled_h).unwrap();
        prop_assert!((base.slope - other.slope).abs() <= 1e-9 * (1.0 + base.slope.abs()));
        for (a, b) in base.pair_orders.iter().zip(&other.pair_orders) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn relative_entropies_are_non_negative(
        pair in (2usize..30).prop_flat_map(|n| (positive_values(n), positive_values(n))),
        zero in 0usize..30,
    ) {
        let (mut rho, steady) = pair;
        let n = rho.len();
        rho[zero % n] = 0.0;
        let grid = build_grid_1d(1.0, n).unwrap();
        let f = Field1D::new(grid, rho).unwrap();
        let s = Field1D::new(grid, steady).unwrap();
        for phi in [Entropy::Quadratic, Entropy::Boltzmann] {
            prop_assert!(relative_entropy(&f, &Reference::Field(&s), phi).unwrap() >= 0.0);
            prop_assert_eq!(relative_entropy(&s, &Reference::Field(&s), phi).unwrap(), 0.0);
        }
    }

    #[test]
    fn runs_are_deterministic_across_thread_counts(
        alpha in 0.3f64..1.8,
        seed in prop::collection::vec(0.01f64..2.0, 64),
    ) {
        let grid = build_grid_2d(2.0, 8).unwrap();
        let s = Scheme2D::new(&grid, SchemeConfig2D { alpha, beta: 1.0, dt: 0.1 }).unwrap();
        let f0 = Field2D::new(grid, seed).unwrap();
        let results: Vec<Field2D> = [1, 2, 3]
            .iter()
            .map(|&t| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
                pool.install(|| evolve(&s, f0.clone(), 4))
            })
            .collect();
        prop_assert_eq!(&results[0], &results[1]);
        prop_assert_eq!(&results[0], &results[2]);
    }
}
