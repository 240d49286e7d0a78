//! Registry of desk-scale experiments. Every entry writes CSV artifacts and
//! a `summary.json` with fitted quantities and pass/fail checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::output::{diagnostics_csv, field_csv, table_csv, write_text};
use super::{default_output, with_threads, BoxError, Summary};
use crate::analysis::{
    convergence_order, decay_rate_fit, lp_distance, riesz_flatness, tail_exponent_fit, Monitor, Reference, SubBox,
    FLATNESS_INTERIOR,
};
use crate::evolve::{run, run_to_steady, RunOutcome};
use crate::kernels::{kernel_table_1d, kernel_table_2d, regularize_alpha_1d};
use crate::mesh::{build_grid_1d, build_grid_2d, init_field, Datum, Field, Field1D, Field2D, Grid1D};
use crate::reference::{gaussian_steady, heat_kernel_alpha1, lfp_exact_1d, lfp_steady_1d, lfp_steady_2d};
use crate::scheme1d::{FluxOrder, Scheme1D, SchemeConfig1D};
use crate::scheme2d::{assemble_full_2d, Scheme2D, SchemeConfig2D};

/// `--set key=value` pairs.
#[derive(Debug, Clone, Default)]
pub struct Overrides(BTreeMap<String, String>);

impl Overrides {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` items.
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self, BoxError> {
        let mut map = BTreeMap::new();
        for item in items {
            let item = item.as_ref();
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("override '{item}' is not of the form key=value"))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, BoxError> {
        match self.raw(key) {
            Some(v) => Ok(v.parse().map_err(|_| format!("{key}: '{v}' is not a number"))?),
            None => Ok(default),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, BoxError> {
        match self.raw(key) {
            Some(v) => Ok(v
                .parse()
                .map_err(|_| format!("{key}: '{v}' is not a non-negative integer"))?),
            None => Ok(default),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, BoxError> {
        match self.raw(key) {
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("{key}: '{s}' is not a number").into())
                })
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

type Runner = fn(&Overrides, &Path) -> Result<Summary, BoxError>;

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    pub keys: &'static [&'static str],
    run: Runner,
}

/// Keys accepted by every experiment.
pub const COMMON_KEYS: &[&str] = &["output", "threads"];

pub fn registry() -> &'static [Experiment] {
    &[
        Experiment {
            name: "heat1d-interior",
            description: "alpha = 1 fractional heat equation against the explicit kernel on |x| <= R/2",
            keys: &["R", "dx", "dt", "t_final"],
            run: heat1d_interior,
        },
        Experiment {
            name: "heat1d-boundary",
            description: "bounded-domain steady state of the fractional heat equation, flatness of the Riesz potential",
            keys: &["alpha", "R", "N", "dt", "tol", "t_max"],
            run: heat1d_boundary,
        },
        Experiment {
            name: "lfp1d-exact",
            description: "alpha = 1 Levy-Fokker-Planck evolution from a uniform datum towards the explicit equilibrium",
            keys: &["R", "N", "dt", "t_final", "threshold"],
            run: lfp1d_exact,
        },
        Experiment {
            name: "domain-sweep-1d",
            description: "steady-state mismatch against whole-line equilibria as the domain grows",
            keys: &["radii", "dx", "dt", "tol", "alpha_gauss"],
            run: domain_sweep_1d,
        },
        Experiment {
            name: "entropy-1d",
            description: "decay of the quadratic and Boltzmann relative entropies at alpha = 1",
            keys: &["R", "N", "dt", "t_final", "t_start", "t_end"],
            run: entropy_1d,
        },
        Experiment {
            name: "steady-sweep-1d",
            description: "1D steady states and their algebraic tails for several alpha",
            keys: &["alphas", "R", "N", "dt", "tol"],
            run: steady_sweep_1d,
        },
        Experiment {
            name: "convergence-1d",
            description: "order of convergence of successive 1D steady states",
            keys: &["alphas", "R", "k_min", "k_max", "flux_order", "dt_rule", "tol", "t_max"],
            run: convergence_1d,
        },
        Experiment {
            name: "steady-sweep-2d",
            description: "2D steady states and their algebraic tails for several alpha",
            keys: &["alphas", "R", "N", "dt", "tol"],
            run: steady_sweep_2d,
        },
        Experiment {
            name: "lfp2d-steady",
            description: "2D alpha = 1 steady state against the explicit equilibrium for growing domains",
            keys: &["radii", "dx", "dt", "tol", "threshold"],
            run: lfp2d_steady,
        },
        Experiment {
            name: "convergence-2d",
            description: "order of convergence of successive 2D steady states",
            keys: &["alphas", "R", "k_min", "k_max", "tol", "t_max"],
            run: convergence_2d,
        },
        Experiment {
            name: "longtime-2d",
            description: "exponential approach of a symmetric datum to the 2D numerical steady state",
            keys: &["R", "N", "dt", "t_final", "t_start", "t_end"],
            run: longtime_2d,
        },
        Experiment {
            name: "splitting-2d",
            description: "split against unsplit 2D solutions as dt is halved",
            keys: &["R", "N", "dts", "t_final"],
            run: splitting_2d,
        },
    ]
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    registry().iter().find(|e| e.name == name)
}

pub fn registry_listing() -> String {
    registry()
        .iter()
        .map(|e| format!("  {:<18} {}", e.name, e.description))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Runs a registered experiment and writes its artifacts.
pub fn run_experiment(name: &str, overrides: &Overrides) -> Result<Summary, BoxError> {
    let exp = find(name).ok_or_else(|| format!("unknown experiment '{name}'; registered:\n{}", registry_listing()))?;
    for key in overrides.keys() {
        if !exp.keys.contains(&key) && !COMMON_KEYS.contains(&key) {
            return Err(format!(
                "experiment '{name}' has no parameter '{key}'; accepted: {}",
                exp.keys
                    .iter()
                    .chain(COMMON_KEYS)
                    .copied()
                    .collect::<Vec<_>>()
                    .join(", ")
            )
            .into());
        }
    }
    let dir = PathBuf::from(overrides.string("output", &default_output(name).to_string_lossy()));
    let threads = match overrides.raw("threads") {
        Some(_) => Some(overrides.usize("threads", 1)?).filter(|&n| n > 0),
        None => None,
    };
    let summary = with_threads(threads, || (exp.run)(overrides, &dir))??;
    summary.write(&dir)?;
    Ok(summary)
}

fn cells_for(half_width: f64, dx: f64) -> usize {
    (2.0 * half_width / dx).round() as usize
}

fn steady_1d(grid: &Grid1D, config: SchemeConfig1D, tol: f64, t_max: f64) -> Result<RunOutcome<1>, BoxError> {
    let scheme = Scheme1D::new(grid, config)?;
    let state = init_field(*grid, &Datum::Uniform)?;
    let out = run_to_steady(&scheme, state, tol, t_max, &Monitor::default(), &[])?;
    if !out.steady.is_some_and(|s| s.converged) {
        log::warn!(
            "1D run on {} cells stopped at t_max = {t_max} before reaching tol = {tol:e}",
            grid.cells()
        );
    }
    Ok(out)
}

fn steady_2d(
    grid: &crate::mesh::Grid2D,
    config: SchemeConfig2D,
    tol: f64,
    t_max: f64,
) -> Result<RunOutcome<2>, BoxError> {
    let scheme = Scheme2D::new(grid, config)?;
    let state = init_field(*grid, &Datum::Uniform)?;
    let out = run_to_steady(&scheme, state, tol, t_max, &Monitor::default(), &[])?;
    if !out.steady.is_some_and(|s| s.converged) {
        log::warn!(
            "2D run on {} cells stopped at t_max = {t_max} before reaching tol = {tol:e}",
            grid.cells()
        );
    }
    Ok(out)
}

fn with_columns(field: &Field1D, columns: &[&dyn Fn(f64) -> f64], header: &[&str]) -> String {
    let rows: Vec<Vec<f64>> = field
        .grid()
        .axis_centers()
        .iter()
        .zip(field.values())
        .map(|(&x, &rho)| {
            let mut row = vec![x, rho];
            row.extend(columns.iter().map(|f| f(x)));
            row
        })
        .collect();
    table_csv(header, &rows)
}

/// Successive-mesh L1 and L2 differences, the coarse field against the
/// cell averages of the next finer one.
/// `(l1, l2, spacing)` per mesh pair.
type Differences = (Vec<f64>, Vec<f64>, Vec<f64>);

fn successive_differences<const D: usize>(fields: &[Field<D>]) -> Result<Differences, BoxError> {
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    let mut h = Vec::new();
    for pair in fields.windows(2) {
        let fine = pair[1].coarsen()?;
        e1.push(lp_distance(&pair[0], &Reference::Field(&fine), 1.0, None)?);
        e2.push(lp_distance(&pair[0], &Reference::Field(&fine), 2.0, None)?);
        h.push(pair[0].grid().spacing());
    }
    Ok((e1, e2, h))
}

fn within(value: f64, lo: f64, hi: f64) -> bool {
    value >= lo && value <= hi
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn heat1d_interior(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let r = o.f64("R", 20.0)?;
    let dx = o.f64("dx", 0.1)?;
    let dt = o.f64("dt", 0.1)?;
    let t_final = o.f64("t_final", 2.0)?;
    let mut s = Summary::new("heat1d-interior");
    s.param("R", r);
    s.param("dx", dx);
    s.param("dt", dt);
    s.param("t_final", t_final);
    let base = cells_for(r, dx);
    let results: Vec<(usize, f64, String)> = [base, 2 * base]
        .par_iter()
        .map(|&n| -> Result<_, BoxError> {
            let grid = build_grid_1d(r, n)?;
            let scheme = Scheme1D::new(
                &grid,
                SchemeConfig1D {
                    alpha: 1.0,
                    beta: 0.0,
                    dt,
                    flux_order: FluxOrder::First,
                },
            )?;
            // The datum is the kernel at t0 = dt, so the run covers t_final - dt.
            let datum = init_field(grid, &Datum::HeatKernelAt(dt))?;
            let out = run(&scheme, datum, t_final - dt, &Monitor::default(), &[])?;
            let t = dt + out.time;
            let exact = |x: f64| heat_kernel_alpha1(1, t, x).unwrap_or(f64::NAN);
            let window = Some(SubBox::centered(0.5 * r));
            let err = lp_distance(&out.field, &Reference::Function(&|x| exact(x[0])), 1.0, window)?;
            let scale = lp_distance(&Field::zeros(grid), &Reference::Function(&|x| exact(x[0])), 1.0, window)?;
            let csv = with_columns(&out.field, &[&exact], &["x", "rho", "exact"]);
            Ok((n, err / scale, csv))
        })
        .collect::<Result<_, _>>()?;
    for (n, rel, csv) in &results {
        s.metric(format!("rel_l1_n{n}"), *rel);
        write_text(&dir.join(format!("profile-n{n}.csv")), csv)?;
    }
    let (coarse, fine) = (results[0].1, results[1].1);
    s.check("relative interior L1 error", coarse, "<= 0.05", coarse <= 0.05);
    s.check(
        "error decreases when N doubles",
        fine,
        format!("< {coarse}"),
        fine < coarse,
    );
    Ok(s)
}

fn heat1d_boundary(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let alpha = o.f64("alpha", 1.5)?;
    let r = o.f64("R", 10.0)?;
    let n = o.usize("N", 200)?;
    let dt = o.f64("dt", 0.5)?;
    let tol = o.f64("tol", 1e-8)?;
    let t_max = o.f64("t_max", 1e4)?;
    let mut s = Summary::new("heat1d-boundary");
    s.param("alpha", alpha);
    s.param("R", r);
    s.param("N", n);
    s.param("dt", dt);
    let grid = build_grid_1d(r, n)?;
    let alpha = regularize_alpha_1d(alpha);
    let out = steady_1d(
        &grid,
        SchemeConfig1D {
            alpha,
            beta: 0.0,
            dt,
            flux_order: FluxOrder::First,
        },
        tol,
        t_max,
    )?;
    let table = kernel_table_1d(&grid, alpha)?;
    let flatness = riesz_flatness(&out.field, &table)?;
    let v = out.field.values();
    let interior: Vec<f64> = grid
        .axis_centers()
        .iter()
        .zip(v)
        .filter(|(x, _)| x.abs() <= FLATNESS_INTERIOR * r)
        .map(|(_, &rho)| rho)
        .collect();
    let mean = interior.iter().sum::<f64>() / interior.len() as f64;
    let boundary = v[0].min(v[n - 1]);
    let potential = table.potential(v);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![grid.axis_center(i), v[i], potential[i]]).collect();
    write_text(&dir.join("steady.csv"), &table_csv(&["x", "rho", "potential"], &rows))?;
    write_text(&dir.join("diagnostics.csv"), &diagnostics_csv(&out.diagnostics))?;
    let info = out.steady.expect("steady run");
    s.metric("steady_time", info.time);
    s.metric("steady_residual", info.residual);
    s.metric("flatness", flatness);
    s.metric("boundary_density", boundary);
    s.metric("interior_mean", mean);
    s.check(
        "steady state reached",
        info.residual,
        format!("< {tol:e}"),
        info.converged,
    );
    s.check("Riesz potential flatness", flatness, "<= 0.01", flatness <= 0.01);
    s.check(
        "boundary density exceeds interior mean",
        boundary,
        format!("> {mean}"),
        boundary > mean,
    );
    Ok(s)
}

fn lfp1d_exact(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let r = o.f64("R", 20.0)?;
    let n = o.usize("N", 400)?;
    let dt = o.f64("dt", 0.01)?;
    let t_final = o.f64("t_final", 10.0)?;
    let threshold = o.f64("threshold", 0.05)?;
    let mut s = Summary::new("lfp1d-exact");
    s.param("R", r);
    s.param("N", n);
    s.param("dt", dt);
    let grid = build_grid_1d(r, n)?;
    let steady = Field::from_fn(grid, |x| lfp_steady_1d(x[0]))?;
    let scheme = Scheme1D::new(
        &grid,
        SchemeConfig1D {
            alpha: 1.0,
            beta: 1.0,
            dt,
            flux_order: FluxOrder::First,
        },
    )?;
    let monitor = Monitor {
        reference: Some(steady.clone()),
        steady: None,
        stride: 1,
    };
    let snapshot_times = [0.4, 1.0, 3.0, 4.0, t_final];
    let out = run(
        &scheme,
        init_field(grid, &Datum::Uniform)?,
        t_final,
        &monitor,
        &snapshot_times,
    )?;
    for (t, snap) in &out.snapshots {
        let exact = |x: f64| lfp_exact_1d(*t, x);
        let csv = with_columns(snap, &[&exact, &lfp_steady_1d], &["x", "rho", "exact", "steady"]);
        write_text(&dir.join(format!("snapshot-t{t:.2}.csv")), &csv)?;
    }
    write_text(&dir.join("diagnostics.csv"), &diagnostics_csv(&out.diagnostics))?;
    let l1 = lp_distance(&out.field, &Reference::Field(&steady), 1.0, None)?;
    s.metric("final_l1", l1);
    s.metric("mass_drift", out.diagnostics.mass_drift());
    s.check(
        "final L1 distance to the equilibrium",
        l1,
        format!("<= {threshold}"),
        l1 <= threshold,
    );
    Ok(s)
}

fn domain_sweep_1d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let radii = o.f64_list("radii", &[10.0, 20.0, 40.0])?;
    let dx = o.f64("dx", 0.1)?;
    let dt = o.f64("dt", 0.1)?;
    let tol = o.f64("tol", 1e-10)?;
    let alpha_gauss = o.f64("alpha_gauss", 1.98)?;
    let mut s = Summary::new("domain-sweep-1d");
    s.param("radii", format!("{radii:?}"));
    s.param("dx", dx);
    s.param("dt", dt);
    s.param("alpha_gauss", alpha_gauss);
    let cases: Vec<(f64, f64)> = radii.iter().flat_map(|&r| [(1.0, r), (alpha_gauss, r)]).collect();
    let errors: Vec<f64> = cases
        .par_iter()
        .map(|&(alpha, r)| -> Result<f64, BoxError> {
            let grid = build_grid_1d(r, cells_for(r, dx))?;
            let out = steady_1d(
                &grid,
                SchemeConfig1D {
                    alpha,
                    beta: 1.0,
                    dt,
                    flux_order: FluxOrder::First,
                },
                tol,
                1e4,
            )?;
            let err = if alpha == 1.0 {
                lp_distance(&out.field, &Reference::Function(&|x| lfp_steady_1d(x[0])), 1.0, None)?
            } else {
                lp_distance(
                    &out.field,
                    &Reference::Function(&|x| gaussian_steady(1, x[0])),
                    1.0,
                    None,
                )?
            };
            Ok(err)
        })
        .collect::<Result<_, _>>()?;
    let lfp: Vec<f64> = errors.iter().step_by(2).copied().collect();
    let gauss: Vec<f64> = errors.iter().skip(1).step_by(2).copied().collect();
    let rows: Vec<Vec<f64>> = radii
        .iter()
        .enumerate()
        .map(|(k, &r)| vec![r, lfp[k], gauss[k]])
        .collect();
    write_text(
        &dir.join("domain-sweep.csv"),
        &table_csv(&["R", "l1_lfp", "l1_gauss"], &rows),
    )?;
    for (k, &r) in radii.iter().enumerate() {
        s.metric(format!("l1_lfp_r{r}"), lfp[k]);
        s.metric(format!("l1_gauss_r{r}"), gauss[k]);
    }
    let last = |v: &[f64]| *v.last().unwrap_or(&f64::NAN);
    s.check(
        "alpha = 1 mismatch decreases with R",
        last(&lfp),
        format!("{lfp:?} decreasing"),
        strictly_decreasing(&lfp),
    );
    s.check(
        "near-Gaussian mismatch decreases with R",
        last(&gauss),
        format!("{gauss:?} decreasing"),
        strictly_decreasing(&gauss),
    );
    Ok(s)
}

fn entropy_1d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let r = o.f64("R", 20.0)?;
    let n = o.usize("N", 400)?;
    let dt = o.f64("dt", 0.01)?;
    let t_final = o.f64("t_final", 6.0)?;
    let window = (o.f64("t_start", 1.0)?, o.f64("t_end", 5.0)?);
    let mut s = Summary::new("entropy-1d");
    s.param("R", r);
    s.param("N", n);
    s.param("dt", dt);
    let grid = build_grid_1d(r, n)?;
    let steady = Field::from_fn(grid, |x| lfp_steady_1d(x[0]))?;
    let scheme = Scheme1D::new(
        &grid,
        SchemeConfig1D {
            alpha: 1.0,
            beta: 1.0,
            dt,
            flux_order: FluxOrder::First,
        },
    )?;
    let monitor = Monitor {
        reference: Some(steady.clone()),
        steady: Some(steady),
        stride: 1,
    };
    let out = run(&scheme, init_field(grid, &Datum::Uniform)?, t_final, &monitor, &[])?;
    write_text(&dir.join("diagnostics.csv"), &diagnostics_csv(&out.diagnostics))?;
    let t = out.diagnostics.times();
    let quad = decay_rate_fit(&t, &out.diagnostics.column(|r| r.ent_quad), window)?;
    let boltz = decay_rate_fit(&t, &out.diagnostics.column(|r| r.ent_boltz), window)?;
    let l1 = decay_rate_fit(&t, &out.diagnostics.column(|r| r.l1), window)?;
    s.metric("slope_quadratic", quad);
    s.metric("slope_boltzmann", boltz);
    s.metric("slope_l1", l1);
    s.check(
        "quadratic entropy slope",
        quad,
        "-1 +/- 0.25",
        within(quad, -1.25, -0.75),
    );
    s.check(
        "Boltzmann entropy slope",
        boltz,
        "-1 +/- 0.25",
        within(boltz, -1.25, -0.75),
    );
    Ok(s)
}

fn steady_sweep_1d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let alphas = o.f64_list("alphas", &[1.2, 1.5, 1.8])?;
    let r = o.f64("R", 20.0)?;
    let n = o.usize("N", 400)?;
    let dt = o.f64("dt", 0.1)?;
    let tol = o.f64("tol", 1e-10)?;
    let mut s = Summary::new("steady-sweep-1d");
    s.param("alphas", format!("{alphas:?}"));
    s.param("R", r);
    s.param("N", n);
    let grid = build_grid_1d(r, n)?;
    let fields: Vec<Field1D> = alphas
        .par_iter()
        .map(|&alpha| -> Result<Field1D, BoxError> {
            let config = SchemeConfig1D {
                alpha: regularize_alpha_1d(alpha),
                beta: 1.0,
                dt,
                flux_order: FluxOrder::First,
            };
            Ok(steady_1d(&grid, config, tol, 1e4)?.field)
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (&alpha, field) in alphas.iter().zip(&fields) {
        write_text(&dir.join(format!("steady-a{alpha}.csv")), &field_csv(field))?;
        let tail = tail_exponent_fit(field, (0.3 * r, 0.8 * r))?;
        let target = -(alpha + 1.0);
        rows.push(vec![alpha, tail, target]);
        s.metric(format!("tail_a{alpha}"), tail);
        s.check(
            format!("tail exponent at alpha = {alpha}"),
            tail,
            format!("{target} +/- 0.3"),
            (tail - target).abs() <= 0.3,
        );
    }
    write_text(
        &dir.join("tails.csv"),
        &table_csv(&["alpha", "exponent", "predicted"], &rows),
    )?;
    Ok(s)
}

fn convergence_1d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let alphas = o.f64_list("alphas", &[1.2, 1.5, 1.8])?;
    let r = o.f64("R", 5.0)?;
    let k_min = o.usize("k_min", 5)?;
    let k_max = o.usize("k_max", 9)?;
    let order = o.usize("flux_order", 1)?;
    let flux_order = FluxOrder::try_from(order as u32)?;
    let default_rule = if flux_order == FluxOrder::First { "dx" } else { "dx2" };
    let dt_rule = o.string("dt_rule", default_rule);
    let tol = o.f64("tol", 1e-8)?;
    let t_max = o.f64("t_max", 400.0)?;
    if !matches!(dt_rule.as_str(), "dx" | "dx2") {
        return Err(format!("dt_rule must be 'dx' or 'dx2', got '{dt_rule}'").into());
    }
    if k_max <= k_min {
        return Err("k_max must exceed k_min".into());
    }
    let mut s = Summary::new("convergence-1d");
    s.param("alphas", format!("{alphas:?}"));
    s.param("R", r);
    s.param("N", format!("2^{k_min}..2^{k_max}"));
    s.param("flux_order", order);
    s.param("dt_rule", &dt_rule);
    let (target, band) = if flux_order == FluxOrder::First {
        (1.0, 0.25)
    } else {
        (2.0, 0.3)
    };
    let jobs: Vec<(f64, usize)> = alphas
        .iter()
        .flat_map(|&a| (k_min..=k_max).map(move |k| (a, 1usize << k)))
        .collect();
    let fields: Vec<Field1D> = jobs
        .par_iter()
        .map(|&(alpha, n)| -> Result<Field1D, BoxError> {
            let grid = build_grid_1d(r, n)?;
            let dx = grid.spacing();
            let dt = if dt_rule == "dx" { dx } else { dx * dx };
            let config = SchemeConfig1D {
                alpha: regularize_alpha_1d(alpha),
                beta: 1.0,
                dt,
                flux_order,
            };
            Ok(steady_1d(&grid, config, tol, t_max)?.field)
        })
        .collect::<Result<_, _>>()?;
    let per_alpha = k_max - k_min + 1;
    let mut rows = Vec::new();
    for (a_idx, &alpha) in alphas.iter().enumerate() {
        let group = &fields[a_idx * per_alpha..(a_idx + 1) * per_alpha];
        for f in group {
            write_text(
                &dir.join(format!("steady-a{alpha}-n{}.csv", f.grid().cells())),
                &field_csv(f),
            )?;
        }
        let (e1, e2, h) = successive_differences(group)?;
        for k in 0..e1.len() {
            rows.push(vec![alpha, group[k].grid().cells() as f64, h[k], e1[k], e2[k]]);
        }
        let f1 = convergence_order(&e1, &h)?;
        let f2 = convergence_order(&e2, &h)?;
        s.metric(format!("slope_l1_a{alpha}"), f1.slope);
        s.metric(format!("slope_l2_a{alpha}"), f2.slope);
        for (norm, fit) in [("L1", &f1), ("L2", &f2)] {
            s.check(
                format!("{norm} slope at alpha = {alpha}"),
                fit.slope,
                format!("{target} +/- {band}"),
                (fit.slope - target).abs() <= band,
            );
        }
    }
    write_text(
        &dir.join("convergence.csv"),
        &table_csv(&["alpha", "N", "dx", "l1", "l2"], &rows),
    )?;
    Ok(s)
}

fn steady_sweep_2d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let alphas = o.f64_list("alphas", &[0.5, 1.0, 1.5])?;
    let r = o.f64("R", 20.0)?;
    let n = o.usize("N", 128)?;
    let dt = o.f64("dt", 0.1)?;
    let tol = o.f64("tol", 1e-8)?;
    let mut s = Summary::new("steady-sweep-2d");
    s.param("alphas", format!("{alphas:?}"));
    s.param("R", r);
    s.param("N", n);
    let grid = build_grid_2d(r, n)?;
    let mut rows = Vec::new();
    for &alpha in &alphas {
        let field = steady_2d(&grid, SchemeConfig2D { alpha, beta: 1.0, dt }, tol, 1e3)?.field;
        write_text(&dir.join(format!("steady-a{alpha}.csv")), &field_csv(&field))?;
        let tail = tail_exponent_fit(&field, (0.3 * r, 0.8 * r))?;
        let target = -(alpha + 2.0);
        rows.push(vec![alpha, tail, target]);
        s.metric(format!("tail_a{alpha}"), tail);
        s.check(
            format!("tail exponent at alpha = {alpha}"),
            tail,
            format!("{target} +/- 0.4"),
            (tail - target).abs() <= 0.4,
        );
    }
    write_text(
        &dir.join("tails.csv"),
        &table_csv(&["alpha", "exponent", "predicted"], &rows),
    )?;
    Ok(s)
}

fn lfp2d_steady(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let radii = o.f64_list("radii", &[10.0, 20.0])?;
    let dx = o.f64("dx", 20.0 / 128.0)?;
    let dt = o.f64("dt", 0.1)?;
    let tol = o.f64("tol", 1e-8)?;
    let threshold = o.f64("threshold", 0.1)?;
    let mut s = Summary::new("lfp2d-steady");
    s.param("radii", format!("{radii:?}"));
    s.param("dx", dx);
    s.param("dt", dt);
    let mut errors = Vec::new();
    for &r in &radii {
        let grid = build_grid_2d(r, cells_for(r, dx))?;
        let field = steady_2d(
            &grid,
            SchemeConfig2D {
                alpha: 1.0,
                beta: 1.0,
                dt,
            },
            tol,
            1e3,
        )?
        .field;
        write_text(&dir.join(format!("steady-r{r}.csv")), &field_csv(&field))?;
        let err = lp_distance(&field, &Reference::Function(&|x| lfp_steady_2d(x[0], x[1])), 1.0, None)?;
        s.metric(format!("l1_r{r}"), err);
        errors.push(err);
    }
    let rows: Vec<Vec<f64>> = radii.iter().zip(&errors).map(|(&r, &e)| vec![r, e]).collect();
    write_text(&dir.join("domain-sweep.csv"), &table_csv(&["R", "l1"], &rows))?;
    s.check(
        "L1 error on the smallest domain",
        errors[0],
        format!("<= {threshold}"),
        errors[0] <= threshold,
    );
    s.check(
        "error decreases as R doubles",
        *errors.last().unwrap(),
        format!("{errors:?} decreasing"),
        strictly_decreasing(&errors),
    );
    Ok(s)
}

fn convergence_2d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let alphas = o.f64_list("alphas", &[0.5, 1.0, 1.5])?;
    let r = o.f64("R", 10.0)?;
    let k_min = o.usize("k_min", 4)?;
    let k_max = o.usize("k_max", 7)?;
    let tol = o.f64("tol", 1e-8)?;
    let t_max = o.f64("t_max", 400.0)?;
    if k_max <= k_min {
        return Err("k_max must exceed k_min".into());
    }
    let mut s = Summary::new("convergence-2d");
    s.param("alphas", format!("{alphas:?}"));
    s.param("R", r);
    s.param("N", format!("2^{k_min}..2^{k_max}"));
    let mut rows = Vec::new();
    for &alpha in &alphas {
        let mut group = Vec::new();
        for k in k_min..=k_max {
            let grid = build_grid_2d(r, 1 << k)?;
            let dt = grid.spacing();
            group.push(steady_2d(&grid, SchemeConfig2D { alpha, beta: 1.0, dt }, tol, t_max)?.field);
        }
        for f in &group {
            write_text(
                &dir.join(format!("steady-a{alpha}-n{}.csv", f.grid().cells())),
                &field_csv(f),
            )?;
        }
        let (e1, e2, h) = successive_differences(&group)?;
        for k in 0..e1.len() {
            rows.push(vec![alpha, group[k].grid().cells() as f64, h[k], e1[k], e2[k]]);
        }
        let f1 = convergence_order(&e1, &h)?;
        let f2 = convergence_order(&e2, &h)?;
        s.metric(format!("slope_l1_a{alpha}"), f1.slope);
        s.metric(format!("slope_l2_a{alpha}"), f2.slope);
        s.check(
            format!("L1 slope at alpha = {alpha}"),
            f1.slope,
            "in [0.6, 1.1]",
            within(f1.slope, 0.6, 1.1),
        );
    }
    write_text(
        &dir.join("convergence.csv"),
        &table_csv(&["alpha", "N", "dx", "l1", "l2"], &rows),
    )?;
    Ok(s)
}

fn longtime_2d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let r = o.f64("R", 10.0)?;
    let n = o.usize("N", 64)?;
    let dt = o.f64("dt", 0.05)?;
    let t_final = o.f64("t_final", 10.0)?;
    let window = (o.f64("t_start", 2.0)?, o.f64("t_end", 8.0)?);
    let mut s = Summary::new("longtime-2d");
    s.param("R", r);
    s.param("N", n);
    s.param("dt", dt);
    s.param("datum", "gaussian");
    let grid = build_grid_2d(r, n)?;
    let scheme = Scheme2D::new(
        &grid,
        SchemeConfig2D {
            alpha: 1.0,
            beta: 1.0,
            dt,
        },
    )?;
    // A tight tolerance keeps the reference far below the distances fitted.
    let steady_tol = 1e-13;
    let steady = run_to_steady(
        &scheme,
        init_field(grid, &Datum::Uniform)?,
        steady_tol,
        1e3,
        &Monitor::default(),
        &[],
    )?;
    let monitor = Monitor {
        reference: Some(steady.field.clone()),
        steady: None,
        stride: 1,
    };
    let out = run(&scheme, init_field(grid, &Datum::Gaussian)?, t_final, &monitor, &[])?;
    write_text(&dir.join("diagnostics.csv"), &diagnostics_csv(&out.diagnostics))?;
    write_text(&dir.join("steady.csv"), &field_csv(&steady.field))?;
    let t = out.diagnostics.times();
    let l1 = out.diagnostics.column(|r| r.l1);
    let l2 = out.diagnostics.column(|r| r.l2);
    let rate = decay_rate_fit(&t, &l1, window)?;
    let rate_l2 = decay_rate_fit(&t, &l2, window)?;
    let floor = t
        .iter()
        .zip(&l1)
        .filter(|(&ti, _)| ti >= window.0 && ti <= window.1)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    s.metric("rate_l1", rate);
    s.metric("rate_l2", rate_l2);
    s.metric("window_min_l1", floor);
    s.check("L1 decay rate", rate, "-2 +/- 0.4", within(rate, -2.4, -1.6));
    s.check(
        "window lies before the plateau",
        floor,
        "> 1e3 x steady tolerance",
        floor > 1e3 * steady_tol,
    );
    Ok(s)
}

fn splitting_2d(o: &Overrides, dir: &Path) -> Result<Summary, BoxError> {
    let r = o.f64("R", 4.0)?;
    let n = o.usize("N", 16)?;
    let dts = o.f64_list("dts", &[0.1, 0.05])?;
    let t_final = o.f64("t_final", 1.0)?;
    let mut s = Summary::new("splitting-2d");
    s.param("R", r);
    s.param("N", n);
    s.param("dts", format!("{dts:?}"));
    s.param("datum", "gaussian");
    let grid = build_grid_2d(r, n)?;
    let table = kernel_table_2d(&grid, 1.0)?;
    let mut rows = Vec::new();
    for &dt in &dts {
        let split = Scheme2D::with_table(
            &grid,
            SchemeConfig2D {
                alpha: 1.0,
                beta: 1.0,
                dt,
            },
            &table,
        )?;
        let full = assemble_full_2d(&grid, 1.0, 1.0, &table, dt)?;
        let datum = init_field(grid, &Datum::Gaussian)?;
        let a: Field2D = run(&split, datum.clone(), t_final, &Monitor::default(), &[])?.field;
        let b: Field2D = run(&full, datum, t_final, &Monitor::default(), &[])?.field;
        let linf = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let l1 = lp_distance(&a, &Reference::Field(&b), 1.0, None)?;
        write_text(&dir.join(format!("split-dt{dt}.csv")), &field_csv(&a))?;
        rows.push(vec![dt, linf, l1]);
        s.metric(format!("linf_dt{dt}"), linf);
        s.metric(format!("l1_dt{dt}"), l1);
    }
    write_text(&dir.join("splitting.csv"), &table_csv(&["dt", "linf", "l1"], &rows))?;
    for pair in rows.windows(2) {
        let ratio = pair[0][1] / pair[1][1];
        s.metric(format!("ratio_dt{}", pair[1][0]), ratio);
        s.check(
            format!("difference ratio from dt = {} to {}", pair[0][0], pair[1][0]),
            ratio,
            "in [1.6, 2.4]",
            within(ratio, 1.6, 2.4),
        );
    }
    Ok(s)
}
