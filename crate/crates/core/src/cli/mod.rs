//! Configuration-driven runs, the experiment registry and artifact output.

pub mod config;
pub mod experiments;
pub mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{lp_distance, Monitor, Reference};
use crate::error::Error;
use crate::evolve::{self, RunOutcome, Stepper};
use crate::mesh::{init_field, Datum, Field, Grid};
use crate::reference::{gaussian_steady, heat_kernel_alpha1, lfp_steady_1d, lfp_steady_2d};
use crate::scheme1d::{Scheme1D, SchemeConfig1D};
use crate::scheme2d::{Scheme2D, SchemeConfig2D};
use config::{DatumSpec, Horizon, ReferenceSpec, RunConfig};
use output::{emit_csv, write_text, CsvContent};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// Environment variable consulted for the worker-thread count.
pub const THREADS_ENV: &str = "FRACFV_THREADS";

/// One acceptance-style check recorded in a summary.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

/// Machine-readable outcome of a run or experiment.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn check(&mut self, name: impl Into<String>, value: f64, target: impl Into<String>, pass: bool) {
        self.checks.push(Check {
            name: name.into(),
            value,
            target: target.into(),
            pass,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        write_text(&dir.join("summary.json"), &(text + "\n"))
    }
}

/// Runs `f` on a pool of `threads` workers, or of `FRACFV_THREADS` workers
/// when `threads` is `None`, or on the global pool when neither is set.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, BoxError> {
    let requested = match threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?,
            ),
            Err(_) => None,
        },
    };
    match requested {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn initial_field<const D: usize>(grid: Grid<D>, datum: &DatumSpec) -> Result<Field<D>, BoxError> {
    match datum {
        DatumSpec::Builtin(d) => Ok(init_field(grid, d)?),
        DatumSpec::File(path) => Ok(output::read_field_csv(path, grid).map_err(Error::InvalidDatum)?),
    }
}

fn steady_profile<const D: usize>(spec: ReferenceSpec, grid: Grid<D>) -> Result<Option<Field<D>>, BoxError> {
    let field = match spec {
        ReferenceSpec::LfpSteady => Field::from_fn(grid, |x| {
            if D == 1 {
                lfp_steady_1d(x[0])
            } else {
                lfp_steady_2d(x[0], x[1])
            }
        })?,
        ReferenceSpec::GaussianSteady => Field::from_fn(grid, |x| {
            gaussian_steady(D, x.iter().map(|c| c * c).sum::<f64>().sqrt())
        })?,
        ReferenceSpec::None | ReferenceSpec::HeatKernel => return Ok(None),
    };
    Ok(Some(field))
}

fn drive<const D: usize, S: Stepper<D>>(
    scheme: &S,
    config: &RunConfig,
    state: Field<D>,
) -> Result<RunOutcome<D>, BoxError> {
    let steady = steady_profile(config.reference, *state.grid())?;
    let monitor = Monitor {
        reference: steady.clone(),
        steady,
        stride: config.stride,
    };
    Ok(match config.horizon {
        Horizon::Final(t) => evolve::run(scheme, state, t, &monitor, &config.snapshots)?,
        Horizon::Steady { tol, t_max } => {
            evolve::run_to_steady(scheme, state, tol, t_max, &monitor, &config.snapshots)?
        }
    })
}

fn report<const D: usize>(config: &RunConfig, outcome: &RunOutcome<D>) -> Result<Summary, BoxError> {
    let dir = &config.output;
    emit_csv(CsvContent::Field(&outcome.field), &dir.join("field.csv"))?;
    emit_csv::<D>(
        CsvContent::Diagnostics(&outcome.diagnostics),
        &dir.join("diagnostics.csv"),
    )?;
    for (k, (_, snap)) in outcome.snapshots.iter().enumerate() {
        emit_csv(CsvContent::Field(snap), &dir.join(format!("snapshot-{k}.csv")))?;
    }
    let mut summary = Summary::new("run");
    summary.param("dimension", config.dimension);
    summary.param("alpha", config.alpha);
    summary.param("beta", config.beta);
    summary.param("R", config.half_width);
    summary.param("N", config.cells);
    summary.param("dt", config.dt);
    summary.metric("time", outcome.time);
    summary.metric("steps", outcome.steps as f64);
    summary.metric("mass", outcome.field.mass());
    summary.metric("mass_drift", outcome.diagnostics.mass_drift());
    if let Some(last) = outcome.diagnostics.rows.last() {
        summary.metric("residual", last.residual);
        if last.l1.is_finite() {
            summary.metric("l1", last.l1);
            summary.metric("l2", last.l2);
        }
    }
    if config.reference == ReferenceSpec::HeatKernel {
        let t0 = match config.datum {
            DatumSpec::Builtin(Datum::HeatKernelAt(t0)) => t0,
            _ => 0.0,
        };
        let t = t0 + outcome.time;
        let exact =
            |x: [f64; D]| heat_kernel_alpha1(D, t, x.iter().map(|c| c * c).sum::<f64>().sqrt()).unwrap_or(f64::NAN);
        summary.metric(
            "l1",
            lp_distance(&outcome.field, &Reference::Function(&exact), 1.0, None)?,
        );
        summary.metric(
            "l2",
            lp_distance(&outcome.field, &Reference::Function(&exact), 2.0, None)?,
        );
    }
    if let Some(info) = outcome.steady {
        summary.metric("converged", if info.converged { 1.0 } else { 0.0 });
        summary.check(
            "steady residual below tolerance",
            info.residual,
            "converged",
            info.converged,
        );
    }
    summary.write(dir)?;
    Ok(summary)
}

/// Executes a validated configuration and writes its artifacts.
pub fn run_config(config: &RunConfig) -> Result<Summary, BoxError> {
    with_threads(config.threads, || -> Result<Summary, BoxError> {
        if config.dimension == 1 {
            let grid = Grid::<1>::new(config.half_width, config.cells)?;
            let scheme = Scheme1D::new(
                &grid,
                SchemeConfig1D {
                    alpha: config.alpha,
                    beta: config.beta,
                    dt: config.dt,
                    flux_order: config.flux_order,
                },
            )?;
            let state = initial_field(grid, &config.datum)?;
            let outcome = drive(&scheme, config, state)?;
            report(config, &outcome)
        } else {
            let grid = Grid::<2>::new(config.half_width, config.cells)?;
            let scheme = Scheme2D::new(
                &grid,
                SchemeConfig2D {
                    alpha: config.alpha,
                    beta: config.beta,
                    dt: config.dt,
                },
            )?;
            let state = initial_field(grid, &config.datum)?;
            let outcome = drive(&scheme, config, state)?;
            report(config, &outcome)
        }
    })?
}

/// Default artifact directory of an experiment.
pub fn default_output(name: &str) -> PathBuf {
    PathBuf::from("out").join(name)
}
