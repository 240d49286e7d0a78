//! Time-stepping drivers shared by the 1D and 2D schemes.

use crate::analysis::{Diagnostics, Monitor};
use crate::error::{Error, Result};
use crate::mesh::{Field, Grid};

/// A fixed-step time integrator.
pub trait Stepper<const D: usize> {
    fn grid(&self) -> &Grid<D>;
    fn dt(&self) -> f64;
    fn step(&self, state: &Field<D>) -> Result<Field<D>>;
}

/// How a steady-state run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyInfo {
    /// `true` if the residual fell below the tolerance, `false` if `t_max` was hit.
    pub converged: bool,
    pub residual: f64,
    pub time: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome<const D: usize> {
    pub field: Field<D>,
    pub time: f64,
    pub steps: usize,
    pub diagnostics: Diagnostics,
    pub snapshots: Vec<(f64, Field<D>)>,
    pub steady: Option<SteadyInfo>,
}

/// `sum |new - old| dx^D / dt`.
pub fn steady_residual<const D: usize>(old: &Field<D>, new: &Field<D>, dt: f64) -> f64 {
    let diff: f64 = old.values().iter().zip(new.values()).map(|(a, b)| (a - b).abs()).sum();
    diff * old.grid().cell_volume() / dt
}

/// Number of fixed steps that reach `t` (the last step may overshoot by
/// at most one round-off sized fraction of `dt`).
pub fn steps_for(t: f64, dt: f64) -> usize {
    if t <= 0.0 {
        return 0;
    }
    let n = t / dt;
    let nearest = n.round();
    if (n - nearest).abs() <= 1e-9 * n.max(1.0) {
        nearest as usize
    } else {
        n.ceil() as usize
    }
}

struct Recorder<'a, const D: usize> {
    monitor: &'a Monitor<D>,
    snapshot_times: Vec<f64>,
    next_snapshot: usize,
    diagnostics: Diagnostics,
    snapshots: Vec<(f64, Field<D>)>,
}

impl<'a, const D: usize> Recorder<'a, D> {
    fn new(monitor: &'a Monitor<D>, snapshot_times: &[f64], initial: &Field<D>) -> Result<Self> {
        let mut times = snapshot_times.to_vec();
        times.sort_by(f64::total_cmp);
        let mut rec = Self {
            monitor,
            snapshot_times: times,
            next_snapshot: 0,
            diagnostics: Diagnostics::default(),
            snapshots: Vec::new(),
        };
        rec.diagnostics.rows.push(monitor.row(0.0, initial, f64::NAN)?);
        rec.snapshot(0.0, initial, 0.0);
        Ok(rec)
    }

    fn snapshot(&mut self, t: f64, field: &Field<D>, dt: f64) {
        while self.next_snapshot < self.snapshot_times.len()
            && self.snapshot_times[self.next_snapshot] <= t + 1e-9 * dt.max(f64::MIN_POSITIVE)
        {
            self.snapshots.push((t, field.clone()));
            self.next_snapshot += 1;
        }
    }

    fn record(&mut self, step: usize, t: f64, field: &Field<D>, residual: f64, dt: f64, last: bool) -> Result<()> {
        let stride = self.monitor.stride.max(1);
        if last || step.is_multiple_of(stride) {
            self.diagnostics.rows.push(self.monitor.row(t, field, residual)?);
        }
        self.snapshot(t, field, dt);
        Ok(())
    }
}

/// Steps to `t_final`, recording diagnostics and the requested snapshots.
pub fn run<const D: usize, S: Stepper<D>>(
    stepper: &S,
    state: Field<D>,
    t_final: f64,
    monitor: &Monitor<D>,
    snapshot_times: &[f64],
) -> Result<RunOutcome<D>> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_final must be non-negative, got {t_final}"
        )));
    }
    check_grid(stepper, &state)?;
    let dt = stepper.dt();
    let n = steps_for(t_final, dt);
    let mut rec = Recorder::new(monitor, snapshot_times, &state)?;
    let mut field = state;
    for step in 1..=n {
        let next = stepper.step(&field)?;
        let residual = steady_residual(&field, &next, dt);
        field = next;
        rec.record(step, step as f64 * dt, &field, residual, dt, step == n)?;
    }
    Ok(RunOutcome {
        field,
        time: n as f64 * dt,
        steps: n,
        diagnostics: rec.diagnostics,
        snapshots: rec.snapshots,
        steady: None,
    })
}

/// Steps until the steady residual drops below `tol` or `t_max` is reached.
pub fn run_to_steady<const D: usize, S: Stepper<D>>(
    stepper: &S,
    state: Field<D>,
    tol: f64,
    t_max: f64,
    monitor: &Monitor<D>,
    snapshot_times: &[f64],
) -> Result<RunOutcome<D>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "steady tolerance must be positive, got {tol}"
        )));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    check_grid(stepper, &state)?;
    let dt = stepper.dt();
    let n_max = steps_for(t_max, dt).max(1);
    let mut rec = Recorder::new(monitor, snapshot_times, &state)?;
    let mut field = state;
    let mut residual = f64::INFINITY;
    let mut steps = 0;
    while steps < n_max {
        let next = stepper.step(&field)?;
        residual = steady_residual(&field, &next, dt);
        field = next;
        steps += 1;
        let done = residual < tol || steps == n_max;
        rec.record(steps, steps as f64 * dt, &field, residual, dt, done)?;
        if done {
            break;
        }
    }
    let converged = residual < tol;
    if !converged {
        log::warn!("no steady state within t_max = {t_max}: residual {residual:e} >= {tol:e}");
    }
    let time = steps as f64 * dt;
    Ok(RunOutcome {
        field,
        time,
        steps,
        diagnostics: rec.diagnostics,
        snapshots: rec.snapshots,
        steady: Some(SteadyInfo {
            converged,
            residual,
            time,
            steps,
        }),
    })
}

fn check_grid<const D: usize, S: Stepper<D>>(stepper: &S, state: &Field<D>) -> Result<()> {
    if stepper.grid() != state.grid() {
        return Err(Error::GridMismatch(format!(
            "state on {:?}, scheme on {:?}",
            state.grid(),
            stepper.grid()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_grid_1d;

    /// Relaxes every cell halfway towards 1 each step.
    struct Relax(Grid<1>);

    impl Stepper<1> for Relax {
        fn grid(&self) -> &Grid<1> {
            &self.0
        }
        fn dt(&self) -> f64 {
            0.1
        }
        fn step(&self, state: &Field<1>) -> Result<Field<1>> {
            Field::new(self.0, state.values().iter().map(|v| 0.5 * (v + 1.0)).collect())
        }
    }

    #[test]
    fn step_counts() {
        assert_eq!(steps_for(0.0, 0.1), 0);
        assert_eq!(steps_for(2.0, 0.1), 20);
        assert_eq!(steps_for(0.25, 0.1), 3);
    }

    #[test]
    fn zero_time_returns_input() {
        let g = build_grid_1d(1.0, 4).unwrap();
        let f = Field::zeros(g);
        let out = run(&Relax(g), f.clone(), 0.0, &Monitor::default(), &[]).unwrap();
        assert_eq!(out.field, f);
        assert_eq!(out.steps, 0);
        assert_eq!(out.diagnostics.rows.len(), 1);
    }

    #[test]
    fn snapshots_and_steady_stop() {
        let g = build_grid_1d(1.0, 4).unwrap();
        let out = run(&Relax(g), Field::zeros(g), 1.0, &Monitor::default(), &[0.0, 0.5, 0.55]).unwrap();
        assert_eq!(out.snapshots.len(), 3);
        assert!((out.snapshots[1].0 - 0.5).abs() < 1e-12);
        assert!((out.snapshots[2].0 - 0.6).abs() < 1e-12);
        assert_eq!(out.diagnostics.rows.len(), 11);

        let out = run_to_steady(&Relax(g), Field::zeros(g), 1e-6, 100.0, &Monitor::default(), &[]).unwrap();
        let info = out.steady.unwrap();
        assert!(info.converged && info.residual < 1e-6);
        let late = run_to_steady(&Relax(g), Field::zeros(g), 1e-6, 0.3, &Monitor::default(), &[]).unwrap();
        assert!(!late.steady.unwrap().converged);
        assert_eq!(late.steps, 3);

        let steady = Field::new(g, vec![1.0; 4]).unwrap();
        let out = run_to_steady(&Relax(g), steady, 1e-6, 100.0, &Monitor::default(), &[]).unwrap();
        assert_eq!(out.steps, 1);
    }
}
