//! Adaptive driver: halve on failure, grow after a run of clean steps.

use std::sync::Arc;

use super::stepper::Stepper;
use super::{pressure_with, FilmState};
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::forcing::Potential;
use crate::grid::GridField;
use crate::params::RunConfig;
use crate::spectral::Spectral;

const GROWTH: f64 = 1.2;
const CLEAN_STEPS_BEFORE_GROWTH: usize = 10;
const UNDERFLOW: f64 = 1e-8;

/// Stored state with its pressure and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub h: GridField,
    pub p: GridField,
    /// `dh/dt` from the step that produced this state (the bootstrap solve at `t = 0`).
    pub w: Option<GridField>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// One record per accepted step, plus the initial state.
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub config: RunConfig,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last_time(&self) -> f64 {
        self.diagnostics.last().map_or(0.0, |d| d.t)
    }

    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

pub fn run(config: &RunConfig) -> Result<Trajectory> {
    match run_partial(config) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`run`], but hands back everything accepted before a failure.
pub fn run_partial(config: &RunConfig) -> (Trajectory, Option<Error>) {
    let potential: Arc<dyn Potential> = Arc::new(config.params.forcing().clone());
    run_with_potential(config, potential)
}

/// Runs with an arbitrary potential in place of the one derived from `f1`.
pub fn run_with_potential(
    config: &RunConfig,
    potential: Arc<dyn Potential>,
) -> (Trajectory, Option<Error>) {
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        config: config.clone(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let err = drive(config, potential, &mut traj).err();
    (traj, err)
}

fn record(
    stepper: &Stepper,
    t: f64,
    dt: f64,
    h: &GridField,
    w: &GridField,
) -> Result<(DiagnosticsRecord, GridField)> {
    let s = stepper.spectral();
    let params = stepper.params();
    let p = pressure_with(s, h, Some(w), params)?;
    let phi = stepper.phi_at(t)?;
    let rec = DiagnosticsRecord::from_fields(s, t, dt, h, &p, Some(w), &phi, params)?;
    Ok((rec, p))
}

fn drive(config: &RunConfig, potential: Arc<dyn Potential>, traj: &mut Trajectory) -> Result<()> {
    config.validate()?;
    let params = &config.params;
    let spectral = Spectral::new(config.grid);
    let h0 = spectral.dealias(&config.initial.evaluate(config.grid)?);
    let (node, value) = h0.argmin();
    if value <= params.h_floor() {
        return Err(Error::PositivityViolation {
            node,
            t: 0.0,
            value,
        });
    }
    let mut stepper = Stepper::with_potential(spectral, params.clone(), config.scheme, potential)?;
    let mut state = FilmState::new(0.0, h0);
    let w0 = stepper.initial_rate(&state)?;
    let (rec, p) = record(&stepper, 0.0, 0.0, &state.h, &w0)?;
    traj.diagnostics.push(rec);
    traj.snapshots.push(Snapshot {
        t: 0.0,
        h: state.h.clone(),
        p,
        w: Some(w0),
    });

    let t_end = config.t_end;
    let dt_min = config.dt0 * UNDERFLOW;
    let mut dt = config.dt0;
    let mut clean = 0;
    while state.t < t_end {
        let remaining = t_end - state.t;
        let last = dt >= remaining * (1.0 - 1e-6);
        let dt_try = if last { remaining } else { dt };
        match stepper.propose(&state, dt_try) {
            Ok(mut prop) => {
                if last {
                    prop.state.t = t_end;
                }
                stepper.accept(&state, &prop);
                traj.accepted_steps += 1;
                let (rec, p) = record(&stepper, prop.state.t, dt_try, &prop.state.h, &prop.w)?;
                traj.diagnostics.push(rec);
                state = prop.state;
                let due = traj.accepted_steps.is_multiple_of(config.output_every);
                if due || last {
                    traj.snapshots.push(Snapshot {
                        t: state.t,
                        h: state.h.clone(),
                        p,
                        w: Some(prop.w),
                    });
                }
                clean += 1;
                if clean >= CLEAN_STEPS_BEFORE_GROWTH {
                    dt = (dt * GROWTH).min(config.dt0);
                    clean = 0;
                }
                if last {
                    break;
                }
            }
            Err(
                e @ (Error::PositivityViolation { .. }
                | Error::NonFinite { .. }
                | Error::InnerDivergence { .. }),
            ) => {
                traj.rejected_steps += 1;
                clean = 0;
                dt = dt_try / 2.0;
                if dt < dt_min {
                    return Err(match e {
                        Error::PositivityViolation { .. } => e,
                        other => Error::UnrecoverableStep {
                            t: state.t,
                            dt,
                            reason: other.to_string(),
                            diagnostics: Box::new(traj.diagnostics.clone()),
                        },
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::grid::PeriodicGrid;
    use crate::params::{validate_params, InitialSpec, RawParams, Scheme};
    use std::f64::consts::PI;

    fn config(h0: &str, n: usize, t_end: f64, dt0: f64) -> RunConfig {
        RunConfig {
            grid: PeriodicGrid::new(n).unwrap(),
            params: validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap(),
            dt0,
            t_end,
            scheme: Scheme::Bdf2,
            output_every: 5,
            initial: InitialSpec::Expr(Expr::parse(h0).unwrap()),
        }
    }

    #[test]
    fn flat_film_stays_put() {
        let traj = run(&config("1", 16, 1e-3, 1e-4)).unwrap();
        assert_eq!(traj.accepted_steps, 10);
        let first = &traj.snapshots[0].h;
        for s in &traj.snapshots {
            assert!(s.h.sub(first).max_abs() < 1e-15);
        }
        assert!((traj.last_time() - 1e-3).abs() < 1e-18);
        assert!(traj
            .diagnostics
            .iter()
            .all(|d| (d.mass - 1.0).abs() < 1e-15));
    }

    #[test]
    fn snapshots_follow_cadence_and_land_on_end() {
        let traj = run(&config("1 + 0.1*sin(2*pi*x)", 32, 12e-6, 1e-6)).unwrap();
        let ts: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts.len(), 4);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*ts.last().unwrap(), 12e-6);
    }

    #[test]
    fn decay_flattens_profile() {
        let traj = run(&config("1 + 0.3*sin(2*pi*x)", 32, 2e-4, 2e-6)).unwrap();
        let h = &traj.final_snapshot().unwrap().h;
        let amp0 = 0.3;
        let amp = (h.max() - h.min()) / 2.0;
        let rate = (2.0 * PI).powi(6);
        // linear estimate exp(-rate t) is an upper bound for this moderate amplitude
        assert!(amp < amp0 * (-0.5 * rate * 2e-4).exp());
    }
}
