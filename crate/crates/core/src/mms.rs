//! Manufactured solutions and convergence studies.
//!
//! The manufactured film is `h = 1 + a(t) sin(2 pi x)` with
//! `a(t) = a0 + a1 sin(2 pi t / period)`. The potential
//!
//! ```text
//! Phi = (beta/12) h_xxxxx - chi (delta/12) w_xxx + a'(t) cos(2 pi x) / (2 pi h^3),   w = h_t
//! ```
//!
//! makes it an exact solution, and the flux it produces is band-limited, so the
//! discrete error is purely temporal.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forcing::{FnPotential, Potential};
use crate::grid::{GridField, PeriodicGrid};
use crate::params::{InitialSpec, ModelParams, RunConfig, Scheme};
use crate::solver::run_with_potential;
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedFilm {
    pub a0: f64,
    pub a1: f64,
    pub period: f64,
}

impl Default for ManufacturedFilm {
    fn default() -> Self {
        Self {
            a0: 0.2,
            a1: 0.1,
            period: 1e-3,
        }
    }
}

impl ManufacturedFilm {
    pub fn amplitude(&self, t: f64) -> f64 {
        self.a0 + self.a1 * (2.0 * PI * t / self.period).sin()
    }

    pub fn amplitude_dt(&self, t: f64) -> f64 {
        self.a1 * 2.0 * PI / self.period * (2.0 * PI * t / self.period).cos()
    }

    pub fn exact(&self, grid: PeriodicGrid, t: f64) -> GridField {
        let a = self.amplitude(t);
        grid.sample(|x| 1.0 + a * (2.0 * PI * x).sin())
    }

    pub fn phi(&self, x: f64, t: f64, params: &ModelParams) -> f64 {
        let k = 2.0 * PI;
        let (a, ad) = (self.amplitude(t), self.amplitude_dt(t));
        let c = (k * x).cos();
        let h = 1.0 + a * (k * x).sin();
        // h_xxxxx = a k^5 cos, w_xxx = -a' k^3 cos
        params.beta() / 12.0 * a * k.powi(5) * c
            + params.chi_delta() / 12.0 * ad * k.powi(3) * c
            + ad * c / (k * h * h * h)
    }

    pub fn potential(&self, params: &ModelParams) -> Arc<dyn Potential> {
        let me = *self;
        let params = params.clone();
        Arc::new(FnPotential::new(move |x, t| me.phi(x, t, &params), false))
    }

    fn initial(&self) -> Result<InitialSpec> {
        Ok(InitialSpec::Expr(Expr::parse(&format!(
            "1 + {:.17e}*sin(2*pi*x)",
            self.amplitude(0.0)
        ))?))
    }
}

/// One level of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    /// Step size or node count.
    pub resolution: f64,
    pub error: f64,
}

/// `log2(e_i / e_{i+1})` between consecutive levels (halved step or doubled `n`).
pub fn observed_orders(points: &[ConvergencePoint]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (w[0].resolution / w[1].resolution).ln().abs())
        .collect()
}

fn fixed_step_config(
    grid: PeriodicGrid,
    params: &ModelParams,
    scheme: Scheme,
    dt: f64,
    t_end: f64,
    initial: InitialSpec,
) -> RunConfig {
    RunConfig {
        grid,
        params: params.clone(),
        dt0: dt,
        t_end,
        scheme,
        output_every: usize::MAX,
        initial,
    }
}

/// Max-norm error against the manufactured solution at `t_end`, per step size.
pub fn temporal_study(
    film: &ManufacturedFilm,
    params: &ModelParams,
    scheme: Scheme,
    n: usize,
    t_end: f64,
    dts: &[f64],
) -> Result<Vec<ConvergencePoint>> {
    let grid = PeriodicGrid::new(n)?;
    let exact = film.exact(grid, t_end);
    dts.iter()
        .map(|&dt| {
            let cfg = fixed_step_config(grid, params, scheme, dt, t_end, film.initial()?);
            let (traj, err) = run_with_potential(&cfg, film.potential(params));
            if let Some(e) = err {
                return Err(e);
            }
            if traj.rejected_steps > 0 {
                return Err(Error::InvalidParam(format!(
                    "step dt = {dt} was rejected; not a fixed-step run"
                )));
            }
            let h = &traj.final_snapshot().expect("run stores a final state").h;
            Ok(ConvergencePoint {
                resolution: dt,
                error: h.sub(&exact).max_abs(),
            })
        })
        .collect()
}

/// Without a closed-form solution: differences between successive halvings.
/// `points[i].error = |h_{dt_i} - h_{dt_{i+1}}|`, so `dts.len() - 1` points.
pub fn self_convergence(config: &RunConfig, dts: &[f64]) -> Result<Vec<ConvergencePoint>> {
    let finals = dts
        .iter()
        .map(|&dt| {
            let cfg = fixed_step_config(
                config.grid,
                &config.params,
                config.scheme,
                dt,
                config.t_end,
                config.initial.clone(),
            );
            let traj = crate::solver::run(&cfg)?;
            Ok(traj
                .final_snapshot()
                .expect("run stores a final state")
                .h
                .clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finals
        .windows(2)
        .zip(dts)
        .map(|(w, &dt)| ConvergencePoint {
            resolution: dt,
            error: w[0].sub(&w[1]).max_abs(),
        })
        .collect())
}

/// Max-norm error of the `order`-th spectral derivative of `exp(sin 2 pi x)`.
pub fn spatial_study(ns: &[usize], order: u32) -> Result<Vec<ConvergencePoint>> {
    ns.iter()
        .map(|&n| {
            let grid = PeriodicGrid::new(n)?;
            let f = grid.sample(|x| (2.0 * PI * x).sin().exp());
            let d = Spectral::new(grid).deriv(&f, order)?;
            let exact = grid.sample(|x| exp_sin_deriv(x, order));
            Ok(ConvergencePoint {
                resolution: n as f64,
                error: d.sub(&exact).max_abs(),
            })
        })
        .collect()
}

/// Closed-form derivatives of `exp(sin(k x))`, `k = 2 pi`, up to order 3.
pub fn exp_sin_deriv(x: f64, order: u32) -> f64 {
    let k = 2.0 * PI;
    let (s, c) = (k * x).sin_cos();
    let e = s.exp();
    match order {
        0 => e,
        1 => k * c * e,
        2 => k * k * (c * c - s) * e,
        3 => k.powi(3) * c * (c * c - 3.0 * s - 1.0) * e,
        _ => f64::NAN,
    }
}
