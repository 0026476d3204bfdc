//! Time integration of the sixth-order thin-film equation
//!
//! ```text
//! dh/dt = d/dx( h^3 ( (beta/12) h_xxxxx - chi (delta/12) d^3/dx^3 dh/dt - Phi ) )
//! ```
//!
//! written in pressure form as `dh/dt = d/dx(G)`, `G = h^3 (p_x / 12 - Phi)`,
//! `p = beta h_xxxx - chi delta (dh/dt)_xx`.

mod run;
mod stepper;
mod wdot;

pub use run::{run, run_partial, run_with_potential, Snapshot, Trajectory};
pub use stepper::{step, Proposal, Stepper};
pub use wdot::{implicit_wdot_solve, solve_wdot, WdotOperator, WdotSolve};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::params::ModelParams;
use crate::spectral::Spectral;

/// Film height at one instant of rescaled time.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmState {
    pub t: f64,
    pub h: GridField,
}

impl FilmState {
    pub fn new(t: f64, h: GridField) -> Self {
        Self { t, h }
    }
}

/// `p = beta h_xxxx - chi delta w_xx` with `w = dh/dt`.
pub fn pressure_of(
    h: &GridField,
    wdot: Option<&GridField>,
    params: &ModelParams,
) -> Result<GridField> {
    pressure_with(&Spectral::new(h.grid()), h, wdot, params)
}

pub fn pressure_with(
    spectral: &Spectral,
    h: &GridField,
    wdot: Option<&GridField>,
    params: &ModelParams,
) -> Result<GridField> {
    let bending = spectral.deriv(h, 4)?.scale(params.beta());
    if !params.chi() {
        return Ok(bending);
    }
    let w = wdot.ok_or(Error::MissingRate)?;
    Ok(bending.lincomb(1.0, &spectral.deriv(w, 2)?, -params.delta()))
}

/// `G = h^3 (p_x / 12 - Phi)`, truncated by the 2/3 rule, so that `dh/dt = dG/dx`.
pub fn flux_of(h: &GridField, p: &GridField, phi: &GridField) -> GridField {
    flux_with(&Spectral::new(h.grid()), h, p, phi)
}

pub fn flux_with(spectral: &Spectral, h: &GridField, p: &GridField, phi: &GridField) -> GridField {
    let px = spectral.apply(p, |idx| spectral.symbol(1, idx));
    let g: Vec<f64> = h
        .values()
        .iter()
        .zip(px.values())
        .zip(phi.values())
        .map(|((&h, &px), &phi)| h * h * h * (px / 12.0 - phi))
        .collect();
    spectral.dealias(&GridField::from_raw(h.grid(), g))
}

/// Linear growth rate of mode `k` about a flat film of height `hbar`.
pub fn dispersion_rate(k: f64, hbar: f64, params: &ModelParams) -> f64 {
    let h3 = hbar.powi(3);
    let num = params.beta() / 12.0 * h3 * k.powi(6);
    let den = 1.0 + params.chi_delta() / 12.0 * h3 * k.powi(4);
    -num / den
}
