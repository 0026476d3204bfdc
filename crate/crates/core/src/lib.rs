//! Solver and verification toolkit for the sixth-order thin-film equation
//!
//! ```text
//! dh/dt = d/dx( h^3 ( (beta/12) h_xxxxx - chi (delta/12) d^3/dx^3 dh/dt - Phi ) )
//! ```
//!
//! on the periodic unit interval, the reduced model of a thin viscous layer
//! under an elastic (optionally viscoelastic) plate.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvio;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod forcing;
pub mod grid;
pub mod mms;
pub mod params;
pub mod quadrature;
pub mod reconstruct;
pub mod residual;
pub mod scaling;
pub mod solver;
pub mod spectral;

pub use config::{load_physical, load_run_config, parse_run_config};
pub use diagnostics::DiagnosticsRecord;
pub use error::{Error, Result};
pub use expr::Expr;
pub use forcing::{eval_F, eval_Phi, FnPotential, ForcingSpec, Potential};
pub use grid::{GridField, PeriodicGrid};
pub use params::{validate_params, InitialSpec, ModelParams, RawParams, RunConfig, Scheme};
pub use quadrature::{quad_unit_interval, GaussLegendre};
pub use reconstruct::{limit_velocity, LimitFields, PlaneField};
pub use residual::{
    eps_sweep_slopes, HarnessParams, PreparedWindow, SweepTable, Term, TermBreakdown,
    TestFunctionPair,
};
pub use scaling::{
    bending_stiffness, dimensionless_numbers, length_scale, DimensionlessGroups, PhysicalParams,
};
pub use solver::{dispersion_rate, flux_of, pressure_of, FilmState, Snapshot, Stepper, Trajectory};
pub use spectral::{deriv_x, flux_divergence, mean_integral, Spectral};
