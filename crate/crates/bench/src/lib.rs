//! Shared fixtures for the kernel benchmarks.

use sixfilm_core::{validate_params, GridField, ModelParams, PeriodicGrid, RawParams};

/// Smooth positive film `1 + 0.3 sin(2 pi x) + 0.05 cos(6 pi x)` on `n` nodes.
pub fn smooth_film(n: usize) -> GridField {
    let grid = PeriodicGrid::new(n).expect("bench grid size is valid");
    grid.sample(|x| {
        let a = 2.0 * std::f64::consts::PI * x;
        1.0 + 0.3 * a.sin() + 0.05 * (3.0 * a).cos()
    })
}

/// Bending-only parameters (`beta = 12`, no viscoelastic term).
pub fn elastic_params() -> ModelParams {
    validate_params(RawParams::new(12.0, 0.0, 1.0)).expect("valid parameters")
}

/// Viscoelastic parameters (`beta = delta = 12`, `r = 3`).
pub fn viscoelastic_params() -> ModelParams {
    validate_params(RawParams::new(12.0, 12.0, 3.0)).expect("valid parameters")
}

/// A short relaxing trajectory, dense enough in time for the residual harness.
pub fn short_trajectory(n: usize) -> (sixfilm_core::Trajectory, ModelParams) {
    use sixfilm_core::{solver, Expr, InitialSpec, RunConfig, Scheme};
    let params = elastic_params();
    let cfg = RunConfig {
        grid: PeriodicGrid::new(n).expect("bench grid size is valid"),
        params: params.clone(),
        dt0: 5e-9,
        t_end: 2e-6,
        scheme: Scheme::Bdf2,
        output_every: 1,
        initial: InitialSpec::Expr(Expr::parse("1 + 0.3*sin(2*pi*x)").expect("literal parses")),
    };
    (
        solver::run(&cfg).expect("bench trajectory integrates"),
        params,
    )
}
