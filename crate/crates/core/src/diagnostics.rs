//! Structural monitors: mass, positivity, the entropy (Lyapunov) functional and
//! the bending energy, together with a-posteriori residuals of their balance laws
//!
//! ```text
//! dL/dt + beta int h_xxx^2                                   = 12 int Phi h_x
//! d/dt (beta/2) int h_xx^2 + chi delta int w_x^2 + (1/12) int h^3 p_x^2 = int h^3 Phi p_x
//! ```
//!
//! with `L = int 6/h + chi (delta/2) int h_xx^2` and `w = dh/dt`.

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::params::ModelParams;
use crate::spectral::{mean_integral, Spectral};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Step that produced this record; zero for the initial state.
    pub dt: f64,
    pub mass: f64,
    pub min_h: f64,
    pub lyapunov: f64,
    /// `(beta/2) int h_xx^2`
    pub energy: f64,
    /// `beta int h_xxx^2`
    pub dissipation: f64,
    /// `12 int Phi h_x`
    pub forcing_power: f64,
    /// `chi delta int w_x^2`; unknown when the rate was not stored.
    pub visco_dissipation: Option<f64>,
    /// `(1/12) int h^3 p_x^2`
    pub pressure_dissipation: f64,
    /// `int h^3 Phi p_x`
    pub pressure_work: f64,
}

impl DiagnosticsRecord {
    /// Evaluates every functional from nodal fields. `w` is required only for the
    /// viscoelastic dissipation when that term is active.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fields(
        spectral: &Spectral,
        t: f64,
        dt: f64,
        h: &GridField,
        p: &GridField,
        w: Option<&GridField>,
        phi: &GridField,
        params: &ModelParams,
    ) -> Result<Self> {
        let (node, min_h) = h.argmin();
        if min_h <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "diagnostics need positive h; h = {min_h} at node {node}"
            )));
        }
        let d = spectral.derivs(h, &[1, 2, 3]);
        let (hx, hxx, hxxx) = (&d[0], &d[1], &d[2]);
        let beta = params.beta();
        let curv = mean_integral(&hxx.mul(hxx));
        let inv = mean_integral(&h.map(|v| 6.0 / v));
        let lyapunov = inv + params.chi_delta() / 2.0 * curv;
        let px = spectral.deriv(p, 1)?;
        let h3 = h.map(|v| v * v * v);
        let visco_dissipation = if params.chi() {
            match w {
                Some(w) => {
                    let wx = spectral.deriv(w, 1)?;
                    Some(params.delta() * mean_integral(&wx.mul(&wx)))
                }
                None => None,
            }
        } else {
            Some(0.0)
        };
        Ok(Self {
            t,
            dt,
            mass: mean_integral(h),
            min_h,
            lyapunov,
            energy: beta / 2.0 * curv,
            dissipation: beta * mean_integral(&hxxx.mul(hxxx)),
            forcing_power: 12.0 * mean_integral(&phi.mul(hx)),
            visco_dissipation,
            pressure_dissipation: mean_integral(&h3.mul(&px).mul(&px)) / 12.0,
            pressure_work: mean_integral(&h3.mul(phi).mul(&px)),
        })
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mass,
            self.min_h,
            self.lyapunov,
            self.energy,
            self.dissipation,
            self.forcing_power,
            self.pressure_dissipation,
            self.pressure_work,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.visco_dissipation.is_none_or(f64::is_finite)
    }
}

pub fn mass(h: &GridField) -> f64 {
    mean_integral(h)
}

pub fn min_height(h: &GridField) -> f64 {
    h.min()
}

/// `L = int 6/h + chi (delta/2) int h_xx^2`.
pub fn lyapunov(h: &GridField, params: &ModelParams) -> Result<f64> {
    let (node, min_h) = h.argmin();
    if min_h <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "lyapunov functional needs positive h; h = {min_h} at node {node}"
        )));
    }
    let inv = mean_integral(&h.map(|v| 6.0 / v));
    if !params.chi() {
        return Ok(inv);
    }
    let hxx = Spectral::new(h.grid()).deriv(h, 2)?;
    Ok(inv + params.delta() / 2.0 * mean_integral(&hxx.mul(&hxx)))
}

/// Index of the middle record after checking the window is uniform in time.
fn window_middle(window: &[DiagnosticsRecord]) -> Result<(usize, f64)> {
    if window.len() < 3 {
        return Err(Error::Window(format!(
            "need at least 3 records, got {}",
            window.len()
        )));
    }
    let dt = window[1].t - window[0].t;
    if !(dt > 0.0) {
        return Err(Error::Window("record times must increase".into()));
    }
    for pair in window.windows(2) {
        let step = pair[1].t - pair[0].t;
        if (step - dt).abs() > 1e-9 * dt {
            return Err(Error::Window(format!(
                "non-uniform spacing: {step:e} vs {dt:e} at t = {}",
                pair[0].t
            )));
        }
    }
    Ok((window.len() / 2, dt))
}

/// `|dL/dt + dissipation - forcing_power|` at the middle record, central difference in time.
pub fn entropy_balance_residual(window: &[DiagnosticsRecord]) -> Result<f64> {
    let (i, dt) = window_middle(window)?;
    let dl = (window[i + 1].lyapunov - window[i - 1].lyapunov) / (2.0 * dt);
    Ok((dl + window[i].dissipation - window[i].forcing_power).abs())
}

/// Residual of the bending-energy balance at the middle record.
pub fn energy_balance_residual(window: &[DiagnosticsRecord], params: &ModelParams) -> Result<f64> {
    let (i, dt) = window_middle(window)?;
    let visco = match window[i].visco_dissipation {
        Some(v) => v,
        None if params.chi() => return Err(Error::MissingRate),
        None => 0.0,
    };
    let de = (window[i + 1].energy - window[i - 1].energy) / (2.0 * dt);
    Ok((de + visco + window[i].pressure_dissipation - window[i].pressure_work).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::params::{validate_params, RawParams};
    use std::f64::consts::PI;

    fn p(beta: f64, delta: f64, r: f64) -> ModelParams {
        validate_params(RawParams::new(beta, delta, r)).unwrap()
    }

    #[test]
    fn mass_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        assert!((mass(&g.constant(2.0)) - 2.0).abs() < 1e-15);
        assert!((mass(&g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x).sin())) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        assert!((lyapunov(&g.constant(2.0), &p(12.0, 0.0, 1.0)).unwrap() - 3.0).abs() < 1e-14);
        assert!((lyapunov(&g.constant(1.0), &p(12.0, 12.0, 3.0)).unwrap() - 6.0).abs() < 1e-12);
        assert!(lyapunov(&g.constant(-1.0), &p(12.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn lyapunov_matches_refined_quadrature() {
        // 6 int 1/(1 + a sin) = 6 / sqrt(1 - a^2)
        let g = PeriodicGrid::new(128).unwrap();
        let h = g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x).sin());
        let want = 6.0 / (1.0f64 - 0.25).sqrt();
        assert!((lyapunov(&h, &p(12.0, 0.0, 1.0)).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn min_height_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        let m = min_height(&g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x).sin()));
        assert!((0.5..=0.51).contains(&m));
        assert_eq!(min_height(&g.constant(0.7)), 0.7);
    }

    fn steady_window(n: usize) -> Vec<DiagnosticsRecord> {
        let g = PeriodicGrid::new(16).unwrap();
        let s = Spectral::new(g);
        let params = p(12.0, 12.0, 3.0);
        let h = g.constant(1.0);
        (0..n)
            .map(|i| {
                DiagnosticsRecord::from_fields(
                    &s,
                    i as f64 * 0.1,
                    0.1,
                    &h,
                    &g.zeros(),
                    Some(&g.zeros()),
                    &g.zeros(),
                    &params,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn steady_balances_vanish() {
        let w = steady_window(3);
        assert_eq!(entropy_balance_residual(&w).unwrap(), 0.0);
        assert_eq!(
            energy_balance_residual(&w, &p(12.0, 12.0, 3.0)).unwrap(),
            0.0
        );
        assert!(w.iter().all(DiagnosticsRecord::is_finite));
    }

    #[test]
    fn window_checks() {
        let w = steady_window(3);
        assert!(matches!(
            entropy_balance_residual(&w[..2]),
            Err(Error::Window(_))
        ));
        let mut skewed = w.clone();
        skewed[2].t = 0.25;
        assert!(entropy_balance_residual(&skewed).is_err());
        let mut no_rate = w;
        no_rate[1].visco_dissipation = None;
        assert!(matches!(
            energy_balance_residual(&no_rate, &p(12.0, 12.0, 3.0)),
            Err(Error::MissingRate)
        ));
    }
}
