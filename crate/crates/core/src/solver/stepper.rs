//! Single time steps.
//!
//! Without the mixed-derivative term the step is IMEX: the constant-coefficient
//! shell `-(beta/12) M d^6/dx^6`, `M = max h^3`, is implicit and diagonal in
//! Fourier space; the remainder of the nonlinear flux divergence is explicit.
//! With it, the velocity `w = dh/dt` at the new level is found from a linear
//! rate equation whose `h^3` coefficients are lagged and refreshed by fixed-point
//! iteration.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::wdot::solve_wdot;
use super::{flux_with, pressure_with, FilmState};
use crate::error::{Error, Result};
use crate::forcing::Potential;
use crate::grid::GridField;
use crate::params::{ModelParams, Scheme};
use crate::spectral::Spectral;

#[derive(Debug, Clone)]
struct History {
    h: GridField,
    /// Explicit flux divergence at `h` (IMEX branch only).
    n: Option<GridField>,
    dt: f64,
}

/// Outcome of a trial step; nothing is committed until [`Stepper::accept`].
#[derive(Debug, Clone)]
pub struct Proposal {
    pub state: FilmState,
    /// `dh/dt` at the new level.
    pub w: GridField,
    pub dt: f64,
    pub inner_iterations: usize,
    n_old: Option<GridField>,
}

/// Time stepper holding the BDF2 history and cached spectral data.
pub struct Stepper {
    spectral: Spectral,
    params: ModelParams,
    scheme: Scheme,
    potential: Arc<dyn Potential>,
    steady_phi: Option<GridField>,
    history: Option<History>,
    pressure_form: bool,
}

/// Variable-step BDF2 weights `(a0, a1, a2)` for `omega = dt_n / dt_{n-1}`.
fn bdf2_weights(omega: f64) -> (f64, f64, f64) {
    (
        (1.0 + 2.0 * omega) / (1.0 + omega),
        -(1.0 + omega),
        omega * omega / (1.0 + omega),
    )
}

impl Stepper {
    pub fn new(spectral: Spectral, params: ModelParams, scheme: Scheme) -> Result<Self> {
        let potential: Arc<dyn Potential> = Arc::new(params.forcing().clone());
        Self::with_potential(spectral, params, scheme, potential)
    }

    pub fn with_potential(
        spectral: Spectral,
        params: ModelParams,
        scheme: Scheme,
        potential: Arc<dyn Potential>,
    ) -> Result<Self> {
        let steady_phi = if potential.is_zero() {
            Some(spectral.grid().zeros())
        } else if potential.is_time_independent() {
            Some(potential.phi(spectral.grid(), 0.0)?)
        } else {
            None
        };
        Ok(Self {
            spectral,
            params,
            scheme,
            potential,
            steady_phi,
            history: None,
            pressure_form: false,
        })
    }

    /// Evaluate the explicit flux through `pressure_of` / `flux_of` instead of the
    /// expanded fifth derivative. Same discrete operators; used as a cross-check.
    pub fn with_pressure_form(mut self, on: bool) -> Self {
        self.pressure_form = on;
        self
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn reset(&mut self) {
        self.history = None;
    }

    pub fn phi_at(&self, t: f64) -> Result<GridField> {
        match &self.steady_phi {
            Some(phi) => Ok(phi.clone()),
            None => self.potential.phi(self.spectral.grid(), t),
        }
    }

    /// Projection onto the modes kept by the 2/3 rule.
    pub fn project(&self, h: &GridField) -> GridField {
        self.spectral.dealias(h)
    }

    /// `d/dx( h^3 ((beta/12) h_xxxxx - Phi) )`, dealiased.
    fn explicit_rate(&self, h: &GridField, phi: &GridField) -> Result<GridField> {
        let s = &self.spectral;
        let g = if self.pressure_form {
            let p = pressure_with(s, h, Some(&h.grid().zeros()), &self.params)?;
            flux_with(s, h, &p, phi)
        } else {
            let h5 = s.deriv(h, 5)?;
            let c = self.params.beta() / 12.0;
            let raw: Vec<f64> = h
                .values()
                .iter()
                .zip(h5.values())
                .zip(phi.values())
                .map(|((&h, &d5), &phi)| h * h * h * (c * d5 - phi))
                .collect();
            GridField::new(h.grid(), raw)?
        };
        Ok(s.dealiased_divergence(&g))
    }

    /// Rate `w = dh/dt` at `state` from the instantaneous relation. With the
    /// mixed-derivative term this is one linear solve; otherwise explicit.
    pub fn initial_rate(&self, state: &FilmState) -> Result<GridField> {
        let phi = self.phi_at(state.t)?;
        let rhs = self.explicit_rate(&state.h, &phi)?;
        if !self.params.chi() {
            return Ok(rhs);
        }
        let sol = solve_wdot(
            &self.spectral,
            &state.h,
            &rhs,
            self.params.delta() / 12.0,
            0.0,
            self.inner_tol(),
            self.params.max_inner_iters(),
            None,
        )?;
        Ok(self.spectral.dealias(&sol.w))
    }

    fn inner_tol(&self) -> f64 {
        self.params.newton_tol()
    }

    /// Trial step of size `dt` from `state`, using the stored history for BDF2.
    pub fn propose(&self, state: &FilmState, dt: f64) -> Result<Proposal> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParam(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let h = self.project(&state.h);
        let hist = match self.scheme {
            Scheme::Bdf2 => self.history.as_ref(),
            Scheme::Be => None,
        };
        let prop = if self.params.chi() {
            self.propose_rate_form(&h, state.t, dt, hist)?
        } else {
            self.propose_imex(&h, state.t, dt, hist)?
        };
        if let Some(node) = prop.state.h.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        let (node, value) = prop.state.h.argmin();
        if value <= self.params.h_floor() {
            return Err(Error::PositivityViolation {
                node,
                t: prop.state.t,
                value,
            });
        }
        Ok(prop)
    }

    /// Commits a proposal made from `prev`, updating the BDF2 history.
    pub fn accept(&mut self, prev: &FilmState, prop: &Proposal) {
        self.history = Some(History {
            h: self.project(&prev.h),
            n: prop.n_old.clone(),
            dt: prop.dt,
        });
    }

    fn propose_imex(
        &self,
        h: &GridField,
        t: f64,
        dt: f64,
        hist: Option<&History>,
    ) -> Result<Proposal> {
        let s = &self.spectral;
        let n = s.grid().n();
        let m = h.values().iter().map(|v| v * v * v).fold(0.0, f64::max);
        let shell = |idx: usize| -> f64 {
            if s.is_retained(idx) {
                self.params.beta() / 12.0 * m * s.wavenumber(idx).powi(6)
            } else {
                0.0
            }
        };
        let phi_old = self.phi_at(t)?;
        let n_old = self.explicit_rate(h, &phi_old)?;
        let h_hat = s.forward(h.values());

        let new_hat: Vec<Complex64> = match hist.and_then(|hs| hs.n.as_ref().map(|nn| (hs, nn))) {
            Some((hs, n_prev)) => {
                let omega = dt / hs.dt;
                let (a0, a1, a2) = bdf2_weights(omega);
                let nh = s.forward(n_old.values());
                let np = s.forward(n_prev.values());
                let hp = s.forward(hs.h.values());
                (0..n)
                    .map(|idx| {
                        if idx == 0 {
                            return h_hat[0];
                        }
                        let a = shell(idx);
                        let e_now = nh[idx] + h_hat[idx] * a;
                        let e_prev = np[idx] + hp[idx] * a;
                        let rhs = -h_hat[idx] * a1 - hp[idx] * a2
                            + (e_now * (1.0 + omega) - e_prev * omega) * dt;
                        rhs / (a0 + dt * a)
                    })
                    .collect()
            }
            None => {
                let nb = if self.steady_phi.is_some() {
                    s.forward(n_old.values())
                } else {
                    let phi_new = self.phi_at(t + dt)?;
                    s.forward(self.explicit_rate(h, &phi_new)?.values())
                };
                (0..n)
                    .map(|idx| {
                        if idx == 0 {
                            return h_hat[0];
                        }
                        let a = shell(idx);
                        (h_hat[idx] + (nb[idx] + h_hat[idx] * a) * dt) / (1.0 + dt * a)
                    })
                    .collect()
            }
        };
        let h_new = GridField::from_raw(h.grid(), s.inverse(new_hat));
        let w = match hist {
            Some(hs) if hs.n.is_some() => {
                let (a0, a1, a2) = bdf2_weights(dt / hs.dt);
                let raw: Vec<f64> = h_new
                    .values()
                    .iter()
                    .zip(h.values())
                    .zip(hs.h.values())
                    .map(|((&hn, &h0), &hp)| (a0 * hn + a1 * h0 + a2 * hp) / dt)
                    .collect();
                GridField::from_raw(h.grid(), raw)
            }
            _ => h_new.sub(h).scale(1.0 / dt),
        };
        Ok(Proposal {
            state: FilmState::new(t + dt, h_new),
            w,
            dt,
            inner_iterations: 0,
            n_old: Some(n_old),
        })
    }

    fn propose_rate_form(
        &self,
        h: &GridField,
        t: f64,
        dt: f64,
        hist: Option<&History>,
    ) -> Result<Proposal> {
        let s = &self.spectral;
        let p = &self.params;
        let (base, tau, mut guess) = match hist {
            Some(hs) => {
                let omega = dt / hs.dt;
                let (a0, a1, a2) = bdf2_weights(omega);
                let base = h.lincomb(-a1 / a0, &hs.h, -a2 / a0);
                let guess = h.lincomb(1.0 + omega, &hs.h, -omega);
                (base, dt / a0, guess)
            }
            None => (h.clone(), dt, h.clone()),
        };
        let phi = self.phi_at(t + dt)?;
        let base5 = s.deriv(&base, 5)?;
        let c = p.beta() / 12.0;
        let visco = p.delta() / 12.0;
        let stiff = tau * c;
        let max_iters = p.max_inner_iters();
        let mut w_prev: Option<GridField> = None;
        let mut total = 0;
        let mut change = f64::INFINITY;
        for _ in 0..max_iters {
            if guess.min() <= 0.0 {
                let (node, value) = guess.argmin();
                return Err(Error::PositivityViolation {
                    node,
                    t: t + dt,
                    value,
                });
            }
            let raw: Vec<f64> = guess
                .values()
                .iter()
                .zip(base5.values())
                .zip(phi.values())
                .map(|((&g, &d5), &phi)| g * g * g * (c * d5 - phi))
                .collect();
            let rhs = s.dealiased_divergence(&GridField::new(h.grid(), raw)?);
            let sol = solve_wdot(
                s,
                &guess,
                &rhs,
                visco,
                stiff,
                self.inner_tol(),
                max_iters,
                w_prev.as_ref(),
            )?;
            total += sol.iterations;
            let w = s.dealias(&sol.w);
            let h_new = base.lincomb(1.0, &w, tau);
            if let Some(node) = h_new.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { node });
            }
            change = h_new.sub(&guess).max_abs() / h_new.max_abs();
            guess = h_new;
            w_prev = Some(w);
            if change <= p.newton_tol() {
                // carry the mean exactly: the update has zero mean, so restore it bitwise-close
                let h_new = fix_mean(&guess, h);
                return Ok(Proposal {
                    state: FilmState::new(t + dt, h_new),
                    w: w_prev.expect("set above"),
                    dt,
                    inner_iterations: total,
                    n_old: None,
                });
            }
        }
        Err(Error::InnerDivergence {
            iters: total,
            residual: change,
        })
    }
}

/// Shifts `h_new` so that its mean equals that of `reference`.
fn fix_mean(h_new: &GridField, reference: &GridField) -> GridField {
    let n = h_new.len() as f64;
    let target = reference.values().iter().sum::<f64>() / n;
    let have = h_new.values().iter().sum::<f64>() / n;
    h_new.map(|v| v + (target - have))
}

/// One backward-Euler step (no history) with the model's own forcing.
pub fn step(state: &FilmState, dt: f64, params: &ModelParams, scheme: Scheme) -> Result<FilmState> {
    let stepper = Stepper::new(Spectral::new(state.h.grid()), params.clone(), scheme)?;
    Ok(stepper.propose(state, dt)?.state)
}
