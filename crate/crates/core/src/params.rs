//! Model parameters and run configuration.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forcing::ForcingSpec;
use crate::grid::{GridField, PeriodicGrid};

pub const DEFAULT_H_FLOOR: f64 = 1e-8;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_INNER_ITERS: usize = 200;

/// Unvalidated parameter input, as read from a config file or built in code.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParams {
    pub beta: f64,
    pub delta: f64,
    pub r: f64,
    /// Explicit request for the viscoelastic term. Must agree with `r == 3` when set.
    pub chi: Option<bool>,
    pub forcing: ForcingSpec,
    pub h_floor: f64,
    pub newton_tol: f64,
    pub max_inner_iters: usize,
}

impl RawParams {
    pub fn new(beta: f64, delta: f64, r: f64) -> Self {
        Self {
            beta,
            delta,
            r,
            chi: None,
            forcing: ForcingSpec::zero(),
            h_floor: DEFAULT_H_FLOOR,
            newton_tol: DEFAULT_NEWTON_TOL,
            max_inner_iters: DEFAULT_MAX_INNER_ITERS,
        }
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }
}

/// Validated dimensionless groups and solver tolerances.
///
/// `chi` is derived from `r` and cannot be set independently.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    beta: f64,
    delta: f64,
    r: f64,
    chi: bool,
    forcing: ForcingSpec,
    h_floor: f64,
    newton_tol: f64,
    max_inner_iters: usize,
}

impl ModelParams {
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn chi(&self) -> bool {
        self.chi
    }
    /// `delta` when the viscoelastic term is active, zero otherwise.
    pub fn chi_delta(&self) -> f64 {
        if self.chi {
            self.delta
        } else {
            0.0
        }
    }
    pub fn forcing(&self) -> &ForcingSpec {
        &self.forcing
    }
    pub fn h_floor(&self) -> f64 {
        self.h_floor
    }
    pub fn newton_tol(&self) -> f64 {
        self.newton_tol
    }
    pub fn max_inner_iters(&self) -> usize {
        self.max_inner_iters
    }

    pub fn to_raw(&self) -> RawParams {
        RawParams {
            beta: self.beta,
            delta: self.delta,
            r: self.r,
            chi: Some(self.chi),
            forcing: self.forcing.clone(),
            h_floor: self.h_floor,
            newton_tol: self.newton_tol,
            max_inner_iters: self.max_inner_iters,
        }
    }

    pub fn with_forcing(&self, forcing: ForcingSpec) -> Self {
        Self {
            forcing,
            ..self.clone()
        }
    }

    pub fn with_h_floor(&self, h_floor: f64) -> Result<Self> {
        let mut raw = self.to_raw();
        raw.h_floor = h_floor;
        validate_params(raw)
    }
}

pub fn validate_params(raw: RawParams) -> Result<ModelParams> {
    let bad = |m: String| Err(Error::InvalidParam(m));
    if !(raw.beta.is_finite() && raw.beta > 0.0) {
        return bad(format!("beta must be positive, got {}", raw.beta));
    }
    if !(raw.delta.is_finite() && raw.delta >= 0.0) {
        return bad(format!("delta must be nonnegative, got {}", raw.delta));
    }
    if !(1.0..=3.0).contains(&raw.r) {
        return bad(format!("r out of [1,3]: {}", raw.r));
    }
    let chi = raw.r == 3.0;
    if let Some(requested) = raw.chi {
        if requested != chi {
            return bad(format!("chi = {requested} conflicts with r = {}", raw.r));
        }
    }
    if chi && raw.delta == 0.0 {
        return bad("chi requires delta > 0 (r = 3 with delta = 0)".into());
    }
    if !(raw.h_floor.is_finite() && raw.h_floor > 0.0) {
        return bad(format!("h_floor must be positive, got {}", raw.h_floor));
    }
    if !(raw.newton_tol.is_finite() && raw.newton_tol > 0.0) {
        return bad(format!(
            "newton_tol must be positive, got {}",
            raw.newton_tol
        ));
    }
    if raw.max_inner_iters == 0 {
        return bad("max_inner_iters must be at least 1".into());
    }
    Ok(ModelParams {
        beta: raw.beta,
        delta: raw.delta,
        r: raw.r,
        chi,
        forcing: raw.forcing,
        h_floor: raw.h_floor,
        newton_tol: raw.newton_tol,
        max_inner_iters: raw.max_inner_iters,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler.
    Be,
    /// Variable-step second-order backward differentiation.
    Bdf2,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Be => 1,
            Scheme::Bdf2 => 2,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Be => "be",
            Scheme::Bdf2 => "bdf2",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "be" | "euler" | "backward-euler" => Ok(Scheme::Be),
            "bdf2" => Ok(Scheme::Bdf2),
            other => Err(Error::InvalidParam(format!(
                "unknown scheme `{other}` (expected be or bdf2)"
            ))),
        }
    }
}

/// Initial film height: a closed-form expression in `x` or tabulated nodal values.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Expr(Expr),
    Table(Vec<f64>),
}

impl InitialSpec {
    pub fn evaluate(&self, grid: PeriodicGrid) -> Result<GridField> {
        let field = match self {
            InitialSpec::Expr(e) => {
                if e.uses(crate::expr::Var::Y) || e.uses(crate::expr::Var::T) {
                    return Err(Error::InvalidParam(format!(
                        "initial profile `{e}` may only depend on x"
                    )));
                }
                grid.sample(|x| e.eval(x, 0.0, 0.0))
            }
            InitialSpec::Table(v) => GridField::new(grid, v.clone())?,
        };
        if !field.is_finite() {
            return Err(Error::InvalidParam("initial profile is not finite".into()));
        }
        let (node, min) = field.argmin();
        if min <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "initial profile must be positive; h0 = {min} at node {node}"
            )));
        }
        Ok(field)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: PeriodicGrid,
    pub params: ModelParams,
    pub dt0: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub output_every: usize,
    pub initial: InitialSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt0.is_finite() && self.dt0 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "dt0 must be positive, got {}",
                self.dt0
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParam(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidParam(
                "output_every must be at least 1".into(),
            ));
        }
        self.initial.evaluate(self.grid)?;
        Ok(())
    }

    /// Default first step: `0.1 * 12 / (beta * max h0^3) * (n/2)^-6 * 10`.
    pub fn default_dt0(grid: PeriodicGrid, params: &ModelParams, h0: &GridField) -> f64 {
        const SAFETY: f64 = 10.0;
        let hmax3 = h0.max().powi(3);
        let half = grid.n() as f64 / 2.0;
        0.1 * (12.0 / (params.beta() * hmax3)) * half.powi(-6) * SAFETY
    }
}
