//! Physical parameters to dimensionless groups.
//!
//! Scales: time `T = L/V`, pressure `P = mu V / L`. With `eps = H/L` the reduced
//! model sees `beta_hat = beta eps`, `delta_hat = delta eps^r`, `rho_hat = rho / eps`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Device parameters in any coherent unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(non_snake_case)]
pub struct PhysicalParams {
    pub rho_f: f64,
    pub rho_s: f64,
    pub mu: f64,
    pub V: f64,
    pub L: f64,
    pub H: f64,
    pub E: f64,
    pub b: f64,
    pub nu: f64,
    /// Wall viscosity coefficient.
    pub D: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho_f", self.rho_f),
            ("rho_s", self.rho_s),
            ("mu", self.mu),
            ("V", self.V),
            ("L", self.L),
            ("H", self.H),
            ("E", self.E),
            ("b", self.b),
            ("D", self.D),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        check_nu(self.nu)?;
        let eps = self.H / self.L;
        if !(eps < 1.0) {
            return Err(Error::EpsOutOfRange(eps));
        }
        Ok(())
    }

    pub fn eps(&self) -> f64 {
        self.H / self.L
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::InvalidParam(format!(
            "Poisson ratio must lie in (-1, 0.5), got {nu}"
        )));
    }
    Ok(())
}

/// Flexural rigidity `B = E b^3 / (12 (1 - nu^2))`.
pub fn bending_stiffness(e: f64, b: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    Ok(e * b.powi(3) / (12.0 * (1.0 - nu * nu)))
}

/// `L = sqrt(B eps / (V mu))`, the length for which `beta eps = 1`.
pub fn length_scale(bending: f64, eps: f64, v: f64, mu: f64) -> Result<f64> {
    for (name, x) in [("B", bending), ("eps", eps), ("V", v), ("mu", mu)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidParam(format!(
                "{name} must be positive, got {x}"
            )));
        }
    }
    Ok((bending * eps / (v * mu)).sqrt())
}

pub const R_MIN: f64 = 1.0;
pub const R_MAX: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessGroups {
    pub reynolds: f64,
    /// `rho_s b V / mu`
    pub rho: f64,
    /// `D / (mu L)`
    pub delta: f64,
    /// `B / (mu V L^2)`
    pub beta: f64,
    pub eps: f64,
    /// `ln delta / ln(1/eps)`, clamped to `[1, 3]`.
    pub r_fit: f64,
    /// Set when the raw fit fell outside `[1, 3]`.
    pub warning: Option<String>,
}

impl DimensionlessGroups {
    pub fn beta_hat(&self) -> f64 {
        self.beta * self.eps
    }

    pub fn delta_hat(&self) -> f64 {
        self.delta * self.eps.powf(self.r_fit)
    }

    pub fn rho_hat(&self) -> f64 {
        self.rho / self.eps
    }

    /// `name,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value\n");
        for (k, v) in [
            ("Re", self.reynolds),
            ("rho", self.rho),
            ("delta", self.delta),
            ("beta", self.beta),
            ("eps", self.eps),
            ("r_fit", self.r_fit),
            ("beta_hat", self.beta_hat()),
            ("delta_hat", self.delta_hat()),
            ("rho_hat", self.rho_hat()),
        ] {
            let _ = writeln!(out, "{k},{v:.16e}");
        }
        out
    }

    /// A solver configuration carrying the rescaled groups.
    pub fn solver_config(&self) -> String {
        let mut out = String::new();
        if let Some(w) = &self.warning {
            let _ = writeln!(out, "# warning: {w}");
        }
        let _ = writeln!(out, "[grid]\nn = 128\n");
        let _ = writeln!(
            out,
            "[params]\nbeta = {:.16e}\ndelta = {:.16e}\nr = {:.16e}\n",
            self.beta_hat(),
            self.delta_hat(),
            self.r_fit
        );
        let _ = writeln!(
            out,
            "[run]\nt_end = 1e-3\nscheme = bdf2\noutput_every = 100\n"
        );
        let _ = write!(out, "[init]\nh0 = 1 + 0.1*sin(2*pi*x)\n");
        out
    }
}

pub fn dimensionless_numbers(p: &PhysicalParams) -> Result<DimensionlessGroups> {
    p.validate()?;
    let eps = p.eps();
    let bending = bending_stiffness(p.E, p.b, p.nu)?;
    let delta = p.D / (p.mu * p.L);
    let raw_r = delta.ln() / (1.0 / eps).ln();
    let r_fit = raw_r.clamp(R_MIN, R_MAX);
    let warning = (r_fit != raw_r).then(|| {
        format!("fitted r = {raw_r:.4} lies outside [{R_MIN}, {R_MAX}]; clamped to {r_fit}")
    });
    Ok(DimensionlessGroups {
        reynolds: p.rho_f * p.V * p.L / p.mu,
        rho: p.rho_s * p.b * p.V / p.mu,
        delta,
        beta: bending / (p.mu * p.V * p.L * p.L),
        eps,
        r_fit,
        warning,
    })
}
